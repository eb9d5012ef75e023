#include "memaudit/checkpoint.hpp"

#include <cstdint>
#include <fstream>

#include "memaudit/error.hpp"

namespace memaudit {

nlohmann::json arch_to_json(const ArchConfig& arch) {
  return {{"h", arch.h},
          {"w", arch.w},
          {"c", arch.c},
          {"hidden", arch.hidden},
          {"time_embed_dim", arch.time_embed_dim},
          {"conditioning", to_string(arch.conditioning)},
          {"num_classes", arch.num_classes}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig arch;
  arch.h = j.at("h").get<int>();
  arch.w = j.at("w").get<int>();
  arch.c = j.at("c").get<int>();
  arch.hidden = j.at("hidden").get<std::vector<int>>();
  arch.time_embed_dim = j.at("time_embed_dim").get<int>();
  arch.conditioning = conditioning_from_string(j.at("conditioning").get<std::string>());
  arch.num_classes = j.at("num_classes").get<int>();
  arch.validate();
  return arch;
}

void save_checkpoint(const std::string& path, const DenoiserModel& model,
                     const nlohmann::json& header) {
  nlohmann::json full = header;
  full["format_version"] = 1;
  full["arch"] = arch_to_json(model.arch());
  full["param_count"] = model.param_count();
  const std::string hdr = full.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw_error(ErrorCategory::Format, "cannot write checkpoint: " + path);
  const std::uint64_t len = hdr.size();
  char len_bytes[8];
  for (int i = 0; i < 8; ++i)
    len_bytes[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  out.write(len_bytes, 8);
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  for (double v : model.theta()) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
  if (!out)
    throw_error(ErrorCategory::Format, "write failed for checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw_error(ErrorCategory::Format, "cannot open checkpoint: " + path);
  char len_bytes[8];
  in.read(len_bytes, 8);
  if (!in)
    throw_error(ErrorCategory::Format, "checkpoint truncated in length prefix");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(len_bytes[i])) << (8 * i);
  std::string hdr(len, '\0');
  in.read(hdr.data(), static_cast<std::streamsize>(len));
  if (!in)
    throw_error(ErrorCategory::Format, "checkpoint truncated in header");

  Checkpoint ckpt;
  ckpt.header = nlohmann::json::parse(hdr, nullptr, false);
  if (ckpt.header.is_discarded())
    throw_error(ErrorCategory::Format, "checkpoint header is not valid JSON");
  ckpt.model = DenoiserModel(arch_from_json(ckpt.header.at("arch")));

  const std::size_t n = ckpt.header.at("param_count").get<std::size_t>();
  if (n != ckpt.model.param_count())
    throw_error(ErrorCategory::Format, "checkpoint param_count mismatch with arch");
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    in.read(reinterpret_cast<char*>(&f), sizeof(float));
    if (!in)
      throw_error(ErrorCategory::Format, "checkpoint truncated in parameter blob");
    ckpt.model.theta()[i] = static_cast<double>(f);
  }
  return ckpt;
}

NoiseSchedule schedule_from_header(const nlohmann::json& header) {
  const auto& s = header.at("schedule");
  return make_schedule(s.at("T").get<int>(), s.at("beta_min").get<double>(),
                       s.at("beta_max").get<double>());
}

}  // namespace memaudit
