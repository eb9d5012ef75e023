#include "memaudit/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "memaudit/error.hpp"

namespace memaudit {

namespace {

constexpr std::size_t kCifarRecordBytes = 3073;  // 1 label + 32*32*3 pixels

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw_error(ErrorCategory::Format, "cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> buf(static_cast<std::size_t>(size));
  in.read(buf.data(), size);
  if (!in)
    throw_error(ErrorCategory::Format, "short read on file: " + path);
  return buf;
}

// float32 little-endian <-> double. Assumes a little-endian host, checked at
// ingest time.
bool host_is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char byte;
  std::memcpy(&byte, &probe, 1);
  return byte == 1;
}

}  // namespace

void Dataset::validate() const {
  if (ids.size() != images.size())
    throw_error(ErrorCategory::State, "dataset: ids/images size mismatch");
  if (labels && labels->size() != images.size())
    throw_error(ErrorCategory::State, "dataset: labels/images size mismatch");
  std::unordered_set<int> seen;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= ids.size() || !seen.insert(id).second)
      throw_error(ErrorCategory::State, "dataset: ids must be unique and dense");
  }
  for (std::size_t i = 1; i < images.size(); ++i)
    if (!images[i].same_shape(images[0]))
      throw_error(ErrorCategory::State, "dataset: images must share one shape");
}

Dataset ingest_cifar10(const std::vector<std::string>& paths) {
  Dataset out;
  out.labels.emplace();
  nlohmann::json sources = nlohmann::json::array();
  int next_id = 0;
  for (const std::string& path : paths) {
    const std::vector<char> buf = read_file(path);
    if (buf.size() % kCifarRecordBytes != 0)
      throw_error(ErrorCategory::Format,
                  "cifar10 file size not a multiple of 3073 at byte offset " +
                      std::to_string(buf.size() - buf.size() % kCifarRecordBytes) +
                      ": " + path);
    const std::size_t records = buf.size() / kCifarRecordBytes;
    nlohmann::json offsets = nlohmann::json::array();
    for (std::size_t r = 0; r < records; ++r) {
      const std::size_t off = r * kCifarRecordBytes;
      const auto* rec = reinterpret_cast<const unsigned char*>(buf.data() + off);
      const int label = rec[0];
      if (label > 9)
        throw_error(ErrorCategory::Format,
                    "cifar10 label " + std::to_string(label) +
                        " > 9 at byte offset " + std::to_string(off));
      Image img(32, 32, 3);
      // Planar R, G, B planes of 1024 bytes each.
      for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 32; ++y)
          for (int x = 0; x < 32; ++x)
            img.at(y, x, ch) = rec[1 + ch * 1024 + y * 32 + x] / 255.0;
      out.images.push_back(std::move(img));
      out.labels->push_back(label);
      out.ids.push_back(next_id++);
      offsets.push_back(off);
    }
    sources.push_back({{"file", path}, {"record_offsets", offsets}});
  }
  out.manifest = {{"format", "cifar10-binary"},
                  {"num_classes", 10},
                  {"sources", sources}};
  out.validate();
  return out;
}

Dataset ingest_raw(const std::string& tensor_path,
                   const std::string& manifest_path,
                   std::size_t* clamped_count) {
  if (!host_is_little_endian())
    throw_error(ErrorCategory::Format, "raw tensor ingest requires a little-endian host");
  nlohmann::json manifest;
  {
    std::ifstream in(manifest_path);
    if (!in)
      throw_error(ErrorCategory::Format, "cannot open manifest: " + manifest_path);
    in >> manifest;
  }
  for (const char* key : {"n", "h", "w", "c"})
    if (!manifest.contains(key))
      throw_error(ErrorCategory::Format,
                  std::string("manifest missing key: ") + key);
  const std::size_t n = manifest["n"].get<std::size_t>();
  const int h = manifest["h"].get<int>();
  const int w = manifest["w"].get<int>();
  const int c = manifest["c"].get<int>();
  const std::size_t per_image = static_cast<std::size_t>(h) * w * c;

  const std::vector<char> buf = read_file(tensor_path);
  if (buf.size() != n * per_image * sizeof(float))
    throw_error(ErrorCategory::Format,
                "tensor file holds " + std::to_string(buf.size() / sizeof(float)) +
                    " floats, manifest declares " + std::to_string(n * per_image));

  Dataset out;
  std::size_t clamped = 0;
  const auto* floats = reinterpret_cast<const float*>(buf.data());
  for (std::size_t i = 0; i < n; ++i) {
    Image img(h, w, c);
    for (std::size_t j = 0; j < per_image; ++j) {
      double v = static_cast<double>(floats[i * per_image + j]);
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        ++clamped;
      }
      img.pixels[j] = v;
    }
    out.images.push_back(std::move(img));
    out.ids.push_back(static_cast<int>(i));
  }
  if (manifest.contains("labels")) {
    out.labels = manifest["labels"].get<std::vector<int>>();
    if (out.labels->size() != n)
      throw_error(ErrorCategory::Format, "manifest labels length mismatch");
  }
  out.manifest = {{"format", "raw-float32"},
                  {"source", tensor_path},
                  {"n", n}, {"h", h}, {"w", w}, {"c", c}};
  if (clamped_count) *clamped_count = clamped;
  out.validate();
  return out;
}

void export_raw(const Dataset& data, const std::string& tensor_path,
                const std::string& manifest_path) {
  if (!host_is_little_endian())
    throw_error(ErrorCategory::Format, "raw tensor export requires a little-endian host");
  const int h = data.images.empty() ? 0 : data.images[0].h;
  const int w = data.images.empty() ? 0 : data.images[0].w;
  const int c = data.images.empty() ? 0 : data.images[0].c;
  std::ofstream out(tensor_path, std::ios::binary);
  if (!out)
    throw_error(ErrorCategory::Format, "cannot write tensor file: " + tensor_path);
  for (const Image& img : data.images) {
    for (double v : img.pixels) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
  }
  nlohmann::json manifest = {{"format_version", 1},
                             {"n", data.images.size()},
                             {"h", h}, {"w", w}, {"c", c}};
  if (data.labels) manifest["labels"] = *data.labels;
  std::ofstream mout(manifest_path);
  if (!mout)
    throw_error(ErrorCategory::Format, "cannot write manifest: " + manifest_path);
  mout << manifest.dump(2) << "\n";
}

}  // namespace memaudit
