#include "config.hpp"

#include <fstream>

#include "memaudit/error.hpp"
#include "memaudit/synth.hpp"

namespace memaudit::cli {

namespace {

// Defaults double as the schema: a key is legal exactly when the defaults
// document contains it (dataset keys are the union over kinds).
const nlohmann::json& default_doc() {
  static const nlohmann::json doc = {
      {"format_version", 1},
      {"seed", 1},
      {"out", "run"},
      {"dataset",
       {{"kind", "synth"},
        {"n", 512},
        {"h", 16},
        {"w", 16},
        {"c", 1},
        {"seed", 0},
        {"duplicate_counts", nlohmann::json::array()},
        {"labeled", false},
        {"num_classes", 2},
        {"paths", nlohmann::json::array()},
        {"tensor", ""},
        {"manifest", ""}}},
      {"schedule", {{"T", 100}, {"beta_min", 1e-3}, {"beta_max", 0.2}}},
      {"arch",
       {{"hidden", {256, 256}},
        {"time_embed_dim", 32},
        {"conditioning", "unconditional"},
        {"num_classes", 0}}},
      {"train",
       {{"steps", 2000},
        {"batch_size", 32},
        {"learning_rate", 1e-3},
        {"seed", 0},
        {"flip_augment", false},
        {"clip_norm", nullptr},
        {"noise_multiplier", nullptr},
        {"checkpoint_every", 0}}},
      {"generate",
       {{"checkpoint", ""}, {"count", 64}, {"stride", 1}, {"label", -1}}},
      {"extract",
       {{"checkpoint", ""},
        {"n_generations", 1024},
        {"generations_per_batch", 64},
        {"stride", 1},
        {"label", -1},
        {"alpha", 0.5},
        {"n_neighbors", 50},
        {"score_cutoff", 0.5},
        {"delta_extract", 0.15},
        {"delta_eidetic", 0.1},
        {"clique_threshold", 0.1},
        {"clique_min", 10},
        {"grid_rows", 2},
        {"grid_cols", 2}}},
      {"mia",
       {{"shadow_count", 8},
        {"split", 0.5},
        {"t", 0},
        {"n_noise", 1},
        {"use_flip", false},
        {"per_example_variance", true},
        {"fpr", {0.01, 0.1}},
        {"t_list", nlohmann::json::array()}}},
      {"inpaint",
       {{"mask_kind", "left-half"},
        {"mask_fraction", 0.6},
        {"n", 200},
        {"top_k", 10},
        {"t", 0},
        {"n_noise", 5},
        {"jump_len", 10},
        {"n_resample", 2},
        {"stride", 1},
        {"n_targets", 20}}},
      {"dedup",
       {{"threshold", 0.85},
        {"experiment", false},
        {"n_generations", 1024},
        {"generations_per_batch", 64},
        {"stride", 1}}},
      {"canary",
       {{"pool_size", 256},
        {"duplicate_counts", nlohmann::json::array()},
        {"t", 0},
        {"n_noise", 20}}},
  };
  return doc;
}

void check_known_keys(const nlohmann::json& doc, const nlohmann::json& schema,
                      const std::string& path) {
  if (!doc.is_object()) return;
  for (const auto& [key, value] : doc.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!schema.contains(key))
      throw_error(ErrorCategory::Config, "unknown config key: " + here);
    if (value.is_object()) check_known_keys(value, schema.at(key), here);
  }
}

nlohmann::json merged_with_defaults(const nlohmann::json& doc) {
  nlohmann::json out = default_doc();
  out.merge_patch(doc);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  return ExperimentConfig{default_doc()};
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCategory::Config, "cannot open config: " + path);
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw_error(ErrorCategory::Format, "config is not valid JSON: " + path);
  check_known_keys(doc, default_doc(), "");
  ExperimentConfig cfg{merged_with_defaults(doc)};
  cfg.validate();
  return cfg;
}

void ExperimentConfig::apply_override(const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw_error(ErrorCategory::Config,
                "override must look like key.path=value: " + key_eq_value);
  const std::string dotted = key_eq_value.substr(0, eq);
  const std::string raw = key_eq_value.substr(eq + 1);

  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  // Walk the dotted path, validating each segment against the schema.
  nlohmann::json* node = &doc;
  const nlohmann::json* schema = &default_doc();
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (key.empty() || !schema->contains(key))
      throw_error(ErrorCategory::Config, "unknown config key: " + dotted);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    schema = &schema->at(key);
    start = dot + 1;
  }
}

void ExperimentConfig::validate() const {
  check_known_keys(doc, default_doc(), "");
  if (doc.at("format_version").get<int>() != 1)
    throw_error(ErrorCategory::Config, "unsupported config format_version");
  const std::string kind = doc.at("dataset").at("kind").get<std::string>();
  if (kind != "synth" && kind != "cifar10" && kind != "raw")
    throw_error(ErrorCategory::Config, "dataset.kind must be synth, cifar10 or raw");
  schedule();  // parameter sanity via make_schedule
  training();
}

std::uint64_t ExperimentConfig::master_seed() const {
  return doc.at("seed").get<std::uint64_t>();
}

std::string ExperimentConfig::out_name() const {
  return doc.at("out").get<std::string>();
}

Dataset ExperimentConfig::load_dataset() const {
  const nlohmann::json& d = doc.at("dataset");
  const std::string kind = d.at("kind").get<std::string>();
  if (kind == "synth") {
    SynthConfig cfg;
    cfg.n = d.at("n").get<int>();
    cfg.h = d.at("h").get<int>();
    cfg.w = d.at("w").get<int>();
    cfg.c = d.at("c").get<int>();
    cfg.seed = d.at("seed").get<std::uint64_t>();
    cfg.duplicate_counts = d.at("duplicate_counts").get<std::vector<int>>();
    cfg.labeled = d.at("labeled").get<bool>();
    cfg.num_classes = d.at("num_classes").get<int>();
    return synth_blobs(cfg).data;
  }
  if (kind == "cifar10")
    return ingest_cifar10(d.at("paths").get<std::vector<std::string>>());
  return ingest_raw(d.at("tensor").get<std::string>(),
                    d.at("manifest").get<std::string>());
}

NoiseSchedule ExperimentConfig::schedule() const {
  const nlohmann::json& s = doc.at("schedule");
  return make_schedule(s.at("T").get<int>(), s.at("beta_min").get<double>(),
                       s.at("beta_max").get<double>());
}

ArchConfig ExperimentConfig::arch_for(const Dataset& data) const {
  if (data.images.empty())
    throw_error(ErrorCategory::Config, "dataset is empty, no image shape");
  const nlohmann::json& a = doc.at("arch");
  ArchConfig arch;
  arch.h = data.images[0].h;
  arch.w = data.images[0].w;
  arch.c = data.images[0].c;
  arch.hidden = a.at("hidden").get<std::vector<int>>();
  arch.time_embed_dim = a.at("time_embed_dim").get<int>();
  arch.conditioning =
      conditioning_from_string(a.at("conditioning").get<std::string>());
  arch.num_classes = a.at("num_classes").get<int>();
  arch.validate();
  return arch;
}

TrainingConfig ExperimentConfig::training() const {
  nlohmann::json t = doc.at("train");
  // Defaults carry explicit nulls so overrides can unset the DP knobs.
  if (t.contains("clip_norm") && t["clip_norm"].is_null()) t.erase("clip_norm");
  if (t.contains("noise_multiplier") && t["noise_multiplier"].is_null())
    t.erase("noise_multiplier");
  return TrainingConfig::from_json(t);
}

const nlohmann::json& ExperimentConfig::section(const std::string& name) const {
  return doc.at(name);
}

}  // namespace memaudit::cli
