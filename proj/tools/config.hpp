#pragma once

#include <string>

#include <json.hpp>

#include "memaudit/dataset.hpp"
#include "memaudit/model.hpp"
#include "memaudit/schedule.hpp"
#include "memaudit/train.hpp"

namespace memaudit::cli {

// Full experiment configuration as validated JSON. Unknown keys anywhere in
// the document are rejected so typos fail loudly.
struct ExperimentConfig {
  nlohmann::json doc;

  static ExperimentConfig defaults();
  static ExperimentConfig load(const std::string& path);

  // Dotted-path override, e.g. "train.steps=4000". The value is parsed as
  // JSON when possible, otherwise taken as a string.
  void apply_override(const std::string& key_eq_value);
  void validate() const;

  std::uint64_t master_seed() const;
  std::string out_name() const;

  Dataset load_dataset() const;
  NoiseSchedule schedule() const;
  // Image shape comes from the dataset, the rest from the "arch" section.
  ArchConfig arch_for(const Dataset& data) const;
  TrainingConfig training() const;

  const nlohmann::json& section(const std::string& name) const;
};

}  // namespace memaudit::cli
