#pragma once

#include <string>

#include <json.hpp>

#include "memaudit/model.hpp"
#include "memaudit/schedule.hpp"

namespace memaudit {

nlohmann::json arch_to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const nlohmann::json& j);

// Checkpoint file layout: 8-byte little-endian unsigned header length,
// UTF-8 JSON header, then the parameter vector as contiguous little-endian
// float32. The header carries the format version, arch descriptor, schedule
// parameters, training config snapshot, step count, and RNG seed.
struct Checkpoint {
  nlohmann::json header;
  DenoiserModel model;
};

void save_checkpoint(const std::string& path, const DenoiserModel& model,
                     const nlohmann::json& header);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the schedule recorded in a checkpoint header.
NoiseSchedule schedule_from_header(const nlohmann::json& header);

}  // namespace memaudit
