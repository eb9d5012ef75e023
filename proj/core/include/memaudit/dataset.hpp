#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memaudit/image.hpp"

namespace memaudit {

// An ingested image corpus with stable dense ids and a provenance manifest.
struct Dataset {
  std::vector<Image> images;
  std::optional<std::vector<int>> labels;
  std::vector<int> ids;
  nlohmann::json manifest = nlohmann::json::object();

  std::size_t size() const { return images.size(); }
  void validate() const;
};

// Standard CIFAR-10 binary layout: 3073-byte records, 1 label byte followed
// by 3072 pixel bytes (32x32 row-major, R plane then G then B). Pixels are
// mapped to [0,1] by byte/255.
Dataset ingest_cifar10(const std::vector<std::string>& paths);

// Raw tensor interchange: little-endian float32 file of shape (N,H,W,C)
// declared in a JSON manifest. Values outside [0,1] are clamped; the number
// of clamped values is reported through *clamped_count when non-null.
Dataset ingest_raw(const std::string& tensor_path,
                   const std::string& manifest_path,
                   std::size_t* clamped_count = nullptr);
void export_raw(const Dataset& data, const std::string& tensor_path,
                const std::string& manifest_path);

}  // namespace memaudit
