#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace memaudit {

// Minimal SHA-256, used for artifact hashes in run manifests.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file_hex(const std::string& path);

}  // namespace memaudit
