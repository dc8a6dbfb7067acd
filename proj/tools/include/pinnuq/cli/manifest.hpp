#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pinnuq::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the run directory, generic separators
  std::uintmax_t bytes = 0;
  std::string sha256;
};

/// Every regular file under `dir` except manifest.json, sorted by path.
std::vector<ManifestEntry> collect_manifest(const std::filesystem::path& dir);
/// Writes <dir>/manifest.json and returns its path.
std::filesystem::path write_manifest(const std::filesystem::path& dir);

}  // namespace pinnuq::cli
