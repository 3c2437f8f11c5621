#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace dynroc::cli {

/// Provenance record written next to every output set.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::uint64_t seed = 0;

  /// Writes manifest.json into `dir`, hashing inputs and outputs.
  void write(const std::filesystem::path& dir) const;
};

std::string sha256_file(const std::filesystem::path& path);

}  // namespace dynroc::cli
