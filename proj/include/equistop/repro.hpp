#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace equistop {

struct ReproOptions {
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 42;
  // Grid size for fig1 on [-4, 4]; 8001 gives h = 1e-3.
  std::size_t fig1_nodes = 8001;
};

struct ReproResult {
  bool pass = false;
  std::vector<std::filesystem::path> files;
};

const std::vector<std::string>& ReproTargets();

// Runs one target, writes its artifacts and a manifest to out_dir and prints
// a short summary. Throws ConfigError for an unknown target.
ReproResult RunRepro(const std::string& target, const ReproOptions& opts,
                     std::ostream& log);

}  // namespace equistop
