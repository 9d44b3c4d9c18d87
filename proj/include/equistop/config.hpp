#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "equistop/core_model.hpp"
#include "equistop/one_sided.hpp"
#include "equistop/vi_verifier.hpp"

namespace equistop {

using Json = nlohmann::json;

// A problem read from JSON:
//   {"reward": {"kind": ..., params}, "r": real,
//    "model": {"kind": "wiener" | "arithmetic" | "gbm", "mu", "sigma",
//              "lo", "hi", "left", "right"},
//    "grid": {"lo", "hi", "n"},
//    "chain": {"states": [...], "P": [[...]], "dt": real}}
struct ProblemConfig {
  Json raw;
  RewardSpec reward;
  std::optional<DiffusionModel> model;
  std::optional<Grid> grid;
  std::optional<ChainModel> chain;
  // Set for the reward kinds that carry extra structure.
  std::optional<double> c;
  std::optional<HabitParams> habit;
  std::optional<MaxRepresentation> representation;

  // Explicit chain, or the diffusion approximation on the grid.
  ChainModel BuildChain() const;
};

ProblemConfig ParseProblem(const Json& j);
ProblemConfig LoadProblem(const std::filesystem::path& path);
Json ReadJson(const std::filesystem::path& path);

// Closed-form candidate for rewards that have one; "candidate": {"shift": s}
// moves the boundary.
CandidateSolution CandidateFromConfig(const ProblemConfig& cfg);

// FNV-1a over the compact dump (keys sorted).
std::uint64_t ConfigHash(const Json& j);

Json Manifest(const std::string& target, const Json& config,
              std::uint64_t seed);

// Shortest round-trip decimal, locale independent.
std::string FormatNumber(double v);

void WriteCsv(const std::filesystem::path& path,
              const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows);
void WriteJson(const std::filesystem::path& path, const Json& j);

// Stopping mask from a CSV with one 0/1 per line (or "x,stop" pairs).
StoppingSet ReadMask(const std::filesystem::path& path, std::size_t n);

}  // namespace equistop
