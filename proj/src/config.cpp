#include "equistop/config.hpp"

#include <Eigen/Core>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "equistop/builtins.hpp"
#include "equistop/errors.hpp"

namespace equistop {

namespace {

template <typename T>
T Get(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(fmt::format("missing key '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
  }
}

template <typename T>
T GetOr(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? Get<T>(j, key) : fallback;
}

BoundaryKind ParseBoundary(const std::string& s) {
  if (s == "absorbing") return BoundaryKind::kAbsorbing;
  if (s == "truncation") return BoundaryKind::kTruncation;
  throw ConfigError(fmt::format("unknown boundary '{}'", s));
}

DiffusionModel ParseModel(const Json& m) {
  const std::string kind = GetOr<std::string>(m, "kind", "wiener");
  const double lo = Get<double>(m, "lo");
  const double hi = Get<double>(m, "hi");
  const BoundaryKind left = ParseBoundary(GetOr<std::string>(m, "left", "truncation"));
  const BoundaryKind right =
      ParseBoundary(GetOr<std::string>(m, "right", "truncation"));
  if (kind == "wiener") return builtins::Wiener(lo, hi, left, right);
  if (kind == "arithmetic") {
    return DiffusionModel::Arithmetic(GetOr(m, "mu", 0.0), GetOr(m, "sigma", 1.0),
                                      lo, hi, left, right);
  }
  if (kind == "gbm") {
    return DiffusionModel::Geometric(GetOr(m, "mu", 0.0), GetOr(m, "sigma", 1.0),
                                     lo, hi, left, right);
  }
  throw ConfigError(fmt::format("unknown model kind '{}'", kind));
}

ChainModel ParseChain(const Json& c) {
  const auto states = Get<std::vector<double>>(c, "states");
  const auto P = Get<std::vector<std::vector<double>>>(c, "P");
  if (P.size() != states.size()) throw ConfigError("P rows != states");
  std::vector<std::vector<Transition>> rows(states.size());
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P[i].size() != states.size()) throw ConfigError("P is not square");
    for (std::size_t k = 0; k < P[i].size(); ++k) {
      if (P[i][k] < 0.0) throw ConfigError("negative transition probability");
      if (P[i][k] > 0.0) rows[i].push_back({k, P[i][k]});
    }
  }
  const double dt = GetOr(c, "dt", 1.0);
  return ChainModel(states, std::move(rows),
                    std::vector<double>(states.size(), dt));
}

std::function<double(double)> HabitG(const std::string& name) {
  if (name == "zero") return [](double) { return 0.0; };
  if (name == "arccot_minus_half_pi") return builtins::HabitWithMemory().g;
  throw ConfigError(fmt::format("unknown habit g '{}'", name));
}

}  // namespace

ChainModel ProblemConfig::BuildChain() const {
  if (chain) return *chain;
  if (!model || !grid) throw ConfigError("need either 'chain' or 'model' + 'grid'");
  return MakeChainFromDiffusion(*model, *grid);
}

ProblemConfig ParseProblem(const Json& j) {
  ProblemConfig cfg;
  cfg.raw = j;
  if (!j.contains("reward")) throw ConfigError("missing key 'reward'");
  const Json& rw = j.at("reward");
  const std::string kind = Get<std::string>(rw, "kind");
  const bool has_r = j.contains("r");
  const double r_in = has_r ? Get<double>(j, "r") : 0.0;
  if (r_in < 0.0) throw ConfigError("r must be >= 0");

  if (kind == "optimistic_call_put") {
    double c = rw.contains("c") ? Get<double>(rw, "c")
                                : (has_r ? std::sqrt(2.0 * r_in) : 1.0);
    if (has_r && std::abs(0.5 * c * c - r_in) > 1e-12) {
      throw ConfigError(fmt::format("r = {} does not match c^2/2 = {}", r_in,
                                    0.5 * c * c));
    }
    cfg.c = c;
    cfg.reward = builtins::OptimisticCallPut(c);
  } else if (kind == "state_dependent_strike") {
    const double K0 = Get<double>(rw, "K0");
    const double rate = GetOr(rw, "rate", 0.0);
    const double rr = r_in;
    cfg.reward = builtins::StateDependentStrike(
        K0, rate, rr, GetOr(rw, "positive_part", false));
    if (rr > 0.0) {
      std::optional<double> a;
      if (rw.contains("a")) a = Get<double>(rw, "a");
      cfg.representation = builtins::StateDependentStrikeRep(K0, rate, rr, a);
    }
  } else if (kind == "habit_exponential") {
    HabitParams p;
    p.a = GetOr(rw, "a", p.a);
    p.k = GetOr(rw, "k", p.k);
    p.sigma = GetOr(rw, "sigma", p.sigma);
    if (has_r) p.r = r_in;
    p.g_name = GetOr<std::string>(rw, "g", "zero");
    p.g = HabitG(p.g_name);
    cfg.habit = p;
    cfg.reward = builtins::HabitReward(p);
  } else if (kind == "distance_penalty") {
    cfg.reward = builtins::DistancePenalty(GetOr(rw, "lo", 0.0), GetOr(rw, "hi", 1.0));
  } else if (kind == "table") {
    cfg.reward = builtins::TableReward(
        Get<std::vector<double>>(rw, "states"),
        Get<std::vector<std::vector<double>>>(rw, "F"), r_in);
  } else {
    throw ConfigError(fmt::format("unknown reward kind '{}'", kind));
  }
  if (has_r && kind != "optimistic_call_put") cfg.reward.r = r_in;

  if (j.contains("model")) cfg.model = ParseModel(j.at("model"));
  if (j.contains("grid")) {
    const Json& g = j.at("grid");
    cfg.grid = Grid(Get<double>(g, "lo"), Get<double>(g, "hi"),
                    Get<std::size_t>(g, "n"));
  }
  if (j.contains("chain")) cfg.chain = ParseChain(j.at("chain"));
  if (cfg.grid) {
    const std::vector<double> nodes = cfg.grid->Nodes();
    cfg.reward.Validate(nodes, nodes);
  } else if (cfg.chain) {
    cfg.reward.Validate(cfg.chain->states(), cfg.chain->states());
  }
  return cfg;
}

Json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ProblemConfig LoadProblem(const std::filesystem::path& path) {
  return ParseProblem(ReadJson(path));
}

CandidateSolution CandidateFromConfig(const ProblemConfig& cfg) {
  const double shift =
      cfg.raw.contains("candidate") ? GetOr(cfg.raw.at("candidate"), "shift", 0.0)
                                    : 0.0;
  if (cfg.c) return builtins::OptimisticCandidate(*cfg.c, shift);
  if (cfg.habit) {
    const double x_star = HabitThreshold(*cfg.habit);
    return builtins::HabitCandidate(*cfg.habit, x_star, shift);
  }
  throw ConfigError(fmt::format("no closed-form candidate for reward '{}'",
                                cfg.reward.name));
}

std::uint64_t ConfigHash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json Manifest(const std::string& target, const Json& config,
              std::uint64_t seed) {
  Json m;
  m["target"] = target;
  m["config"] = config;
  m["config_hash"] = fmt::format("{:016x}", ConfigHash(config));
  m["seed"] = seed;
  m["equistop_version"] = EQUISTOP_VERSION;
  m["compiler"] = std::string(__VERSION__);
  m["eigen_version"] = fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION,
                                   EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  m["fmt_version"] = FMT_VERSION;
  return m;
}

std::string FormatNumber(double v) { return fmt::format("{}", v); }

void WriteCsv(const std::filesystem::path& path,
              const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  for (std::size_t k = 0; k < header.size(); ++k) {
    out << (k ? "," : "") << header[k];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      out << (k ? "," : "") << FormatNumber(row[k]);
    }
    out << '\n';
  }
}

void WriteJson(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

StoppingSet ReadMask(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path.string()));
  StoppingSet S(n);
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    if (cell != "0" && cell != "1") continue;  // header
    if (i >= n) throw ConfigError("mask has more entries than nodes");
    S.set(i++, cell == "1");
  }
  if (i != n) {
    throw ConfigError(fmt::format("mask has {} entries, expected {}", i, n));
  }
  return S;
}

}  // namespace equistop
