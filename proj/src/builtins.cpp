#include "equistop/builtins.hpp"

#include <cmath>
#include <numbers>

#include "equistop/errors.hpp"
#include "equistop/forward_iteration.hpp"

namespace equistop::builtins {

RewardSpec OptimisticCallPut(double c) {
  if (!(c > 0.0)) throw ConfigError("c must be positive");
  RewardSpec spec;
  spec.F = [](double x, double y) {
    return y >= 0.0 ? std::max(x, 0.0) : std::max(-x, 0.0);
  };
  spec.r = 0.5 * c * c;
  spec.name = "optimistic_call_put";
  return spec;
}

RewardSpec StateDependentStrike(double K0, double rate, double r,
                                bool positive_part) {
  RewardSpec spec;
  spec.F = [K0, rate, positive_part](double x, double y) {
    const double v = std::exp(x) - K0 * std::exp(-rate * y);
    return positive_part ? std::max(v, 0.0) : v;
  };
  spec.r = r;
  spec.name = "state_dependent_strike";
  return spec;
}

MaxRepresentation StateDependentStrikeRep(double K0, double rate, double r,
                                          std::optional<double> a) {
  return MaxRepresentation::StateDependentStrike(
      [K0, rate](double y) { return K0 * std::exp(-rate * y); }, r, a);
}

RewardSpec HabitReward(const HabitParams& p) {
  RewardSpec spec;
  spec.F = [p](double x, double y) {
    return 1.0 - std::exp(-p.a * (x + p.g(y) - p.k));
  };
  spec.r = p.r;
  spec.name = "habit_exponential";
  return spec;
}

HabitParams HabitWithMemory() {
  HabitParams p;
  p.g = [](double x) { return std::atan2(1.0, x) - 0.5 * std::numbers::pi; };
  p.g_name = "arccot_minus_half_pi";
  return p;
}

RewardSpec DistancePenalty(double lo, double hi) {
  RewardSpec spec;
  spec.F = [lo, hi](double x, double y) {
    if (x <= lo || x >= hi) return 1.0;
    return -std::abs(x - y);
  };
  spec.r = 0.0;
  spec.name = "distance_penalty";
  return spec;
}

namespace {
std::size_t NearestLabel(const std::vector<double>& states, double v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (std::abs(states[i] - v) < std::abs(states[best] - v)) best = i;
  }
  return best;
}
}  // namespace

RewardSpec TableReward(std::vector<double> states,
                       std::vector<std::vector<double>> table, double r) {
  if (table.size() != states.size()) throw ConfigError("table rows != states");
  for (const auto& row : table) {
    if (row.size() != states.size()) throw ConfigError("table is not square");
  }
  RewardSpec spec;
  spec.F = [states = std::move(states), table = std::move(table)](double x,
                                                                   double y) {
    return table[NearestLabel(states, x)][NearestLabel(states, y)];
  };
  spec.r = r;
  spec.name = "table";
  return spec;
}

DiffusionModel Wiener(double lo, double hi, BoundaryKind left,
                      BoundaryKind right) {
  return DiffusionModel::Arithmetic(0.0, 1.0, lo, hi, left, right);
}

DiffusionModel Gbm(double sigma, double lo, double hi) {
  return DiffusionModel::Geometric(0.0, sigma, lo, hi, BoundaryKind::kTruncation,
                                   BoundaryKind::kTruncation);
}

ChainModel AbsorbedWalk(std::size_t n) {
  return MakeChainFromDiffusion(
      Wiener(0.0, 1.0, BoundaryKind::kAbsorbing, BoundaryKind::kAbsorbing),
      Grid(0.0, 1.0, n));
}

ChainModel Example26Chain() {
  std::vector<std::vector<Transition>> rows(4);
  rows[0] = {{0, 1.0}};
  rows[1] = {{0, 0.5}, {2, 0.5}};
  rows[2] = {{1, 0.5}, {3, 0.5}};
  rows[3] = {{3, 1.0}};
  return ChainModel({kD1, kA, kB, kD2}, std::move(rows), {1.0, 1.0, 1.0, 1.0});
}

RewardSpec Example26Reward() {
  // Columns: agent d1, a, b, d2.
  std::vector<std::vector<double>> table = {
      {0.0, 0.0, 4.0, 0.0},
      {0.0, 1.0, 0.0, 0.0},
      {0.0, 3.0, 1.0, 0.0},
      {0.0, 0.0, 0.0, 0.0},
  };
  return TableReward({kD1, kA, kB, kD2}, std::move(table), 0.0);
}

double OptimisticFInf(double x, double c, double x_star) {
  // Call holders on the right, put holders on the left.
  x = std::abs(x);
  return 0.5 * std::exp(c * x_star) * (x_star - 1.0 / c) * std::exp(-c * x) +
         0.5 * std::exp(-c * x_star) * (x_star + 1.0 / c) * std::exp(c * x);
}

CandidateSolution OptimisticCandidate(double c, double shift) {
  const double xs = ThresholdLimitOracle(c) + shift;
  CandidateSolution cand;
  cand.model = Wiener(-1e9, 1e9);
  cand.reward = OptimisticCallPut(c);
  cand.name = shift == 0.0 ? "optimistic_call_put" : "optimistic_call_put_shifted";
  // Value of entering +-[xs, inf) for a call holder.
  auto call_side = [c, xs](double x) {
    if (x >= xs) return x;
    if (x <= -xs) return 0.0;
    return xs * std::sinh(c * (x + xs)) / std::sinh(2.0 * c * xs);
  };
  cand.f = [call_side](double x, double y) {
    return y >= 0.0 ? call_side(x) : call_side(-x);
  };
  return cand;
}

CandidateSolution HabitCandidate(const HabitParams& p, double x_star,
                                 double shift) {
  const double xs = x_star + shift;
  CandidateSolution cand;
  cand.model = Gbm(p.sigma, 0.0, 1e9);
  cand.reward = HabitReward(p);
  cand.name = "habit_" + p.g_name;
  cand.f = [p, xs](double x, double y) { return HabitValue(x, y, xs, p); };
  return cand;
}

}  // namespace equistop::builtins
