#pragma once

#include <optional>
#include <vector>

#include "equistop/core_model.hpp"
#include "equistop/one_sided.hpp"
#include "equistop/vi_verifier.hpp"

namespace equistop::builtins {

// Call for agents y >= 0, put for y < 0: F(x, y) = x^+ or (-x)^+, with
// r = c^2 / 2 on a standard Wiener process.
RewardSpec OptimisticCallPut(double c);

// e^x - K0 e^{-rate y}, optionally with the positive part.
RewardSpec StateDependentStrike(double K0, double rate, double r,
                                bool positive_part = false);
MaxRepresentation StateDependentStrikeRep(double K0, double rate, double r,
                                          std::optional<double> a = std::nullopt);

// 1 - e^{-a (x + g(y) - k)}
RewardSpec HabitReward(const HabitParams& p);
// g(x) = arccot(x) - pi/2 = -arctan(x) for x >= 0
HabitParams HabitWithMemory();

// F = 1 on {lo, hi}, -|x - y| inside; r = 0.
RewardSpec DistancePenalty(double lo = 0.0, double hi = 1.0);

// F(states[i], states[j]) = table[i][j]; agents and positions are matched to
// the nearest label.
RewardSpec TableReward(std::vector<double> states,
                       std::vector<std::vector<double>> table, double r = 0.0);

DiffusionModel Wiener(double lo, double hi,
                      BoundaryKind left = BoundaryKind::kTruncation,
                      BoundaryKind right = BoundaryKind::kTruncation);
DiffusionModel Gbm(double sigma, double lo, double hi);

// Absorbed walk on [0, 1] with n nodes.
ChainModel AbsorbedWalk(std::size_t n);

// States (d1, a, b, d2) labelled 0..3.
ChainModel Example26Chain();
RewardSpec Example26Reward();
inline constexpr double kD1 = 0.0, kA = 1.0, kB = 2.0, kD2 = 3.0;

// v_inf(x, x) on the continuation interval (-x*, x*).
double OptimisticFInf(double x, double c, double x_star);

// Equilibrium auxiliary function for OptimisticCallPut: the value of entering
// +-[b, inf) with b = x* + shift.
CandidateSolution OptimisticCandidate(double c, double shift = 0.0);

// Habit auxiliary function with threshold x_star + shift.
CandidateSolution HabitCandidate(const HabitParams& p, double x_star,
                                 double shift = 0.0);

}  // namespace equistop::builtins
