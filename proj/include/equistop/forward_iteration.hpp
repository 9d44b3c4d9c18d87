#pragma once

#include <string>
#include <utility>
#include <vector>

#include "equistop/core_model.hpp"
#include "equistop/stopping_solver.hpp"

namespace equistop {

struct ForwardOptions {
  int max_iters = 200;
  SolveOptions solve;
  double tol = -1.0;  // negative: DefaultEquilibriumTolerance(chain)
  bool parallel = true;
};

enum class Certification { kTerminated, kProxy, kFailed };

struct IterationRecord {
  int n = 0;
  std::size_t size = 0;
  std::vector<std::pair<double, double>> intervals;
  // max over (x, y) of v_{n-1} - v_{n-2}; positive values break monotonicity
  double max_value_increase = 0.0;
  bool nested = true;  // S_{n-1} is contained in S_n
};

struct ForwardResult {
  std::vector<StoppingSet> sequence;  // S_1, S_2, ...
  StoppingSet s_hat;
  GridFunction2D v_inf;
  std::vector<IterationRecord> history;
  bool terminated = false;
  int iterations = 0;
  Certification certification = Certification::kFailed;
  std::string failed_assumption;  // "A1" .. "A4" when certification failed
  std::string detail;
  // Isolated members of some S_n that only passed the equality test loosely.
  std::size_t marginal_isolated = 0;
  // Equilibrium checks for the entry time of s_hat.
  EquilibriumReport report;
  // max over x outside s_hat of F(x,x) - J(x)
  double a3_violation = 0.0;
  double a2_gap = 0.0;
  double a4_violation = 0.0;

  bool certified() const { return certification != Certification::kFailed; }
  // Throws NotCertified naming the failed assumption.
  void RequireCertified() const;
};

// S_0 = {}, S_n = {x : v_{n-1}(x,x) = F(x,x)} where v_{n-1}(., y) is the
// optimal value among stopping times not later than the entry into S_{n-1}.
ForwardResult ForwardIterate(const ChainModel& chain, const RewardSpec& reward,
                             const ForwardOptions& opts = {});

// Thresholds x_1 = 1/c, x_n in (0, x_{n-1}) for the optimistic call/put on a
// Wiener process with c = sqrt(2r).
std::vector<double> ThresholdSequenceOracle(int n, double c);

// Limit of the sequence above: the root of e^{4cx} = (1/c + x)/(1/c - x) in
// (0, 1/c).
double ThresholdLimitOracle(double c);

}  // namespace equistop
