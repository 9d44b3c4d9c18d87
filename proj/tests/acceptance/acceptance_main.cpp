// Acceptance criteria: one PASS/FAIL line each, non-zero exit on failure.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "equistop/builtins.hpp"
#include "equistop/chain_equilibrium.hpp"
#include "equistop/forward_iteration.hpp"
#include "equistop/monte_carlo.hpp"
#include "equistop/stopping_solver.hpp"
#include "equistop/vi_verifier.hpp"

using namespace equistop;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

ChainModel WienerChain(double lo, double hi, std::size_t n) {
  return MakeChainFromDiffusion(builtins::Wiener(lo, hi), Grid(lo, hi, n));
}

Outcome FixedPointThreshold() {
  const double x = ThresholdLimitOracle(1.0);
  return {std::abs(x - 0.9575) <= 5e-4 && x > 0.0 && x < 1.0,
          fmt::format("x* = {:.10f}", x)};
}

Outcome GridForwardIteration() {
  const std::size_t n = 8001;
  const ChainModel chain = WienerChain(-4.0, 4.0, n);
  const ForwardResult fr = ForwardIterate(chain, builtins::OptimisticCallPut(1.0));
  const auto runs = fr.s_hat.Runs();
  bool shape = runs.size() == 2 && runs[0].first == 0 && runs[1].second == n - 1;
  double left = NAN, right = NAN;
  if (shape) {
    left = chain.state(runs[0].second);
    right = chain.state(runs[1].first);
  }
  const bool ok = shape && std::abs(right - 0.9575) <= 5e-3 &&
                  std::abs(left + 0.9575) <= 5e-3 && fr.certified() &&
                  fr.iterations <= 200;
  return {ok, fmt::format("S_hat = (-inf, {:.4f}] u [{:.4f}, inf), {} iterations, {}",
                          left, right, fr.iterations,
                          fr.terminated ? "terminated"
                                        : (fr.certified() ? "proxy" : "not certified"))};
}

Outcome HabitThresholds() {
  const double x0 = HabitThreshold(HabitParams{});
  const double x1 = HabitThreshold(builtins::HabitWithMemory());
  return {std::abs(x0 - 1.3412) <= 1e-3 && std::abs(x1 - 3.3524) <= 1e-3,
          fmt::format("g = 0: {:.6f}, g = arccot - pi/2: {:.6f}", x0, x1)};
}

Outcome FourStateChain() {
  using namespace builtins;
  const ChainModel chain = Example26Chain();
  const RewardSpec reward = Example26Reward();
  // Agent a continuing once from S = all; agent b deviating from {d1, b, d2}
  // to {d1, d2}.
  const double va = ChainValue(chain, StoppingSet::FromIndices(4, {0, 2, 3}), reward, kA)[1];
  const double vb = ChainValue(chain, StoppingSet::FromIndices(4, {0, 3}), reward, kB)[2];
  const auto found = EnumeratePureEquilibria(chain, reward, DefaultEquilibriumTolerance(chain));
  const MixedProfile eq{0.2, 0.6};
  const MixedCheck mixed = VerifyMixedEquilibrium(eq, 101);
  const double ma = MixedValue(eq, MixedAgent::kA);
  const double mb = MixedValue(eq, MixedAgent::kB);
  double sweep = 0.0;
  for (int k = 0; k <= 100; ++k) {
    sweep = std::max(sweep, std::abs(MixedValue({k / 100.0, 0.6}, MixedAgent::kA) - 1.0));
  }
  const bool ok = std::abs(va - 1.5) <= 1e-12 && std::abs(vb - 4.0 / 3.0) <= 1e-12 &&
                  found.empty() && mixed.pass && std::abs(ma - 1.0) <= 1e-12 &&
                  std::abs(mb - 1.0) <= 1e-12 && sweep <= 1e-12;
  return {ok, fmt::format("deviations {} and {}, {} pure equilibria, mixed values ({}, {}), "
                          "p-sweep error {:.1e}",
                          va, vb, found.size(), ma, mb, sweep)};
}

Outcome AbsorbedWalk() {
  const std::size_t n = 101;
  const ChainModel chain = builtins::AbsorbedWalk(n);
  const RewardSpec reward = builtins::DistancePenalty();
  const double tol = DefaultEquilibriumTolerance(chain);
  StoppingSet all(n);
  for (std::size_t i = 0; i < n; ++i) all.set(i);
  const auto ends = CheckPureEquilibrium(chain, StoppingSet::FromIndices(n, {0, n - 1}), reward, tol);
  const auto full = CheckPureEquilibrium(chain, all, reward, tol);
  // Exact up to rounding in the linear solve.
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err = std::max(err, std::abs(ends.J[i] - 1.0));
    err = std::max(err, std::abs(full.J[i] - ((i == 0 || i + 1 == n) ? 1.0 : 0.0)));
  }
  return {ends.passed() && full.passed() && err <= 1e-12,
          fmt::format("S = {{0, 1}}: {}, S = all: {}, max value error {:.1e}",
                      ends.passed() ? "pass" : "fail", full.passed() ? "pass" : "fail",
                      err)};
}

Outcome ViVerification() {
  ViTolerances tols;
  tols.h_fd = 1e-3;
  const Grid g55(-2.0, 2.0, 401);
  const Grid g56(0.01, 7.2, 720);
  std::vector<std::string> parts;
  bool ok = true;
  auto closed = [&](const std::string& name, const CandidateSolution& c, const Grid& g) {
    const ViReport r = CheckVi(c, g, tols);
    const double interior = std::max({r.subharmonic, r.harmonic, r.obstacle,
                                      r.boundary_limit, r.continuity_gap});
    const bool pass = r.pass && interior <= 1e-4 && r.smooth_fit_gap <= 1e-6;
    ok = ok && pass;
    parts.push_back(fmt::format("{} {} (interior {:.1e}, smooth fit {:.1e})", name,
                                pass ? "pass" : "FAIL", interior, r.smooth_fit_gap));
  };
  auto shifted = [&](const std::string& name, const CandidateSolution& c, const Grid& g) {
    const ViReport r = CheckVi(c, g, tols);
    const bool pass = !r.pass && r.smooth_fit_gap >= 1e-3;
    ok = ok && pass;
    parts.push_back(fmt::format("{} rejected: {} (smooth fit {:.3g})", name,
                                pass ? "yes" : "NO", r.smooth_fit_gap));
  };
  const HabitParams plain;
  const HabitParams memory = builtins::HabitWithMemory();
  const double xp = HabitThreshold(plain);
  const double xm = HabitThreshold(memory);
  closed("5.5", builtins::OptimisticCandidate(1.0), g55);
  closed("5.6 g=0", builtins::HabitCandidate(plain, xp), g56);
  closed("5.6 g=arccot", builtins::HabitCandidate(memory, xm), g56);
  shifted("5.5-0.05", builtins::OptimisticCandidate(1.0, -0.05), g55);
  shifted("5.6 g=0 -0.05", builtins::HabitCandidate(plain, xp, -0.05), g56);
  shifted("5.6 g=arccot -0.05", builtins::HabitCandidate(memory, xm, -0.05), g56);
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  return {ok, detail};
}

Outcome MonteCarloAudit() {
  const CandidateSolution cand = builtins::OptimisticCandidate(1.0);
  const Grid grid(-2.0, 2.0, 401);
  const StopRegion region =
      RegionFromContinuationSet(ExtractContinuationSet(cand, grid), grid, cand.model);
  const double xs = ThresholdLimitOracle(1.0);
  McOptions o;
  o.x0 = {-0.5, 0.0, 0.5};
  o.paths = 200'000;
  o.h_list = {0.2, 0.1, 0.05};
  auto f_inf = [xs](double x, double) { return builtins::OptimisticFInf(x, 1.0, xs); };
  const McReport rep = McEquilibriumCheck(region, cand.model, cand.reward, o, f_inf);
  bool ok = true;
  std::string detail;
  for (const McPoint& p : rep.points) {
    const McRatio& r = p.per_h.back();
    const bool pass = std::abs(p.J - p.reference) <= 3.0 * p.J_se &&
                      r.ratio >= -3.0 * r.ratio_se && p.capped_paths == 0;
    ok = ok && pass;
    detail += fmt::format("{}x0={}: J={:.5f}+-{:.1e} vs {:.5f}, ratio(h=0.05)={:.3g}+-{:.1e}",
                          detail.empty() ? "" : "; ", p.x0, p.J, p.J_se, p.reference,
                          r.ratio, r.ratio_se);
  }
  return {ok, detail};
}

ChainModel RandomChain(std::mt19937_64& rng, std::size_t n, bool absorbing) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (absorbing && i == 0) {
      P[0][0] = 1.0;
      continue;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      P[i][j] = u(rng) < 0.5 ? u(rng) : 0.0;
      sum += P[i][j];
    }
    if (absorbing) {
      P[i][0] += 0.05 + u(rng);
      sum = 0.0;
      for (double p : P[i]) sum += p;
    }
    if (sum == 0.0) {
      P[i][(i + 1) % n] = 1.0;
      sum = 1.0;
    }
    for (double& p : P[i]) p /= sum;
  }
  std::vector<double> states(n);
  for (std::size_t i = 0; i < n; ++i) states[i] = static_cast<double>(i);
  return ChainModel::FromDense(states, P, 1.0);
}

// Rewards F(x, y) mixing a y-dependent call/put, a bump and an oscillation.
RewardSpec RandomReward(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double k = 2.0 * u(rng) - 1.0;
  const double slope = 0.5 + u(rng);
  const double w = 0.3 * u(rng);
  const double freq = 1.0 + 4.0 * u(rng);
  const double bump = u(rng);
  const double centre = 2.0 * u(rng) - 1.0;
  RewardSpec reward;
  reward.r = 0.1 + u(rng);
  reward.F = [=](double x, double y) {
    const double strike = k + slope * y;
    const double payoff = y >= 0.0 ? std::max(x - strike, 0.0) : std::max(strike - x, 0.0);
    return payoff + w * std::sin(freq * x + y) + bump * std::exp(-(x - centre) * (x - centre));
  };
  return reward;
}

Outcome PropertySuites() {
  std::mt19937_64 rng(20240601);
  std::string detail;
  bool ok = true;

  // S_n nested and v_n non-increasing.
  int mono_fail = 0;
  double worst_increase = 0.0;
  for (int t = 0; t < 20; ++t) {
    const ChainModel chain = WienerChain(-2.0, 2.0, 161);
    ForwardOptions opts;
    opts.max_iters = 50;
    const ForwardResult fr = ForwardIterate(chain, RandomReward(rng), opts);
    bool pass = true;
    for (const IterationRecord& rec : fr.history) {
      worst_increase = std::max(worst_increase, rec.max_value_increase);
      pass = pass && rec.nested && rec.max_value_increase <= 1e-12;
    }
    mono_fail += !pass;
  }
  ok = ok && mono_fail == 0;
  detail += fmt::format("monotonicity {}/20 (max increase {:.1e})", 20 - mono_fail,
                        worst_increase);

  // Optimal sets of y-independent problems are equilibria.
  int opt_fail = 0;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 9);
    const bool absorbing = t % 2 == 0;
    const ChainModel chain = RandomChain(rng, n, absorbing);
    std::vector<double> table(n);
    for (double& v : table) v = u(rng);
    RewardSpec reward;
    reward.r = absorbing ? 0.0 : 0.1 + 0.5 * (u(rng) + 1.0);
    reward.F = [table](double x, double) { return table[static_cast<std::size_t>(x)]; };
    const StandardSolution sol =
        SolveStandard(chain, reward, 0.0, StoppingSet::Absorbing(chain));
    const StoppingSet S = sol.stopset.Union(StoppingSet::Absorbing(chain));
    opt_fail += !CheckPureEquilibrium(chain, S, reward, 1e-10).passed();
  }
  ok = ok && opt_fail == 0;
  detail += fmt::format("; optimal => equilibrium {}/50", 50 - opt_fail);

  // Discrete concavity of J on the absorbed walk equilibria.
  double worst_d2 = -INFINITY;
  double worst_d2_h2 = -INFINITY;
  int checked = 0;
  bool concave = true;
  auto concavity = [&](const ChainModel& chain, const StoppingSet& S) {
    const double h = *chain.mesh();
    const RewardSpec reward = builtins::DistancePenalty();
    const GridFunction J = CheckPureEquilibrium(chain, S, reward, 1e-9).J;
    for (std::size_t i = 2; i + 2 < chain.size(); ++i) {
      const double d2 = J[i - 1] - 2.0 * J[i] + J[i + 1];
      worst_d2 = std::max(worst_d2, d2);
      worst_d2_h2 = std::max(worst_d2_h2, d2 / (h * h));
      concave = concave && d2 <= 10.0 * h * h;
    }
    ++checked;
  };
  {
    const ChainModel walk = builtins::AbsorbedWalk(101);
    StoppingSet all(101);
    for (std::size_t i = 0; i < 101; ++i) all.set(i);
    concavity(walk, StoppingSet::FromIndices(101, {0, 100}));
    concavity(walk, all);
    const ChainModel small = builtins::AbsorbedWalk(7);
    for (const StoppingSet& S :
         EnumeratePureEquilibria(small, builtins::DistancePenalty(), 1e-9)) {
      concavity(small, S);
    }
  }
  ok = ok && concave;
  detail += fmt::format(
      "; concavity on {} equilibria (max second difference {:.1e} = {:.2f} h^2)", checked,
      worst_d2, worst_d2_h2);

  // Perpetual call against a1 e^{cx} below the threshold.
  {
    // [-6, 4] keeps the reflecting end's e^{lo - 1} effect below 1e-3.
    const std::size_t n = 10001;
    const ChainModel chain = WienerChain(-6.0, 4.0, n);
    const StandardSolution sol =
        SolveStandard(chain, builtins::OptimisticCallPut(1.0), 0.5, StoppingSet(n));
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = chain.state(i);
      const double exact = x < 1.0 ? std::exp(x - 1.0) : x;
      err = std::max(err, std::abs(sol.value[i] - exact));
    }
    ok = ok && err <= 5e-3;
    detail += fmt::format("; a1 e^(cx) sup error {:.2e}", err);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "fixed-point threshold", 1e-3, FixedPointThreshold},
      {"AC2", "forward iteration on the h = 1e-3 grid", 120.0, GridForwardIteration},
      {"AC3", "habit thresholds", 0.02, HabitThresholds},
      {"AC4", "four-state chain", 1.0, FourStateChain},
      {"AC5", "absorbed walk equilibria", 1.0, AbsorbedWalk},
      {"AC6", "variational inequality checks", 5.0, ViVerification},
      {"AC7", "Monte Carlo audit", 300.0, MonteCarloAudit},
      {"AC8", "property suites", 600.0, PropertySuites},
  };
  fmt::print("threads: {}\n", omp_get_max_threads());
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, fmt::format("error: {}", e.what())};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = out.pass && in_time;
    failed += !pass;
    fmt::print("{} {} {}: {} [{:.3f} s, budget {} s{}]\n", c.id, pass ? "PASS" : "FAIL",
               c.title, out.detail, secs, c.budget_s, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
