#include "equistop/chain_equilibrium.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>

#include "equistop/errors.hpp"
#include "equistop/linear_solvers.hpp"
#include "equistop/parallel.hpp"

namespace equistop {

GridFunction ChainValue(const ChainModel& chain, const StoppingSet& S,
                        const RewardSpec& reward, double agent) {
  const EntryValueSolver solver(chain, S, reward.r);
  return solver.Solve(RewardColumn(chain, reward, agent));
}

GridFunction2D ChainValueAllAgents(const ChainModel& chain,
                                   const StoppingSet& S,
                                   const RewardSpec& reward) {
  const std::size_t n = chain.size();
  const EntryValueSolver solver(chain, S, reward.r);
  GridFunction2D f(n, n);
  ExceptionSlot errors;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t j = 0; j < n; ++j) {
    try {
      const GridFunction col =
          solver.Solve(RewardColumn(chain, reward, chain.state(j)));
      std::copy(col.begin(), col.end(), f.Column(j).begin());
    } catch (...) {
      errors.Capture(j);
    }
  }
  errors.Rethrow();
  return f;
}

GridFunction2D ChainValueAllAgentsSerial(const ChainModel& chain,
                                         const StoppingSet& S,
                                         const RewardSpec& reward) {
  const std::size_t n = chain.size();
  const EntryValueSolver solver(chain, S, reward.r);
  GridFunction2D f(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const GridFunction col =
        solver.Solve(RewardColumn(chain, reward, chain.state(j)));
    std::copy(col.begin(), col.end(), f.Column(j).begin());
  }
  return f;
}

double DefaultEquilibriumTolerance(const ChainModel& chain) {
  return chain.mesh() ? 10.0 * *chain.mesh() : 1e-9;
}

namespace {

bool TouchesAbsorbingEnd(const ChainModel& chain, std::size_t i) {
  if (!chain.mesh()) return false;
  for (const Transition& t : chain.row(i)) {
    if (t.p > 0.0 && t.to != i && chain.absorbing(t.to)) return true;
  }
  return false;
}

}  // namespace

EquilibriumReport ReportFromValues(const ChainModel& chain,
                                   const StoppingSet& S,
                                   const RewardSpec& reward, GridFunction2D f,
                                   double tol) {
  const std::size_t n = chain.size();
  EquilibriumReport rep;
  rep.S = S;
  rep.C = S.Complement();
  rep.tolerance = tol;
  rep.J = f.Diagonal();
  rep.cond1_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = chain.state(i);
    const double gap = reward.F(x, x) - rep.J[i];
    if (gap > rep.cond1_violation) {
      rep.cond1_violation = gap;
      rep.cond1_worst = i;
    }
    if (!S.contains(i) || chain.absorbing(i)) continue;
    if (TouchesAbsorbingEnd(chain, i)) {
      rep.unresolved.push_back(i);
      continue;
    }
    const double cont = OneStepValue(chain, i, f.Column(i), reward.r);
    const double gain = std::max(0.0, cont - reward.F(x, x));
    if (gain > rep.cond2_violation) {
      rep.cond2_violation = gain;
      rep.cond2_worst = i;
    }
  }
  rep.f = std::move(f);
  rep.converged = rep.passed();
  return rep;
}

EquilibriumReport CheckPureEquilibrium(const ChainModel& chain,
                                       const StoppingSet& S,
                                       const RewardSpec& reward, double tol) {
  if (S.size() != chain.size()) {
    throw ConfigError("stopping set size does not match the chain");
  }
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (chain.absorbing(i) && !S.contains(i)) {
      throw ConfigError(fmt::format("absorbing state {} must be in S", i));
    }
  }
  return ReportFromValues(chain, S, reward,
                          ChainValueAllAgents(chain, S, reward), tol);
}

namespace {

struct Candidates {
  std::vector<std::size_t> free;
  StoppingSet base;
};

Candidates Prepare(const ChainModel& chain) {
  Candidates c{{}, StoppingSet::Absorbing(chain)};
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (!chain.absorbing(i)) c.free.push_back(i);
  }
  if (c.free.size() > kMaxEnumeratedStates) {
    throw TooManyStates(fmt::format("{} non-absorbing states (cap {})",
                                    c.free.size(), kMaxEnumeratedStates));
  }
  return c;
}

StoppingSet FromMask(const Candidates& c, std::uint64_t mask) {
  StoppingSet S = c.base;
  for (std::size_t k = 0; k < c.free.size(); ++k) {
    if (mask >> k & 1U) S.set(c.free[k]);
  }
  return S;
}

// Candidate passes; singular systems mean the entry time is not finite.
bool Passes(const ChainModel& chain, const StoppingSet& S,
            const RewardSpec& reward, double tol) {
  try {
    return ReportFromValues(chain, S, reward,
                            ChainValueAllAgentsSerial(chain, S, reward), tol)
        .passed();
  } catch (const SingularSystem&) {
    return false;
  }
}

std::vector<StoppingSet> Collect(const Candidates& c,
                                 const std::vector<std::uint8_t>& ok) {
  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 0; m < ok.size(); ++m) {
    if (ok[m]) masks.push_back(m);
  }
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint64_t a, std::uint64_t b) {
                     return std::popcount(a) < std::popcount(b);
                   });
  std::vector<StoppingSet> out;
  for (std::uint64_t m : masks) out.push_back(FromMask(c, m));
  return out;
}

}  // namespace

std::vector<StoppingSet> EnumeratePureEquilibria(const ChainModel& chain,
                                                 const RewardSpec& reward,
                                                 double tol) {
  const Candidates c = Prepare(chain);
  const std::uint64_t total = std::uint64_t{1} << c.free.size();
  std::vector<std::uint8_t> ok(total, 0);
  ExceptionSlot errors;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::uint64_t m = 0; m < total; ++m) {
    try {
      ok[m] = Passes(chain, FromMask(c, m), reward, tol);
    } catch (...) {
      errors.Capture(m);
    }
  }
  errors.Rethrow();
  return Collect(c, ok);
}

std::vector<StoppingSet> EnumeratePureEquilibriaSerial(
    const ChainModel& chain, const RewardSpec& reward, double tol) {
  const Candidates c = Prepare(chain);
  const std::uint64_t total = std::uint64_t{1} << c.free.size();
  std::vector<std::uint8_t> ok(total, 0);
  for (std::uint64_t m = 0; m < total; ++m) {
    ok[m] = Passes(chain, FromMask(c, m), reward, tol);
  }
  return Collect(c, ok);
}

double MixedValue(MixedProfile pr, MixedAgent agent) {
  const double p = pr.p, q = pr.q;
  const double denom = 1.0 - 0.25 * (1.0 - p) * (1.0 - q);
  if (agent == MixedAgent::kA) return (p + 1.5 * (1.0 - p) * q) / denom;
  return (q + (1.0 - p) * (1.0 - q)) / denom;
}

MixedCheck VerifyMixedEquilibrium(MixedProfile profile, int n_check) {
  if (n_check < 2) n_check = 2;
  MixedCheck out;
  const double va = MixedValue(profile, MixedAgent::kA);
  const double vb = MixedValue(profile, MixedAgent::kB);
  out.best_p = profile.p;
  out.best_q = profile.q;
  for (int k = 0; k < n_check; ++k) {
    const double t = k + 1 == n_check ? 1.0 : static_cast<double>(k) / (n_check - 1);
    const double ga = MixedValue({t, profile.q}, MixedAgent::kA) - va;
    const double gb = MixedValue({profile.p, t}, MixedAgent::kB) - vb;
    if (ga > out.gain_a) {
      out.gain_a = ga;
      out.best_p = t;
    }
    if (gb > out.gain_b) {
      out.gain_b = gb;
      out.best_q = t;
    }
  }
  out.max_gain = std::max(out.gain_a, out.gain_b);
  out.pass = out.max_gain <= 1e-12;
  return out;
}

}  // namespace equistop
