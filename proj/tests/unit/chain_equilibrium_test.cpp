#include "doctest.h"

#include <omp.h>

#include <cmath>
#include <random>

#include "equistop/builtins.hpp"
#include "equistop/chain_equilibrium.hpp"
#include "equistop/errors.hpp"
#include "equistop/stopping_solver.hpp"

using namespace equistop;
using builtins::kA;
using builtins::kB;

namespace {

StoppingSet Set26(std::initializer_list<std::size_t> idx) {
  return StoppingSet::FromIndices(4, idx);
}

// Plain simulation of the entry value, for cross-checking the linear solve.
struct SimEstimate {
  double mean;
  double se;
};

SimEstimate SimulateEntryValue(const ChainModel& chain, const StoppingSet& S,
                               const RewardSpec& reward, double agent,
                               std::size_t start, long paths,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double s = 0.0, ss = 0.0;
  for (long p = 0; p < paths; ++p) {
    std::size_t x = start;
    double disc = 1.0;
    while (!S.contains(x)) {
      disc *= chain.Discount(x, reward.r);
      double draw = u(rng);
      for (const Transition& t : chain.row(x)) {
        draw -= t.p;
        if (draw < 0.0) {
          x = t.to;
          break;
        }
      }
    }
    const double v = disc * reward.F(chain.state(x), agent);
    s += v;
    ss += v * v;
  }
  const double mean = s / static_cast<double>(paths);
  const double var = ss / static_cast<double>(paths) - mean * mean;
  return {mean, std::sqrt(var / static_cast<double>(paths))};
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

}  // namespace

TEST_SUITE("chain_equilibrium") {

TEST_CASE("four-state chain: deviation values") {
  const ChainModel chain = builtins::Example26Chain();
  const RewardSpec reward = builtins::Example26Reward();
  // Agent a continues once while b still stops: 1/2 * 0 + 1/2 * 3.
  CHECK(std::abs(ChainValue(chain, Set26({0, 2, 3}), reward, kA)[1] - 1.5) <= 1e-12);
  // Agent b continues while a continues.
  CHECK(std::abs(ChainValue(chain, Set26({0, 3}), reward, kB)[2] - 4.0 / 3.0) <=
        1e-12);
  // Nobody ever stops at b, so agent a only collects 0 at the ends.
  CHECK(std::abs(ChainValue(chain, Set26({0, 3}), reward, kA)[1]) <= 1e-12);
  const GridFunction all = ChainValue(chain, Set26({0, 1, 2, 3}), reward, kB);
  CHECK(all == GridFunction{4.0, 0.0, 1.0, 0.0});
}

TEST_CASE("four-state chain has no pure equilibrium") {
  const ChainModel chain = builtins::Example26Chain();
  const RewardSpec reward = builtins::Example26Reward();
  for (auto S : {Set26({0, 1, 2, 3}), Set26({0, 1, 3}), Set26({0, 2, 3}),
                 Set26({0, 3})}) {
    const EquilibriumReport rep = CheckPureEquilibrium(chain, S, reward, 1e-9);
    CHECK_FALSE(rep.passed());
  }
  const EquilibriumReport all =
      CheckPureEquilibrium(chain, Set26({0, 1, 2, 3}), reward, 1e-9);
  CHECK(all.cond2_violation == doctest::Approx(0.5));
  CHECK(all.cond2_worst == 1);
  const EquilibriumReport ends = CheckPureEquilibrium(chain, Set26({0, 3}), reward, 1e-9);
  // J(a) = 0 < F(a, a) = 1.
  CHECK(ends.cond1_violation == doctest::Approx(1.0));
  CHECK(EnumeratePureEquilibria(chain, reward, 1e-9).empty());
  CHECK_THROWS_AS(CheckPureEquilibrium(chain, Set26({0, 1}), reward, 1e-9),
                  ConfigError);
}

TEST_CASE("absorbed walk: both equilibria") {
  const std::size_t n = 101;
  const ChainModel chain = builtins::AbsorbedWalk(n);
  const RewardSpec reward = builtins::DistancePenalty();
  const double tol = DefaultEquilibriumTolerance(chain);
  CHECK(tol == doctest::Approx(0.1));
  StoppingSet all(n);
  for (std::size_t i = 0; i < n; ++i) all.set(i);
  const auto ends = CheckPureEquilibrium(
      chain, StoppingSet::FromIndices(n, {0, n - 1}), reward, tol);
  const auto full = CheckPureEquilibrium(chain, all, reward, tol);
  CHECK(ends.passed());
  CHECK(full.passed());
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(ends.J[i] - 1.0) <= 1e-12);
    CHECK(full.J[i] == ((i == 0 || i + 1 == n) ? 1.0 : 0.0));
  }
  CHECK(full.unresolved == std::vector<std::size_t>{1, n - 2});
}

TEST_CASE("enumeration on a short absorbed walk") {
  const ChainModel chain = builtins::AbsorbedWalk(7);
  const RewardSpec reward = builtins::DistancePenalty();
  const auto found = EnumeratePureEquilibria(chain, reward, 1e-9);
  REQUIRE(found.size() >= 2);
  CHECK(found.front() == StoppingSet::FromIndices(7, {0, 6}));
  CHECK(found.back().count() == 7);
  for (std::size_t k = 1; k < found.size(); ++k) {
    CHECK(found[k - 1].count() <= found[k].count());
  }
  omp_set_num_threads(4);
  CHECK(found == EnumeratePureEquilibriaSerial(chain, reward, 1e-9));
}

TEST_CASE("single absorbing state") {
  const ChainModel one = ChainModel::FromDense({0.0}, {{1.0}});
  RewardSpec reward;
  reward.F = [](double, double) { return 1.0; };
  const auto found = EnumeratePureEquilibria(one, reward, 1e-9);
  REQUIRE(found.size() == 1);
  CHECK(found[0].count() == 1);
}

TEST_CASE("enumeration cap") {
  const ChainModel chain = builtins::AbsorbedWalk(27);
  CHECK_THROWS_AS(EnumeratePureEquilibria(chain, builtins::DistancePenalty(), 1e-9),
                  TooManyStates);
}

TEST_CASE("singular systems propagate") {
  const ChainModel loop = ChainModel::FromDense(
      {0.0, 1.0, 2.0}, {{1, 0, 0}, {0, 0, 1}, {0, 1, 0}});
  RewardSpec reward;
  reward.F = [](double x, double) { return x; };
  CHECK_THROWS_AS(
      CheckPureEquilibrium(loop, StoppingSet::FromIndices(3, {0}), reward, 1e-9),
      SingularSystem);
}

TEST_CASE("mixed values") {
  using equistop::MixedAgent;
  CHECK(std::abs(MixedValue({0.2, 0.6}, MixedAgent::kA) - 1.0) <= 1e-12);
  CHECK(std::abs(MixedValue({0.2, 0.6}, MixedAgent::kB) - 1.0) <= 1e-12);
  for (double q : {0.0, 0.3, 1.0}) {
    CHECK(MixedValue({1.0, q}, MixedAgent::kA) == doctest::Approx(1.0));
  }
  CHECK(MixedValue({0.0, 0.0}, MixedAgent::kB) == doctest::Approx(4.0 / 3.0));
  CHECK(MixedValue({0.0, 1.0}, MixedAgent::kA) == doctest::Approx(1.5));
  CHECK(MixedValue({0.0, 0.0}, MixedAgent::kA) == 0.0);
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    CHECK(std::abs(MixedValue({t, 0.6}, MixedAgent::kA) - 1.0) <= 1e-12);
    CHECK(std::abs(MixedValue({0.2, t}, MixedAgent::kB) - 1.0) <= 1e-12);
  }
}

TEST_CASE("mixed closed forms agree with the chain") {
  // (p, q) = (0, 1) and (1, 0) are pure sets.
  const ChainModel chain = builtins::Example26Chain();
  const RewardSpec reward = builtins::Example26Reward();
  const GridFunction va = ChainValue(chain, Set26({0, 2, 3}), reward, kA);
  const GridFunction vb = ChainValue(chain, Set26({0, 1, 3}), reward, kB);
  CHECK(std::abs(MixedValue({0.0, 1.0}, MixedAgent::kA) - va[1]) <= 1e-12);
  CHECK(std::abs(MixedValue({1.0, 0.0}, MixedAgent::kB) - vb[2]) <= 1e-12);
}

TEST_CASE("mixed equilibrium check") {
  const MixedCheck ok = VerifyMixedEquilibrium({0.2, 0.6}, 101);
  CHECK(ok.pass);
  CHECK(ok.max_gain <= 1e-12);
  const MixedCheck zero = VerifyMixedEquilibrium({0.0, 0.0}, 101);
  CHECK_FALSE(zero.pass);
  CHECK(zero.gain_a == doctest::Approx(1.0));
  CHECK(zero.best_p == 1.0);
  CHECK(zero.gain_b <= 1e-12);
  const MixedCheck one = VerifyMixedEquilibrium({1.0, 1.0}, 101);
  CHECK_FALSE(one.pass);
  CHECK(one.gain_a == doctest::Approx(0.5));
  CHECK(one.best_p == 0.0);
}

TEST_CASE("values are monotone in the reward") {
  const ChainModel chain = builtins::AbsorbedWalk(21);
  const StoppingSet S = StoppingSet::FromIndices(21, {0, 5, 6, 20});
  RewardSpec low = builtins::DistancePenalty();
  RewardSpec high = low;
  high.F = [F = low.F](double x, double y) { return F(x, y) + (x > 0.9 ? 0.8 : 0.3); };
  const GridFunction vl = ChainValue(chain, S, low, 0.4);
  const GridFunction vh = ChainValue(chain, S, high, 0.4);
  for (std::size_t i = 0; i < 21; ++i) CHECK(vh[i] >= vl[i]);
}

TEST_CASE("linear solve agrees with simulation") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    const ChainModel chain = RandomChain(rng, 6, true);
    RewardSpec reward;
    reward.r = trial == 0 ? 0.0 : 0.2;
    reward.F = [](double x, double y) { return std::cos(x + 0.5 * y) + 0.1 * x; };
    const StoppingSet S = StoppingSet::FromIndices(6, {0, 3});
    const GridFunction v = ChainValue(chain, S, reward, 2.0);
    const SimEstimate est = SimulateEntryValue(chain, S, reward, 2.0, 5, 100000,
                                               static_cast<std::uint64_t>(trial));
    CHECK(std::abs(est.mean - v[5]) <= 4.0 * est.se);
  }
}

TEST_CASE("parallel agent values match the serial ones") {
  const ChainModel chain = builtins::AbsorbedWalk(61);
  const StoppingSet S = StoppingSet::FromIndices(61, {0, 10, 11, 40, 60});
  omp_set_num_threads(4);
  const GridFunction2D par = ChainValueAllAgents(chain, S, builtins::DistancePenalty());
  const GridFunction2D ser =
      ChainValueAllAgentsSerial(chain, S, builtins::DistancePenalty());
  CHECK(par.data() == ser.data());
}

TEST_CASE("optimal sets of y-independent problems are equilibria") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 9);
    const bool absorbing = trial % 2 == 0;
    const ChainModel chain = RandomChain(rng, n, absorbing);
    std::vector<double> table(n);
    for (double& t : table) t = u(rng);
    RewardSpec reward;
    reward.r = absorbing ? 0.0 : 0.1 + 0.5 * (u(rng) + 1.0);
    reward.F = [table](double x, double) { return table[static_cast<std::size_t>(x)]; };
    SolveOptions opts;
    opts.method = SolveMethod::kValueIteration;
    const StandardSolution sol =
        SolveStandard(chain, reward, 0.0, StoppingSet::Absorbing(chain), opts);
    const StoppingSet S = sol.stopset.Union(StoppingSet::Absorbing(chain));
    const EquilibriumReport rep = CheckPureEquilibrium(chain, S, reward, 1e-10);
    CHECK_MESSAGE(rep.passed(), "trial " << trial);
  }
}

}  // TEST_SUITE
