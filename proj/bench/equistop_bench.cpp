// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "equistop/builtins.hpp"
#include "equistop/chain_equilibrium.hpp"
#include "equistop/monte_carlo.hpp"
#include "equistop/stopping_solver.hpp"
#include "equistop/vi_verifier.hpp"

using namespace equistop;

namespace {

ChainModel Chain(std::size_t n) {
  return MakeChainFromDiffusion(builtins::Wiener(-4.0, 4.0), Grid(-4.0, 4.0, n));
}

StoppingSet Tails(const ChainModel& chain) {
  StoppingSet S(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) S.set(i, std::abs(chain.state(i)) >= 1.0);
  return S;
}

template <bool kParallel>
void BM_SolveAllAgents(benchmark::State& state) {
  const ChainModel chain = Chain(static_cast<std::size_t>(state.range(0)));
  const RewardSpec reward = builtins::OptimisticCallPut(1.0);
  const StoppingSet S = Tails(chain);
  for (auto _ : state) {
    GridFunction2D v;
    if constexpr (kParallel) {
      SolveAllAgents(chain, reward, S, v);
    } else {
      SolveAllAgentsSerial(chain, reward, S, v);
    }
    benchmark::DoNotOptimize(v.data().data());
  }
}

template <bool kParallel>
void BM_ChainValueAllAgents(benchmark::State& state) {
  const ChainModel chain = Chain(static_cast<std::size_t>(state.range(0)));
  const RewardSpec reward = builtins::OptimisticCallPut(1.0);
  const StoppingSet S = Tails(chain);
  for (auto _ : state) {
    GridFunction2D f = kParallel ? ChainValueAllAgents(chain, S, reward)
                                 : ChainValueAllAgentsSerial(chain, S, reward);
    benchmark::DoNotOptimize(f.data().data());
  }
}

template <bool kParallel>
void BM_Enumerate(benchmark::State& state) {
  const ChainModel chain = builtins::AbsorbedWalk(static_cast<std::size_t>(state.range(0)));
  const RewardSpec reward = builtins::DistancePenalty();
  for (auto _ : state) {
    auto found = kParallel ? EnumeratePureEquilibria(chain, reward, 1e-9)
                           : EnumeratePureEquilibriaSerial(chain, reward, 1e-9);
    benchmark::DoNotOptimize(found.data());
  }
}

template <bool kParallel>
void BM_CheckVi(benchmark::State& state) {
  const HabitParams p = builtins::HabitWithMemory();
  const CandidateSolution cand = builtins::HabitCandidate(p, HabitThreshold(p));
  const Grid grid(0.01, 7.2, static_cast<std::size_t>(state.range(0)));
  ViTolerances tols;
  tols.h_fd = 1e-3;
  for (auto _ : state) {
    ViReport r = kParallel ? CheckVi(cand, grid, tols) : CheckViSerial(cand, grid, tols);
    benchmark::DoNotOptimize(r.pass);
  }
}

template <bool kParallel>
void BM_MonteCarlo(benchmark::State& state) {
  const CandidateSolution cand = builtins::OptimisticCandidate(1.0);
  const Grid grid(-2.0, 2.0, 401);
  const StopRegion region =
      RegionFromContinuationSet(ExtractContinuationSet(cand, grid), grid, cand.model);
  McOptions o;
  o.x0 = {0.0};
  o.paths = state.range(0);
  o.parallel = kParallel;
  for (auto _ : state) {
    McReport r = McEquilibriumCheck(region, cand.model, cand.reward, o);
    benchmark::DoNotOptimize(r.points.data());
  }
}

}  // namespace

BENCHMARK(BM_SolveAllAgents<false>)->Arg(801)->Arg(2001)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveAllAgents<true>)->Arg(801)->Arg(2001)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainValueAllAgents<false>)->Arg(801)->Arg(2001)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainValueAllAgents<true>)->Arg(801)->Arg(2001)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Enumerate<false>)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Enumerate<true>)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CheckVi<false>)->Arg(720)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CheckVi<true>)->Arg(720)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarlo<false>)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarlo<true>)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
