#pragma once

#include <span>
#include <vector>

#include "equistop/core_model.hpp"

namespace equistop {

// f_S(x, agent) = E_x e^{-r tau_S} F(X_{tau_S}, agent) over all states x.
GridFunction ChainValue(const ChainModel& chain, const StoppingSet& S,
                        const RewardSpec& reward, double agent);

// Same, for every agent y = chain.state(j) (column j).
GridFunction2D ChainValueAllAgents(const ChainModel& chain,
                                   const StoppingSet& S,
                                   const RewardSpec& reward);
GridFunction2D ChainValueAllAgentsSerial(const ChainModel& chain,
                                         const StoppingSet& S,
                                         const RewardSpec& reward);

// Default tolerance: 1e-9 on plain chains, 10 h on diffusion chains.
double DefaultEquilibriumTolerance(const ChainModel& chain);

// Checks J_S >= F on the diagonal and that continuing for exactly one step
// and then following S does not pay at any non-absorbing x in S.
EquilibriumReport CheckPureEquilibrium(const ChainModel& chain,
                                       const StoppingSet& S,
                                       const RewardSpec& reward, double tol);

// Same checks from a precomputed f_S (columns indexed by agent node).
EquilibriumReport ReportFromValues(const ChainModel& chain,
                                   const StoppingSet& S,
                                   const RewardSpec& reward, GridFunction2D f,
                                   double tol);

inline constexpr std::size_t kMaxEnumeratedStates = 24;

// Every S (absorbing states included) passing CheckPureEquilibrium, ordered
// by cardinality and then by bitmask.
std::vector<StoppingSet> EnumeratePureEquilibria(const ChainModel& chain,
                                                 const RewardSpec& reward,
                                                 double tol);
std::vector<StoppingSet> EnumeratePureEquilibriaSerial(
    const ChainModel& chain, const RewardSpec& reward, double tol);

// Randomised stopping on the four-state chain with states (d1, a, b, d2):
// stop at a with probability p and at b with probability q.
struct MixedProfile {
  double p = 0.0;
  double q = 0.0;
};

enum class MixedAgent { kA, kB };

double MixedValue(MixedProfile profile, MixedAgent agent);

struct MixedCheck {
  bool pass = false;
  double max_gain = 0.0;
  double gain_a = 0.0;  // best p-deviation gain for agent a
  double gain_b = 0.0;  // best q-deviation gain for agent b
  double best_p = 0.0;
  double best_q = 0.0;
};

// Scans unilateral deviations over an n_check-point grid on [0, 1].
MixedCheck VerifyMixedEquilibrium(MixedProfile profile, int n_check = 101);

}  // namespace equistop
