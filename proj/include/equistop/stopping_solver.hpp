#pragma once

#include <span>

#include "equistop/core_model.hpp"

namespace equistop {

enum class SolveMethod {
  kAuto,             // envelope on birth-death chains, policy iteration otherwise
  kEnvelope,         // exact concave-majorant construction + policy polish
  kPolicyIteration,  // Howard iteration from "stop everywhere"
  kValueIteration,   // Bellman sweeps, then a policy polish
};

struct SolveOptions {
  SolveMethod method = SolveMethod::kAuto;
  double eps_vi = 1e-10;
  long max_sweeps = 1'000'000;
  int max_policy_iters = 100'000;
};

struct StandardSolution {
  GridFunction value;
  StoppingSet stopset;
  SolveMethod method = SolveMethod::kAuto;
  long iterations = 0;
  double residual = 0.0;
};

// Tolerance for reading "V(x) = F(x)" off a computed value function.
double StopSetTolerance(double eps_vi, double reward_sup);

// sup_{tau <= tau_constraint} E_x e^{-r tau} F(X_tau), with F given as a
// column over chain states. Forced stopping on the constraint, and absorbing
// states pay max(F, 0).
StandardSolution SolveStandard(const ChainModel& chain,
                               std::span<const double> reward, double r,
                               const StoppingSet& constraint,
                               const SolveOptions& opts = {});

StandardSolution SolveStandard(const ChainModel& chain,
                               const RewardSpec& reward, double agent,
                               const StoppingSet& constraint,
                               const SolveOptions& opts = {});

// V >= F(., agent) - 1e-10 everywhere.
bool ValueLowerBoundCheck(std::span<const double> value,
                          const ChainModel& chain, const RewardSpec& reward,
                          double agent);

// Solves the constrained problem for every agent y = chain.state(j) and
// stores it in column j of `values`. If `values` already holds a solution of
// the same shape, returns the largest pointwise increase over it, else 0.
double SolveAllAgents(const ChainModel& chain, const RewardSpec& reward,
                      const StoppingSet& constraint, GridFunction2D& values,
                      const SolveOptions& opts = {});
double SolveAllAgentsSerial(const ChainModel& chain, const RewardSpec& reward,
                            const StoppingSet& constraint,
                            GridFunction2D& values,
                            const SolveOptions& opts = {});

}  // namespace equistop
