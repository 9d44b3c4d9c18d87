#pragma once

#include <functional>
#include <string>
#include <vector>

#include "equistop/core_model.hpp"

namespace equistop {

// Candidate auxiliary function f(x, y) for a diffusion problem.
struct CandidateSolution {
  std::function<double(double x, double y)> f;
  DiffusionModel model;
  RewardSpec reward;
  std::string name;
  // Set when f interpolates grid values; derivative probes then use the grid
  // spacing instead of off-grid offsets.
  double grid_spacing = 0.0;

  // Piecewise-linear interpolation of f sampled on grid x grid.
  static CandidateSolution FromGridFunction(const Grid& grid,
                                            const GridFunction2D& values,
                                            DiffusionModel model,
                                            RewardSpec reward);
};

struct ContinuationSet {
  StoppingSet C;  // nodes with f(x,x) - F(x,x) > tol
  // Nodes of the stop side next to each flip of the mask.
  std::vector<std::size_t> boundary_nodes;
  // Flip points refined between the neighbouring nodes.
  std::vector<double> boundary;
};

// Throws EmptyBoundary if the mask never flips.
ContinuationSet ExtractContinuationSet(const CandidateSolution& cand,
                                       const Grid& grid, double tol = 1e-10);

struct ViTolerances {
  double interior = 1e-4;
  double smooth_fit = 1e-6;
  double bound = 1e6;  // cap on |f| over the closure of C
  double h_fd = 0.0;   // 0: grid.h() / 4
  double extract_tol = 1e-10;
};

struct ViReport {
  double subharmonic = 0.0;   // max (A f - r f)(x, x)^+ off the boundary
  double harmonic = 0.0;      // max |A f - r f| on C x agents
  double obstacle = 0.0;      // max |f - F| off C, all agents
  double boundary_limit = 0.0;  // max one-sided limit of A f - r f at the boundary
  double smooth_fit_gap = 0.0;  // max |f_x(b-) - f_x(b+)| with agent y = b
  double continuity_gap = 0.0;  // max |f(b+, y) - f(b-, y)| over agents
  double max_abs_f = 0.0;       // over the closure of C
  bool sigma_positive = true;   // at the boundary points
  std::vector<double> boundary;
  std::size_t c_nodes = 0;
  bool pass = false;
};

ViReport CheckVi(const CandidateSolution& cand, const Grid& grid,
                 const ViTolerances& tols = {});
ViReport CheckViSerial(const CandidateSolution& cand, const Grid& grid,
                       const ViTolerances& tols = {});

// Reward 1 - exp(-a (x + g(y) - k)) on a geometric Brownian motion with
// volatility sigma and discount r.
struct HabitParams {
  double a = 0.7;
  double r = 0.1;
  double k = 0.5;
  double sigma = 1.0;
  std::function<double(double)> g = [](double) { return 0.0; };
  std::string g_name = "zero";
};

double HabitGamma(double r, double sigma);

// Zero of H(x) = gamma - exp(-a (x + g(x) - k)) (gamma + a x) on (0, x_max].
double HabitThreshold(const HabitParams& p, double x_max = 50.0,
                      int samples = 10'000);

double HabitValue(double x, double y, double x_star, const HabitParams& p);

}  // namespace equistop
