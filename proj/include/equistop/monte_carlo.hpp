#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "equistop/core_model.hpp"
#include "equistop/vi_verifier.hpp"

namespace equistop {

// Continuation region as sorted disjoint open intervals; everything else
// stops. Infinite ends are allowed.
struct StopRegion {
  std::vector<std::pair<double, double>> continuation;

  bool Stops(double x) const;
  // Index of the interval containing x, or -1 when x stops.
  int Find(double x) const;
};

// Intervals between refined boundary points. Ends of the grid become
// infinite at truncation boundaries and stop at absorbing ones.
StopRegion RegionFromContinuationSet(const ContinuationSet& cs,
                                     const Grid& grid,
                                     const DiffusionModel& model);

// Maximal runs of non-stopping nodes i..j become (x_{i-1}, x_{j+1}).
StopRegion RegionFromStoppingSet(const Grid& grid, const StoppingSet& S,
                                 const DiffusionModel& model);

struct McOptions {
  std::vector<double> x0;
  std::vector<double> h_list{0.2, 0.1, 0.05};
  long paths = 200'000;
  std::uint64_t seed = 42;
  double dt_sim = 0.0;  // 0: min(h)^2 / 100
  // Steps grow with the distance to the nearest barrier up to this cap; 0
  // picks 10 dt_sim for general diffusions and no cap for exact families.
  double dt_max = 0.0;
  long step_cap = 10'000'000;
  double discount_cutoff = 1e-12;
  bool parallel = true;
};

struct McRatio {
  double h = 0.0;
  double numerator = 0.0;  // mean of J - J_deviated
  double numerator_se = 0.0;
  double mean_tau = 0.0;   // mean exit time of the h-ball
  double ratio = 0.0;
  double ratio_se = 0.0;
};

struct McPoint {
  double x0 = 0.0;
  double J = 0.0;
  double J_se = 0.0;
  double F_diag = 0.0;
  double reference = std::numeric_limits<double>::quiet_NaN();
  std::vector<McRatio> per_h;
  bool cond1_pass = false;
  bool cond2_pass = false;
  bool reference_pass = true;
  long capped_paths = 0;
  long truncated_paths = 0;  // stopped by the discount cutoff
};

struct McReport {
  std::vector<McPoint> points;
  bool pass = false;
};

// Estimates J(x0) for the entry time into the stop region and the deviated
// value (leave the h-ball first, then follow the rule) on the same paths.
McReport McEquilibriumCheck(
    const StopRegion& region, const DiffusionModel& model,
    const RewardSpec& reward, const McOptions& opts,
    const std::function<double(double, double)>& reference = {});

}  // namespace equistop
