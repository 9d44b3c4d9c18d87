#include "equistop/monte_carlo.hpp"

#include <omp.h>

#include <algorithm>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <fmt/format.h>
#include <random>

#include "equistop/errors.hpp"
#include "equistop/parallel.hpp"
#include "equistop/rng.hpp"

namespace equistop {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool StopRegion::Stops(double x) const { return Find(x) < 0; }

int StopRegion::Find(double x) const {
  for (std::size_t k = 0; k < continuation.size(); ++k) {
    if (x > continuation[k].first && x < continuation[k].second) {
      return static_cast<int>(k);
    }
  }
  return -1;
}

StopRegion RegionFromContinuationSet(const ContinuationSet& cs,
                                     const Grid& grid,
                                     const DiffusionModel& model) {
  StopRegion region;
  const std::size_t n = grid.size();
  const double lo_end =
      model.left == BoundaryKind::kTruncation ? -kInf : grid.lo();
  const double hi_end =
      model.right == BoundaryKind::kTruncation ? kInf : grid.hi();
  // Flips of the mask are in node order, one refined point each.
  std::vector<double> flip_at(n, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (cs.C.contains(i) != cs.C.contains(i + 1)) flip_at[i] = cs.boundary.at(k++);
  }
  for (auto [first, last] : cs.C.Runs()) {
    const double left = first == 0 ? lo_end : flip_at[first - 1];
    const double right = last + 1 == n ? hi_end : flip_at[last];
    region.continuation.emplace_back(left, right);
  }
  return region;
}

StopRegion RegionFromStoppingSet(const Grid& grid, const StoppingSet& S,
                                 const DiffusionModel& model) {
  StopRegion region;
  const std::size_t n = grid.size();
  const StoppingSet C = S.Complement();
  for (auto [first, last] : C.Runs()) {
    const double left = first == 0 ? (model.left == BoundaryKind::kTruncation
                                          ? -kInf
                                          : grid.lo())
                                    : grid[first - 1];
    const double right = last + 1 == n ? (model.right == BoundaryKind::kTruncation
                                              ? kInf
                                              : grid.hi())
                                       : grid[last + 1];
    region.continuation.emplace_back(left, right);
  }
  return region;
}

namespace {

// Simulation runs in log coordinates for geometric models.
struct Dynamics {
  const DiffusionModel* model;
  bool log_space = false;
  bool exact = false;

  double ToSim(double x) const {
    if (!log_space) return x;
    return x > 0.0 ? std::log(x) : -kInf;
  }
  double ToX(double u) const { return log_space ? std::exp(u) : u; }
  double Drift(double u) const {
    switch (model->family) {
      case DiffusionModel::Family::kArithmetic:
        return model->drift;
      case DiffusionModel::Family::kGeometric:
        return model->drift - 0.5 * model->volatility * model->volatility;
      default:
        return model->mu(u);
    }
  }
  double Vol(double u) const {
    return model->family == DiffusionModel::Family::kGeneral ? model->sigma(u)
                                                             : model->volatility;
  }
};

enum class Phase { kBall, kInterval, kDone };

struct Tracker {
  Phase phase = Phase::kDone;
  double lo = -kInf;
  double hi = kInf;
  double payoff = 0.0;
  double tau = 0.0;
};

struct PathResult {
  double j = 0.0;
  bool capped = false;
  bool truncated = false;
};

class PathSimulator {
 public:
  PathSimulator(const StopRegion& region, const Dynamics& dyn,
                const RewardSpec& reward, const McOptions& opts, double dt_sim,
                double dt_max)
      : region_(region), dyn_(dyn), reward_(reward), opts_(opts),
        dt_sim_(dt_sim), dt_max_(dt_max) {}

  // Fills dev[k] and tau[k] for each radius.
  PathResult Run(double x0, std::uint64_t seed, double* dev, double* tau) const {
    std::mt19937_64 rng(seed);
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> unif;
    const std::size_t K = opts_.h_list.size();
    const double r = reward_.r;

    Tracker j;
    std::vector<Tracker> d(K);
    Enter(j, x0, x0, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      d[k].phase = Phase::kBall;
      d[k].lo = dyn_.ToSim(x0 - opts_.h_list[k]);
      d[k].hi = dyn_.ToSim(x0 + opts_.h_list[k]);
    }

    PathResult out;
    double u = dyn_.ToSim(x0);
    double t = 0.0;
    std::vector<double> levels;
    std::vector<double> fracs;
    for (long step = 0;; ++step) {
      bool all_done = j.phase == Phase::kDone;
      for (const Tracker& tr : d) all_done = all_done && tr.phase == Phase::kDone;
      if (all_done) break;
      if (step >= opts_.step_cap) {
        out.capped = true;
        break;
      }
      if (r > 0.0 && std::exp(-r * t) < opts_.discount_cutoff) {
        out.truncated = true;
        for (Tracker& tr : d) {
          if (tr.phase == Phase::kBall) tr.tau = t;
        }
        break;
      }
      levels.clear();
      auto add = [&](double b) {
        if (std::isfinite(b) &&
            std::find(levels.begin(), levels.end(), b) == levels.end()) {
          levels.push_back(b);
        }
      };
      if (j.phase != Phase::kDone) {
        add(j.lo);
        add(j.hi);
      }
      for (const Tracker& tr : d) {
        if (tr.phase != Phase::kDone) {
          add(tr.lo);
          add(tr.hi);
        }
      }
      const double vol = dyn_.Vol(u);
      double dist = kInf;
      for (double b : levels) dist = std::min(dist, std::abs(u - b));
      double dt = dt_sim_;
      if (std::isfinite(dist)) {
        const double w = dist / (5.0 * vol);
        dt = std::max(dt_sim_, w * w);
      } else {
        dt = kInf;
      }
      dt = std::min(dt, dt_max_);
      const double un = u + dyn_.Drift(u) * dt + vol * std::sqrt(dt) * normal(rng);

      // Crossing fraction per barrier level; -1 when not crossed.
      fracs.assign(levels.size(), -1.0);
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const double b = levels[l];
        const bool above = b > u;
        if (above ? un >= b : un <= b) {
          fracs[l] = (b - u) / (un - u);
          continue;
        }
        const double p = std::exp(-2.0 * (b - u) * (b - un) / (vol * vol * dt));
        if (p > 1e-14 && unif(rng) < p) fracs[l] = 0.5;
      }
      auto hit = [&](const Tracker& tr, double* frac, double* level) {
        bool any = false;
        for (std::size_t l = 0; l < levels.size(); ++l) {
          if (fracs[l] < 0.0 || (levels[l] != tr.lo && levels[l] != tr.hi)) {
            continue;
          }
          if (!any || fracs[l] < *frac) {
            *frac = fracs[l];
            *level = levels[l];
            any = true;
          }
        }
        return any;
      };
      double frac = 0.0, level = 0.0;
      if (j.phase == Phase::kInterval && hit(j, &frac, &level)) {
        Finish(j, level, x0, t + frac * dt);
      }
      for (Tracker& tr : d) {
        if (tr.phase == Phase::kInterval && hit(tr, &frac, &level)) {
          Finish(tr, level, x0, t + frac * dt);
        } else if (tr.phase == Phase::kBall && hit(tr, &frac, &level)) {
          tr.tau = t + frac * dt;
          Enter(tr, dyn_.ToX(level), x0, tr.tau);
          if (tr.phase == Phase::kInterval && !(un > tr.lo && un < tr.hi)) {
            const double b = un >= tr.hi ? tr.hi : tr.lo;
            const double f2 = std::max((b - u) / (un - u), frac);
            Finish(tr, b, x0, t + f2 * dt);
          }
        }
      }
      u = un;
      t += dt;
    }
    out.j = j.payoff;
    for (std::size_t k = 0; k < K; ++k) {
      dev[k] = d[k].payoff;
      tau[k] = d[k].tau;
    }
    return out;
  }

 private:
  // Starts following the rule from x at time t.
  void Enter(Tracker& tr, double x, double x0, double t) const {
    const int idx = region_.Find(x);
    if (idx < 0) {
      tr.phase = Phase::kDone;
      tr.payoff = std::exp(-reward_.r * t) * reward_.F(x, x0);
      return;
    }
    tr.phase = Phase::kInterval;
    tr.lo = dyn_.ToSim(region_.continuation[idx].first);
    tr.hi = dyn_.ToSim(region_.continuation[idx].second);
  }

  void Finish(Tracker& tr, double level, double x0, double t) const {
    tr.phase = Phase::kDone;
    tr.payoff = std::exp(-reward_.r * t) * reward_.F(dyn_.ToX(level), x0);
  }

  const StopRegion& region_;
  const Dynamics& dyn_;
  const RewardSpec& reward_;
  const McOptions& opts_;
  double dt_sim_;
  double dt_max_;
};

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments MeanSe(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

McReport McEquilibriumCheck(
    const StopRegion& region, const DiffusionModel& model,
    const RewardSpec& reward, const McOptions& opts,
    const std::function<double(double, double)>& reference) {
  if (opts.h_list.empty() || opts.paths < 2) {
    throw ConfigError("need at least one radius and two paths");
  }
  const double hmin = *std::min_element(opts.h_list.begin(), opts.h_list.end());
  const double dt_sim = opts.dt_sim > 0.0 ? opts.dt_sim : hmin * hmin / 100.0;
  Dynamics dyn{&model, model.family == DiffusionModel::Family::kGeometric,
               model.family != DiffusionModel::Family::kGeneral};
  double dt_max = opts.dt_max;
  if (dt_max <= 0.0) dt_max = dyn.exact ? 1.0 : 10.0 * dt_sim;
  dt_max = std::max(dt_max, dt_sim);
  const PathSimulator sim(region, dyn, reward, opts, dt_sim, dt_max);

  const std::size_t K = opts.h_list.size();
  const long P = opts.paths;
  McReport report;
  report.pass = true;
  for (std::size_t pi = 0; pi < opts.x0.size(); ++pi) {
    const double x0 = opts.x0[pi];
    std::vector<double> J(P), dev(P * K), tau(P * K);
    std::vector<std::uint8_t> capped(P, 0), truncated(P, 0);
    const std::uint64_t point_seed = StreamSeed(opts.seed, pi);
    auto body = [&](long p) {
      const PathResult pr =
          sim.Run(x0, StreamSeed(point_seed, static_cast<std::uint64_t>(p)),
                  &dev[p * K], &tau[p * K]);
      J[p] = pr.j;
      capped[p] = pr.capped;
      truncated[p] = pr.truncated;
    };
    if (opts.parallel) {
      ExceptionSlot errors;
#pragma omp parallel for schedule(dynamic, 256)
      for (long p = 0; p < P; ++p) {
        try {
          body(p);
        } catch (...) {
          errors.Capture(static_cast<std::size_t>(p));
        }
      }
      errors.Rethrow();
    } else {
      for (long p = 0; p < P; ++p) body(p);
    }

    McPoint pt;
    pt.x0 = x0;
    pt.F_diag = reward.F(x0, x0);
    for (long p = 0; p < P; ++p) {
      pt.capped_paths += capped[p];
      pt.truncated_paths += truncated[p];
    }
    if (pt.capped_paths > P / 1000) {
      throw PathBudgetExceeded(fmt::format(
          "{} of {} paths from x0 = {} hit the {}-step cap", pt.capped_paths, P,
          x0, opts.step_cap));
    }
    const Moments mj = MeanSe(J);
    pt.J = mj.mean;
    pt.J_se = mj.se;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> diff(P), tk(P);
      for (long p = 0; p < P; ++p) {
        diff[p] = J[p] - dev[p * K + k];
        tk[p] = tau[p * K + k];
      }
      const Moments md = MeanSe(diff);
      const Moments mt = MeanSe(tk);
      McRatio rr;
      rr.h = opts.h_list[k];
      rr.numerator = md.mean;
      rr.numerator_se = md.se;
      rr.mean_tau = mt.mean;
      rr.ratio = md.mean / mt.mean;
      std::vector<double> resid(P);
      for (long p = 0; p < P; ++p) resid[p] = diff[p] - rr.ratio * tk[p];
      rr.ratio_se = MeanSe(resid).se / mt.mean;
      pt.per_h.push_back(rr);
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(pt.F_diag));
    pt.cond1_pass = pt.J - pt.F_diag >= -std::max(3.0 * pt.J_se, slack);
    const std::size_t kmin = static_cast<std::size_t>(
        std::min_element(opts.h_list.begin(), opts.h_list.end()) -
        opts.h_list.begin());
    pt.cond2_pass = pt.per_h[kmin].ratio >=
                    -std::max(3.0 * pt.per_h[kmin].ratio_se, slack);
    if (reference) {
      pt.reference = reference(x0, x0);
      pt.reference_pass =
          std::abs(pt.J - pt.reference) <= std::max(3.0 * pt.J_se, 1e-12);
    }
    report.pass = report.pass && pt.cond1_pass && pt.cond2_pass &&
                  pt.reference_pass;
    report.points.push_back(std::move(pt));
  }
  return report;
}

}  // namespace equistop
