#include "equistop/vi_verifier.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "equistop/errors.hpp"
#include "equistop/parallel.hpp"
#include "equistop/roots.hpp"

namespace equistop {

CandidateSolution CandidateSolution::FromGridFunction(
    const Grid& grid, const GridFunction2D& values, DiffusionModel model,
    RewardSpec reward) {
  if (values.nx() != grid.size() || values.ny() != grid.size()) {
    throw ConfigError("grid function does not match the grid");
  }
  CandidateSolution cand;
  cand.model = std::move(model);
  cand.reward = std::move(reward);
  cand.name = "grid";
  cand.grid_spacing = grid.h();
  // Linear in x between nodes, nearest node in y.
  cand.f = [grid, values](double x, double y) {
    const std::size_t j = grid.Nearest(y);
    const double t = (x - grid.lo()) / grid.h();
    if (t <= 0.0) return values(0, j);
    const auto last = static_cast<double>(grid.size() - 1);
    if (t >= last) return values(grid.size() - 1, j);
    const auto i = static_cast<std::size_t>(t);
    const double w = t - static_cast<double>(i);
    return (1.0 - w) * values(i, j) + w * values(i + 1, j);
  };
  return cand;
}

namespace {

double DiagGap(const CandidateSolution& cand, double x) {
  return cand.f(x, x) - cand.reward.F(x, x);
}

double RefineFlip(const CandidateSolution& cand, double lo, double hi,
                  double tol) {
  const double fine = 1e-14 * std::max(1.0, std::abs(cand.reward.F(lo, lo)));
  double thr = fine;
  bool plo = DiagGap(cand, lo) > thr;
  if (plo == (DiagGap(cand, hi) > thr)) {
    thr = tol;
    plo = DiagGap(cand, lo) > thr;
  }
  for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((DiagGap(cand, mid) > thr) == plo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// (A f - r f)(x, y) with a centred second difference and an upwinded first
// difference of half-width eta.
double Generator(const CandidateSolution& cand, double x, double y,
                 double eta) {
  const double f0 = cand.f(x, y);
  const double fp = cand.f(x + eta, y);
  const double fm = cand.f(x - eta, y);
  const double mu = cand.model.mu(x);
  const double sigma = cand.model.sigma(x);
  const double d1 = mu >= 0.0 ? (fp - f0) / eta : (f0 - fm) / eta;
  const double d2 = (fp - 2.0 * f0 + fm) / (eta * eta);
  return mu * d1 + 0.5 * sigma * sigma * d2 - cand.reward.r * f0;
}

struct AgentMaxima {
  double subharmonic = 0.0;
  double harmonic = 0.0;
  double obstacle = 0.0;
  double max_abs_f = 0.0;
};

AgentMaxima CheckAgent(const CandidateSolution& cand, const Grid& grid,
                       const ContinuationSet& cs, double eta, std::size_t j) {
  AgentMaxima out;
  const double y = grid[j];
  const double margin = grid.h() + eta;
  auto near_boundary = [&](double x) {
    for (double b : cs.boundary) {
      if (std::abs(x - b) <= margin) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const bool in_c = cs.C.contains(i);
    const bool near = near_boundary(x);
    if (in_c || near) {
      out.max_abs_f = std::max(out.max_abs_f, std::abs(cand.f(x, y)));
    }
    if (!in_c) {
      out.obstacle =
          std::max(out.obstacle, std::abs(cand.f(x, y) - cand.reward.F(x, y)));
    }
    if (near || i == 0 || i + 1 == grid.size()) continue;
    if (in_c) {
      out.harmonic =
          std::max(out.harmonic, std::abs(Generator(cand, x, y, eta)));
    }
    if (i == j) {
      out.subharmonic = std::max(out.subharmonic, Generator(cand, x, x, eta));
    }
  }
  return out;
}

void BoundaryChecks(const CandidateSolution& cand, const Grid& grid,
                    double eta, ViReport& rep) {
  const bool coarse = cand.grid_spacing > 0.0;
  const double hg = cand.grid_spacing;
  // Smooth fit: one-sided derivatives extrapolated to b.
  const double o1 = coarse ? 2.0 * hg : 1e-5;
  const double o2 = coarse ? 3.0 * hg : 2e-5;
  const double s = coarse ? hg : 1e-6;
  // Boundary limit of the generator.
  const double d1 = coarse ? 2.0 * hg : 0.5 * eta;
  const double d2 = 2.0 * d1;
  // Continuity probe.
  const double eps = coarse ? hg : 1e-5;
  for (double b : rep.boundary) {
    if (!(cand.model.sigma(b) > 0.0)) rep.sigma_positive = false;
    auto deriv = [&](double x) {
      return (cand.f(x + s, b) - cand.f(x - s, b)) / (2.0 * s);
    };
    const double left = (o2 * deriv(b - o1) - o1 * deriv(b - o2)) / (o2 - o1);
    const double right = (o2 * deriv(b + o1) - o1 * deriv(b + o2)) / (o2 - o1);
    rep.smooth_fit_gap = std::max(rep.smooth_fit_gap, std::abs(left - right));

    for (double side : {-1.0, 1.0}) {
      const double g1 = Generator(cand, b + side * d1, b, d1 / 4.0);
      const double g2 = Generator(cand, b + side * d2, b, d2 / 4.0);
      rep.boundary_limit = std::max(rep.boundary_limit, 2.0 * g1 - g2);
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double y = grid[j];
      const double j1 = cand.f(b + eps, y) - cand.f(b - eps, y);
      const double j2 = cand.f(b + 2.0 * eps, y) - cand.f(b - 2.0 * eps, y);
      rep.continuity_gap = std::max(rep.continuity_gap, std::abs(2.0 * j1 - j2));
    }
  }
}

ViReport Finish(ViReport rep, const ViTolerances& tols) {
  rep.pass = rep.subharmonic <= tols.interior && rep.harmonic <= tols.interior &&
             rep.obstacle <= tols.interior &&
             rep.boundary_limit <= tols.interior &&
             rep.continuity_gap <= tols.interior &&
             rep.smooth_fit_gap <= tols.smooth_fit &&
             rep.max_abs_f <= tols.bound && rep.sigma_positive;
  return rep;
}

ViReport CheckViImpl(const CandidateSolution& cand, const Grid& grid,
                     const ViTolerances& tols, bool parallel) {
  const double eta = cand.grid_spacing > 0.0 ? cand.grid_spacing
                     : tols.h_fd > 0.0       ? tols.h_fd
                                             : grid.h() / 4.0;
  const ContinuationSet cs = ExtractContinuationSet(cand, grid, tols.extract_tol);
  ViReport rep;
  rep.boundary = cs.boundary;
  rep.c_nodes = cs.C.count();
  const std::size_t n = grid.size();
  std::vector<AgentMaxima> per(n);
  if (parallel) {
    ExceptionSlot errors;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t j = 0; j < n; ++j) {
      try {
        per[j] = CheckAgent(cand, grid, cs, eta, j);
      } catch (...) {
        errors.Capture(j);
      }
    }
    errors.Rethrow();
  } else {
    for (std::size_t j = 0; j < n; ++j) per[j] = CheckAgent(cand, grid, cs, eta, j);
  }
  for (const AgentMaxima& m : per) {
    rep.subharmonic = std::max(rep.subharmonic, m.subharmonic);
    rep.harmonic = std::max(rep.harmonic, m.harmonic);
    rep.obstacle = std::max(rep.obstacle, m.obstacle);
    rep.max_abs_f = std::max(rep.max_abs_f, m.max_abs_f);
  }
  BoundaryChecks(cand, grid, eta, rep);
  return Finish(std::move(rep), tols);
}

}  // namespace

ContinuationSet ExtractContinuationSet(const CandidateSolution& cand,
                                       const Grid& grid, double tol) {
  const std::size_t n = grid.size();
  ContinuationSet cs;
  cs.C = StoppingSet(n);
  for (std::size_t i = 0; i < n; ++i) cs.C.set(i, DiagGap(cand, grid[i]) > tol);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (cs.C.contains(i) == cs.C.contains(i + 1)) continue;
    cs.boundary_nodes.push_back(cs.C.contains(i) ? i + 1 : i);
    cs.boundary.push_back(RefineFlip(cand, grid[i], grid[i + 1], tol));
  }
  if (cs.boundary.empty()) {
    throw EmptyBoundary(fmt::format("{} of {} nodes are in C", cs.C.count(), n));
  }
  return cs;
}

ViReport CheckVi(const CandidateSolution& cand, const Grid& grid,
                 const ViTolerances& tols) {
  return CheckViImpl(cand, grid, tols, true);
}

ViReport CheckViSerial(const CandidateSolution& cand, const Grid& grid,
                       const ViTolerances& tols) {
  return CheckViImpl(cand, grid, tols, false);
}

double HabitGamma(double r, double sigma) {
  return 0.5 + std::sqrt(0.25 + 2.0 * r / (sigma * sigma));
}

double HabitThreshold(const HabitParams& p, double x_max, int samples) {
  if (!(p.a > 0.0 && p.r > 0.0 && p.k > 0.0 && p.sigma > 0.0)) {
    throw ConfigError("habit parameters a, r, k, sigma must be positive");
  }
  if (std::abs(p.g(0.0)) > 1e-12) throw ConfigError("g(0) must be 0");
  const int n = std::max(samples, 3);
  double prev_g = p.g(0.0);
  for (int i = 1; i < n; ++i) {
    const double x = x_max * i / (n - 1);
    const double gx = p.g(x);
    const double xprev = x_max * (i - 1) / (n - 1);
    if (gx > prev_g + 1e-12) {
      throw ConfigError(fmt::format("g increases near x = {}", x));
    }
    if (x + gx < xprev + prev_g - 1e-12) {
      throw ConfigError(fmt::format("x + g(x) decreases near x = {}", x));
    }
    prev_g = gx;
  }
  const double gamma = HabitGamma(p.r, p.sigma);
  auto H = [&](double x) {
    return gamma - std::exp(-p.a * (x + p.g(x) - p.k)) * (gamma + p.a * x);
  };
  const double lo = x_max * 1e-9;
  const std::vector<double> changes = SampledSignChanges(H, lo, x_max, n);
  if (changes.empty()) throw NoRoot(fmt::format("H has no zero in (0, {}]", x_max));
  if (changes.size() > 1) {
    throw MultipleRoots(fmt::format("H changes sign {} times in (0, {}]",
                                    changes.size(), x_max));
  }
  const double step = (x_max - lo) / (n - 1);
  const double x = Bisect(H, changes[0], std::min(changes[0] + step, x_max), 1e-13);
  if (!(x + p.g(x) - p.k > 0.0)) {
    throw HypothesisViolated(fmt::format("x* + g(x*) - k = {} <= 0",
                                         x + p.g(x) - p.k));
  }
  return x;
}

double HabitValue(double x, double y, double x_star, const HabitParams& p) {
  if (x >= x_star) return 1.0 - std::exp(-p.a * (x + p.g(y) - p.k));
  if (x <= 0.0) return 0.0;
  const double gamma = HabitGamma(p.r, p.sigma);
  return std::pow(x / x_star, gamma) *
         (1.0 - std::exp(-p.a * (x_star + p.g(y) - p.k)));
}

}  // namespace equistop
