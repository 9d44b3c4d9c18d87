#include "equistop/one_sided.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <vector>

#include "equistop/errors.hpp"
#include "equistop/roots.hpp"
#include "equistop/rng.hpp"

namespace equistop {

MaxRepresentation MaxRepresentation::StateDependentStrike(
    std::function<double(double)> K, double r, std::optional<double> a) {
  if (!(r > 0.0)) throw ConfigError("state dependent strike needs r > 0");
  MaxRepresentation rep;
  const double c = std::sqrt(2.0 * r);
  const double aa = a.value_or((c - 1.0) / c);
  rep.exp_affine = ExponentialAffine{aa, K};
  rep.wiener = WienerMax{c};
  rep.Q = [aa, K](double z, double y) { return aa * std::exp(z) - K(y); };
  rep.F = [K](double x, double y) { return std::exp(x) - K(y); };
  return rep;
}

MaxRepresentation Mirror(const MaxRepresentation& rep) {
  MaxRepresentation m;
  m.wiener = rep.wiener;
  m.sampler = rep.sampler;
  auto Q = rep.Q;
  m.Q = [Q](double z, double y) { return Q(-z, -y); };
  if (rep.F) {
    auto F = rep.F;
    m.F = [F](double x, double y) { return F(-x, -y); };
  }
  return m;
}

double ThresholdForAgent(const MaxRepresentation& rep, double y,
                         Interval bracket, int samples) {
  if (!(bracket.hi > bracket.lo)) throw ConfigError("empty bracket");
  auto q = [&](double z) { return rep.Q(z, y); };
  const int n = std::max(samples, 3);
  std::vector<double> zs(n), qs(n);
  for (int i = 0; i < n; ++i) {
    zs[i] = i + 1 == n ? bracket.hi
                       : bracket.lo + (bracket.hi - bracket.lo) * i / (n - 1);
    qs[i] = q(zs[i]);
  }
  // Last sample with Q <= 0; everything after it must be positive.
  int last_nonpos = -1;
  for (int i = 0; i < n; ++i) {
    if (qs[i] <= 0.0) last_nonpos = i;
  }
  if (last_nonpos < 0 || last_nonpos == n - 1) {
    throw NoSignChange(fmt::format(
        "Q(., {}) does not turn positive on [{}, {}]", y, bracket.lo, bracket.hi));
  }
  int crossings = 0;
  for (int i = 1; i < n; ++i) {
    if ((qs[i - 1] <= 0.0) != (qs[i] <= 0.0)) ++crossings;
  }
  if (crossings > 1) {
    throw NotMonotoneAbove(fmt::format(
        "Q(., {}) changes sign {} times on [{}, {}]", y, crossings, bracket.lo,
        bracket.hi));
  }
  const double x = Bisect(q, zs[last_nonpos], zs[last_nonpos + 1], 1e-12);
  for (int i = last_nonpos + 2; i < n; ++i) {
    const double slack = 1e-12 * std::max(1.0, std::abs(qs[i - 1]));
    if (qs[i] < qs[i - 1] - slack) {
      throw NotMonotoneAbove(fmt::format(
          "Q(., {}) decreases between {} and {}", y, zs[i - 1], zs[i]));
    }
  }
  return x;
}

double EquilibriumThreshold(const MaxRepresentation& rep, Interval yb,
                            std::optional<Interval> xb_opt, int samples) {
  if (!(yb.hi > yb.lo)) throw ConfigError("empty bracket");
  const double w = yb.hi - yb.lo;
  const Interval xb = xb_opt.value_or(Interval{yb.lo - w, yb.hi + w});
  auto xstar = [&](double y) { return ThresholdForAgent(rep, y, xb); };

  const int m = std::max(samples, 3);
  std::vector<double> ys(m), xs(m);
  for (int i = 0; i < m; ++i) {
    ys[i] = i + 1 == m ? yb.hi : yb.lo + w * i / (m - 1);
    xs[i] = xstar(ys[i]);
  }
  // Continuity: the largest jump between samples must shrink under
  // refinement.
  int worst = 0;
  for (int i = 1; i < m; ++i) {
    if (std::abs(xs[i] - xs[i - 1]) > std::abs(xs[worst + 1] - xs[worst])) {
      worst = i - 1;
    }
  }
  {
    double a = ys[worst], b = ys[worst + 1];
    double fa = xs[worst], fb = xs[worst + 1];
    const double jump = std::abs(fb - fa);
    for (int k = 0; k < 30 && jump > 1e-9; ++k) {
      const double mid = 0.5 * (a + b);
      const double fm = xstar(mid);
      if (std::abs(fm - fa) >= std::abs(fb - fm)) {
        b = mid;
        fb = fm;
      } else {
        a = mid;
        fa = fm;
      }
    }
    if (jump > 1e-9 && std::abs(fb - fa) > 0.5 * jump) {
      throw HypothesisViolated(fmt::format(
          "y -> x*_y jumps by {:.6g} near y = {}", std::abs(fb - fa), a));
    }
  }
  auto g = [&](double y) { return xstar(y) - y; };
  const double glo = xs.front() - ys.front();
  const double ghi = xs.back() - ys.back();
  if (!(glo >= 0.0 && ghi <= 0.0)) {
    throw NoFixedPoint(fmt::format(
        "x*_y - y is {} at y = {} and {} at y = {}", glo, yb.lo, ghi, yb.hi));
  }
  const double x = Bisect(g, yb.lo, yb.hi, 1e-12);
  for (int i = 0; i < m; ++i) {
    const double slack = 1e-9 * std::max(1.0, std::abs(ys[i]));
    if (ys[i] >= x && xs[i] > ys[i] + slack) {
      throw HypothesisViolated(
          fmt::format("x*_y = {} > y = {} above the fixed point", xs[i], ys[i]));
    }
    if (ys[i] <= x && xs[i] < x - slack) {
      throw HypothesisViolated(
          fmt::format("x*_y = {} < x* = {} at y = {}", xs[i], x, ys[i]));
    }
  }
  return x;
}

double LeftThresholdForAgent(const MaxRepresentation& rep, double y,
                             Interval bracket, int samples) {
  return -ThresholdForAgent(Mirror(rep), -y, {-bracket.hi, -bracket.lo},
                            samples);
}

double LeftEquilibriumThreshold(const MaxRepresentation& rep, Interval yb,
                                std::optional<Interval> xb, int samples) {
  std::optional<Interval> mxb;
  if (xb) mxb = Interval{-xb->hi, -xb->lo};
  return -EquilibriumThreshold(Mirror(rep), {-yb.hi, -yb.lo}, mxb, samples);
}

namespace {

// int_0^inf e^{-v} q(v) dv by composite Simpson on [0, 60].
double LaplaceIntegral(const std::function<double(double)>& q) {
  constexpr int kN = 6000;
  constexpr double kUpper = 60.0;
  const double step = kUpper / kN;
  double acc = q(0.0) + std::exp(-kUpper) * q(kUpper);
  for (int i = 1; i < kN; ++i) {
    const double v = i * step;
    acc += (i % 2 ? 4.0 : 2.0) * std::exp(-v) * q(v);
  }
  return acc * step / 3.0;
}

void RequireFiniteMoment(const MaxRepresentation& rep) {
  if (rep.exp_affine && rep.wiener && !(rep.wiener->c > 1.0)) {
    throw DivergentExpectation(fmt::format(
        "E_0 e^(M_T) is infinite for c = {} <= 1", rep.wiener->c));
  }
}

struct McEstimate {
  double mean;
  double se;
};

McEstimate SampleMax(const MaxRepresentation& rep,
                     const std::function<double(double)>& payoff,
                     std::uint64_t seed, long samples) {
  if (!rep.sampler) throw ConfigError("no law for the maximum was given");
  constexpr int kBlocks = 64;
  std::vector<double> sum(kBlocks, 0.0), sum2(kBlocks, 0.0);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < kBlocks; ++b) {
    std::mt19937_64 rng(StreamSeed(seed, static_cast<std::uint64_t>(b)));
    const long lo = samples * b / kBlocks;
    const long hi = samples * (b + 1) / kBlocks;
    for (long k = lo; k < hi; ++k) {
      const double v = payoff(rep.sampler(rng));
      sum[b] += v;
      sum2[b] += v * v;
    }
  }
  double s = 0.0, s2 = 0.0;
  for (int b = 0; b < kBlocks; ++b) {
    s += sum[b];
    s2 += sum2[b];
  }
  const double mean = s / samples;
  const double var = std::max(0.0, s2 / samples - mean * mean);
  return {mean, std::sqrt(var / samples)};
}

}  // namespace

double RepresentedReward(const MaxRepresentation& rep, double x, double y) {
  if (rep.F) return rep.F(x, y);
  RequireFiniteMoment(rep);
  if (rep.exp_affine && rep.wiener) {
    const double c = rep.wiener->c;
    return rep.exp_affine->a * c / (c - 1.0) * std::exp(x) -
           rep.exp_affine->K(y);
  }
  if (rep.wiener) {
    const double c = rep.wiener->c;
    return LaplaceIntegral([&](double v) { return rep.Q(x + v / c, y); });
  }
  return SampleMax(rep, [&](double m) { return rep.Q(x + m, y); }, 42,
                   1'000'000)
      .mean;
}

OneSidedValueResult OneSidedValue(const MaxRepresentation& rep, double x,
                                  double y, double x_star, std::uint64_t seed,
                                  long samples) {
  RequireFiniteMoment(rep);
  if (x >= x_star) return {RepresentedReward(rep, x, y), 0.0, false};
  const double gap = x_star - x;
  if (rep.exp_affine && rep.wiener) {
    const double c = rep.wiener->c;
    const double a = rep.exp_affine->a;
    const double v = a * c / (c - 1.0) * std::exp(x) * std::exp((1.0 - c) * gap) -
                     rep.exp_affine->K(y) * std::exp(-c * gap);
    return {v, 0.0, false};
  }
  if (rep.wiener) {
    const double c = rep.wiener->c;
    const double v =
        std::exp(-c * gap) *
        LaplaceIntegral([&](double u) { return rep.Q(x_star + u / c, y); });
    return {v, 0.0, false};
  }
  const McEstimate est = SampleMax(
      rep,
      [&](double m) { return x + m >= x_star ? rep.Q(x + m, y) : 0.0; }, seed,
      samples);
  return {est.mean, est.se, true};
}

}  // namespace equistop
