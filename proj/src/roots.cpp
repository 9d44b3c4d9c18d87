#include "equistop/roots.hpp"

#include <cmath>
#include <fmt/format.h>

#include "equistop/errors.hpp"

namespace equistop {

double Bisect(const std::function<double(double)>& f, double lo, double hi,
              double xtol, int max_iters) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(std::signbit(flo) != std::signbit(fhi)) || std::isnan(flo) ||
      std::isnan(fhi)) {
    throw NoSignChange(fmt::format("f({}) = {}, f({}) = {}", lo, flo, hi, fhi));
  }
  for (int it = 0; it < max_iters && hi - lo > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> SampledSignChanges(const std::function<double(double)>& f,
                                       double lo, double hi, int n) {
  std::vector<double> out;
  double prev_x = lo;
  double prev = f(lo);
  for (int i = 1; i < n; ++i) {
    const double x = i + 1 == n ? hi : lo + (hi - lo) * i / (n - 1);
    const double v = f(x);
    if ((prev < 0.0 && v >= 0.0) || (prev > 0.0 && v <= 0.0)) {
      out.push_back(prev_x);
    }
    prev_x = x;
    prev = v;
  }
  return out;
}

}  // namespace equistop
