#pragma once

#include <functional>
#include <vector>

namespace equistop {

// Bisection on [lo, hi]; f(lo) and f(hi) must differ in sign (a zero at an
// end point is returned directly). Throws NoSignChange otherwise.
double Bisect(const std::function<double(double)>& f, double lo, double hi,
              double xtol = 1e-12, int max_iters = 200);

// Sign changes of f on a uniform sample of n points over [lo, hi]; each entry
// is the left sample of a bracketing pair.
std::vector<double> SampledSignChanges(const std::function<double(double)>& f,
                                       double lo, double hi, int n);

}  // namespace equistop
