#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>

namespace equistop {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// M_T - X_0 ~ Exp(c); the running maximum of a driftless Wiener process up
// to an independent Exp(r) time, c = sqrt(2 r).
struct WienerMax {
  double c = 0.0;
};

// Q_y(z) = a e^z - K(y)
struct ExponentialAffine {
  double a = 0.5;
  std::function<double(double)> K;
};

// Reward written as F(x, y) = E_x Q_y(M_T).
struct MaxRepresentation {
  std::function<double(double z, double y)> Q;
  std::optional<ExponentialAffine> exp_affine;
  std::optional<WienerMax> wiener;
  // Draws M_T for X_0 = 0; used when `wiener` is empty.
  std::function<double(std::mt19937_64&)> sampler;
  // Immediate reward; computed from Q when empty.
  std::function<double(double x, double y)> F;

  // a e^z - K(y) with the Wiener law for discount r. `a` defaults to
  // (c - 1)/c.
  static MaxRepresentation StateDependentStrike(
      std::function<double(double)> K, double r,
      std::optional<double> a = std::nullopt);
};

// Reflection X -> -X: Q(z, y) -> Q(-z, -y). Needs a user sampler if the law
// of the maximum is not symmetric; the Wiener law is kept as is.
MaxRepresentation Mirror(const MaxRepresentation& rep);

// The point x*_y where Q_y turns positive; checks that Q_y <= 0 below and is
// positive and non-decreasing above, on `samples` points of the bracket.
double ThresholdForAgent(const MaxRepresentation& rep, double y,
                         Interval bracket, int samples = 10'000);

// Fixed point of y -> x*_y on the y-bracket. The x-bracket used for each x*_y
// defaults to the y-bracket widened by its width on both sides.
double EquilibriumThreshold(const MaxRepresentation& rep, Interval y_bracket,
                            std::optional<Interval> x_bracket = std::nullopt,
                            int samples = 201);

// Left-sided problems: stopping sets (-inf, x*_y].
double LeftThresholdForAgent(const MaxRepresentation& rep, double y,
                             Interval bracket, int samples = 10'000);
double LeftEquilibriumThreshold(const MaxRepresentation& rep,
                                Interval y_bracket,
                                std::optional<Interval> x_bracket = std::nullopt,
                                int samples = 201);

struct OneSidedValueResult {
  double value = 0.0;
  double std_error = 0.0;
  bool monte_carlo = false;
};

// E_x Q_y(M_T) 1{M_T >= x_star}: the value to agent y of stopping at the first
// passage above x_star, started from x.
OneSidedValueResult OneSidedValue(const MaxRepresentation& rep, double x,
                                  double y, double x_star,
                                  std::uint64_t seed = 42,
                                  long samples = 1'000'000);

// E_x Q_y(M_T)
double RepresentedReward(const MaxRepresentation& rep, double x, double y);

}  // namespace equistop
