#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace equistop {

using RewardFn = std::function<double(double x, double y)>;

// Reward F(x, y) received when stopping in state x, as judged by agent y,
// together with the discount rate r.
struct RewardSpec {
  RewardFn F;
  double r = 0.0;
  std::string name;

  double operator()(double x, double y) const { return F(x, y); }

  // Throws ConfigError if r < 0 or F is not finite on the sampled points.
  void Validate(std::span<const double> xs, std::span<const double> ys) const;
};

// Uniform mesh lo = x_0 < ... < x_{n-1} = hi.
class Grid {
 public:
  Grid(double lo, double hi, std::size_t n);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double h() const { return h_; }
  std::size_t size() const { return n_; }
  double operator[](std::size_t i) const;
  std::vector<double> Nodes() const;
  std::size_t Nearest(double x) const;

 private:
  double lo_;
  double hi_;
  double h_;
  std::size_t n_;
};

enum class BoundaryKind { kAbsorbing, kTruncation };

// dX = mu(X) dt + sigma(X) dW on [lo, hi].
struct DiffusionModel {
  // Arithmetic: mu, sigma constant. Geometric: mu(x) = drift x,
  // sigma(x) = volatility x. Lets the simulator use exact increments.
  enum class Family { kGeneral, kArithmetic, kGeometric };

  std::function<double(double)> mu;
  std::function<double(double)> sigma;
  double lo = 0.0;
  double hi = 1.0;
  BoundaryKind left = BoundaryKind::kTruncation;
  BoundaryKind right = BoundaryKind::kTruncation;
  Family family = Family::kGeneral;
  double drift = 0.0;
  double volatility = 0.0;

  static DiffusionModel Arithmetic(double mu, double sigma, double lo,
                                   double hi,
                                   BoundaryKind left = BoundaryKind::kTruncation,
                                   BoundaryKind right = BoundaryKind::kTruncation);
  static DiffusionModel Geometric(double mu, double sigma, double lo, double hi,
                                  BoundaryKind left = BoundaryKind::kTruncation,
                                  BoundaryKind right = BoundaryKind::kTruncation);
};

struct Transition {
  std::size_t to;
  double p;
};

// Finite Markov chain. A state is absorbing iff its row is a unit self-loop.
class ChainModel {
 public:
  ChainModel(std::vector<double> states,
             std::vector<std::vector<Transition>> rows,
             std::vector<double> dt);

  static ChainModel FromDense(std::vector<double> states,
                              const std::vector<std::vector<double>>& P,
                              double dt = 1.0);

  std::size_t size() const { return states_.size(); }
  double state(std::size_t i) const { return states_[i]; }
  const std::vector<double>& states() const { return states_; }
  const std::vector<Transition>& row(std::size_t i) const { return rows_[i]; }
  double dt(std::size_t i) const { return dt_[i]; }
  double Discount(std::size_t i, double r) const;
  bool absorbing(std::size_t i) const { return absorbing_[i] != 0; }
  std::size_t absorbing_count() const;
  std::size_t Index(double label) const;

  // Nearest-neighbour structure (every row reaches only i-1, i, i+1).
  bool birth_death() const { return birth_death_; }
  double down(std::size_t i) const { return down_[i]; }
  double stay(std::size_t i) const { return stay_[i]; }
  double up(std::size_t i) const { return up_[i]; }

  // Spacing of the underlying grid for chains built from a diffusion.
  std::optional<double> mesh() const { return mesh_; }
  bool reflecting(std::size_t i) const;

  // Throws ConfigError when r == 0 and no state is absorbing.
  void RequireFiniteValues(double r) const;

 private:
  friend ChainModel MakeChainFromDiffusion(const DiffusionModel&,
                                           const Grid&);
  std::vector<double> states_;
  std::vector<std::vector<Transition>> rows_;
  std::vector<double> dt_;
  std::vector<std::uint8_t> absorbing_;
  bool birth_death_ = false;
  std::vector<double> down_, stay_, up_;
  std::optional<double> mesh_;
  std::vector<std::uint8_t> reflecting_;
  std::uint64_t id_ = 0;  // keys the discount cache; copies share it
};

// Upwinded birth-death approximation. Truncation ends reflect, with the
// outward mass kept in place.
ChainModel MakeChainFromDiffusion(const DiffusionModel& model, const Grid& grid);

class StoppingSet {
 public:
  StoppingSet() = default;
  explicit StoppingSet(std::size_t n, bool value = false)
      : mask_(n, value ? 1 : 0) {}
  static StoppingSet FromIndices(std::size_t n,
                                 std::initializer_list<std::size_t> idx);
  static StoppingSet FromIndices(std::size_t n,
                                 const std::vector<std::size_t>& idx);
  static StoppingSet Absorbing(const ChainModel& chain);

  std::size_t size() const { return mask_.size(); }
  bool contains(std::size_t i) const { return mask_[i] != 0; }
  void set(std::size_t i, bool v = true) { mask_[i] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool IsSubsetOf(const StoppingSet& other) const;
  StoppingSet Union(const StoppingSet& other) const;
  StoppingSet Complement() const;
  std::vector<std::size_t> Indices() const;
  // Maximal runs [first, last] of member indices.
  std::vector<std::pair<std::size_t, std::size_t>> Runs() const;

  bool operator==(const StoppingSet& other) const = default;

 private:
  std::vector<std::uint8_t> mask_;
};

using GridFunction = std::vector<double>;

// Two-argument function sampled on node pairs, stored agent-major.
class GridFunction2D {
 public:
  GridFunction2D() = default;
  GridFunction2D(std::size_t n_x, std::size_t n_agents, double fill = 0.0)
      : nx_(n_x), ny_(n_agents), data_(n_x * n_agents, fill) {}

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  bool empty() const { return data_.empty(); }
  double& operator()(std::size_t x, std::size_t agent) {
    return data_[agent * nx_ + x];
  }
  double operator()(std::size_t x, std::size_t agent) const {
    return data_[agent * nx_ + x];
  }
  std::span<double> Column(std::size_t agent) {
    return {data_.data() + agent * nx_, nx_};
  }
  std::span<const double> Column(std::size_t agent) const {
    return {data_.data() + agent * nx_, nx_};
  }
  GridFunction Diagonal() const;
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> data_;
};

struct EquilibriumReport {
  StoppingSet S;
  GridFunction J;
  GridFunction2D f;
  StoppingSet C;
  // max_x F(x,x) - J(x)
  double cond1_violation = 0.0;
  std::size_t cond1_worst = 0;
  // max over x in S of the one-step continuation gain
  double cond2_violation = 0.0;
  std::size_t cond2_worst = 0;
  // Stop nodes whose one-step neighbourhood touches an absorbing end of a
  // diffusion chain; the deviation test does not resolve these.
  std::vector<std::size_t> unresolved;
  int iterations = 0;
  bool converged = false;
  double tolerance = 0.0;

  bool passed() const {
    return cond1_violation <= tolerance && cond2_violation <= tolerance;
  }
};

// Reward column F(x_i, agent) over chain states.
GridFunction RewardColumn(const ChainModel& chain, const RewardSpec& reward,
                          double agent);

double SupNorm(std::span<const double> v);

}  // namespace equistop
