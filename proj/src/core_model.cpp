#include "equistop/core_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>

#include "equistop/errors.hpp"

namespace equistop {

void RewardSpec::Validate(std::span<const double> xs,
                          std::span<const double> ys) const {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ConfigError(fmt::format("discount rate must be >= 0, got {}", r));
  }
  if (!F) throw ConfigError("reward function is empty");
  for (double y : ys) {
    for (double x : xs) {
      const double v = F(x, y);
      if (!std::isfinite(v)) {
        throw ConfigError(
            fmt::format("reward not finite at x={}, y={} ({})", x, y, v));
      }
    }
  }
}

Grid::Grid(double lo, double hi, std::size_t n) : lo_(lo), hi_(hi), n_(n) {
  if (n < 3) throw ConfigError(fmt::format("grid needs n >= 3, got {}", n));
  if (!(hi > lo)) {
    throw ConfigError(fmt::format("grid needs lo < hi, got [{}, {}]", lo, hi));
  }
  h_ = (hi - lo) / static_cast<double>(n - 1);
}

double Grid::operator[](std::size_t i) const {
  if (i + 1 == n_) return hi_;
  return lo_ + (hi_ - lo_) * static_cast<double>(i) /
                   static_cast<double>(n_ - 1);
}

std::vector<double> Grid::Nodes() const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = (*this)[i];
  return out;
}

std::size_t Grid::Nearest(double x) const {
  const double t = std::round((x - lo_) / h_);
  if (t <= 0.0) return 0;
  if (t >= static_cast<double>(n_ - 1)) return n_ - 1;
  return static_cast<std::size_t>(t);
}

DiffusionModel DiffusionModel::Arithmetic(double mu, double sigma, double lo,
                                          double hi, BoundaryKind left,
                                          BoundaryKind right) {
  DiffusionModel m;
  m.mu = [mu](double) { return mu; };
  m.sigma = [sigma](double) { return sigma; };
  m.lo = lo;
  m.hi = hi;
  m.left = left;
  m.right = right;
  m.family = Family::kArithmetic;
  m.drift = mu;
  m.volatility = sigma;
  return m;
}

DiffusionModel DiffusionModel::Geometric(double mu, double sigma, double lo,
                                         double hi, BoundaryKind left,
                                         BoundaryKind right) {
  DiffusionModel m;
  m.mu = [mu](double x) { return mu * x; };
  m.sigma = [sigma](double x) { return sigma * x; };
  m.lo = lo;
  m.hi = hi;
  m.left = left;
  m.right = right;
  m.family = Family::kGeometric;
  m.drift = mu;
  m.volatility = sigma;
  return m;
}

namespace {
std::uint64_t NextChainId() {
  static std::atomic<std::uint64_t> next{1};
  return next.fetch_add(1);
}
}  // namespace

ChainModel::ChainModel(std::vector<double> states,
                       std::vector<std::vector<Transition>> rows,
                       std::vector<double> dt)
    : states_(std::move(states)), rows_(std::move(rows)), dt_(std::move(dt)),
      id_(NextChainId()) {
  const std::size_t n = states_.size();
  if (n == 0) throw ConfigError("chain has no states");
  if (rows_.size() != n || dt_.size() != n) {
    throw ConfigError("chain rows/dt do not match the state count");
  }
  absorbing_.assign(n, 0);
  birth_death_ = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(dt_[i] > 0.0) || !std::isfinite(dt_[i])) {
      throw ConfigError(fmt::format("dt must be > 0 at state {}", i));
    }
    double sum = 0.0;
    double self = 0.0;
    for (const Transition& t : rows_[i]) {
      if (t.to >= n) {
        throw ConfigError(fmt::format("transition {} -> {} out of range", i,
                                      t.to));
      }
      if (!(t.p >= 0.0) || t.p > 1.0 + 1e-12) {
        throw ConfigError(
            fmt::format("probability {} -> {} is {}", i, t.to, t.p));
      }
      sum += t.p;
      if (t.to == i) self += t.p;
      const auto d = static_cast<long long>(t.to) - static_cast<long long>(i);
      if (t.p > 0.0 && (d < -1 || d > 1)) birth_death_ = false;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ConfigError(
          fmt::format("row {} sums to {} (defect {:.3e})", i, sum, sum - 1.0));
    }
    if (std::abs(self - 1.0) <= 1e-12) absorbing_[i] = 1;
  }
  if (birth_death_) {
    down_.assign(n, 0.0);
    stay_.assign(n, 0.0);
    up_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const Transition& t : rows_[i]) {
        if (t.to + 1 == i) down_[i] += t.p;
        else if (t.to == i) stay_[i] += t.p;
        else if (t.to == i + 1) up_[i] += t.p;
      }
    }
  }
}

ChainModel ChainModel::FromDense(std::vector<double> states,
                                 const std::vector<std::vector<double>>& P,
                                 double dt) {
  const std::size_t n = states.size();
  if (P.size() != n) throw ConfigError("transition matrix has wrong size");
  std::vector<std::vector<Transition>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (P[i].size() != n) throw ConfigError("transition matrix is not square");
    for (std::size_t j = 0; j < n; ++j) {
      if (P[i][j] != 0.0) rows[i].push_back({j, P[i][j]});
    }
  }
  return ChainModel(std::move(states), std::move(rows),
                    std::vector<double>(n, dt));
}

double ChainModel::Discount(std::size_t i, double r) const {
  if (r == 0.0) return 1.0;
  // Per-thread cache of the last (chain, r) pair.
  thread_local struct {
    std::uint64_t id = 0;
    double r = 0.0;
    std::vector<double> beta;
  } cache;
  if (cache.id != id_ || cache.r != r) {
    cache.beta.resize(dt_.size());
    for (std::size_t k = 0; k < dt_.size(); ++k) {
      cache.beta[k] = std::exp(-r * dt_[k]);
    }
    cache.id = id_;
    cache.r = r;
  }
  return cache.beta[i];
}

std::size_t ChainModel::absorbing_count() const {
  return static_cast<std::size_t>(
      std::count(absorbing_.begin(), absorbing_.end(), 1));
}

std::size_t ChainModel::Index(double label) const {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i] == label) return i;
  }
  throw ConfigError(fmt::format("no state labelled {}", label));
}

bool ChainModel::reflecting(std::size_t i) const {
  return !reflecting_.empty() && reflecting_[i] != 0;
}

void ChainModel::RequireFiniteValues(double r) const {
  if (r == 0.0 && absorbing_count() == 0) {
    throw ConfigError("values may be infinite: r = 0 and no absorbing state");
  }
}

ChainModel MakeChainFromDiffusion(const DiffusionModel& model,
                                  const Grid& grid) {
  const double eps = 1e-12 * std::max(1.0, model.hi - model.lo);
  if (grid.lo() < model.lo - eps || grid.hi() > model.hi + eps) {
    throw ConfigError(fmt::format("grid [{}, {}] leaves the domain [{}, {}]",
                                  grid.lo(), grid.hi(), model.lo, model.hi));
  }
  const std::size_t n = grid.size();
  const double h = grid.h();
  std::vector<double> states = grid.Nodes();
  std::vector<std::vector<Transition>> rows(n);
  std::vector<double> dt(n, h * h);
  std::vector<std::uint8_t> reflecting(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const bool left_end = i == 0;
    const bool right_end = i + 1 == n;
    const BoundaryKind kind = left_end ? model.left : model.right;
    if ((left_end || right_end) && kind == BoundaryKind::kAbsorbing) {
      rows[i] = {{i, 1.0}};
      continue;
    }
    const double x = states[i];
    const double s = model.sigma(x);
    const double m = model.mu(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw NonPositiveVolatility(
          fmt::format("sigma({}) = {} at node {}", x, s, i));
    }
    if (!std::isfinite(m)) {
      throw ConfigError(fmt::format("mu({}) is not finite", x));
    }
    const double s2 = s * s;
    const double denom = s2 + h * std::abs(m);
    const double up = (0.5 * s2 + h * std::max(m, 0.0)) / denom;
    const double down = (0.5 * s2 + h * std::max(-m, 0.0)) / denom;
    dt[i] = h * h / denom;
    if (left_end) {
      rows[i] = {{i, down}, {i + 1, up}};
      reflecting[i] = 1;
    } else if (right_end) {
      rows[i] = {{i - 1, down}, {i, up}};
      reflecting[i] = 1;
    } else {
      rows[i] = {{i - 1, down}, {i + 1, up}};
    }
  }
  ChainModel chain(std::move(states), std::move(rows), std::move(dt));
  chain.mesh_ = h;
  chain.reflecting_ = std::move(reflecting);
  return chain;
}

StoppingSet StoppingSet::FromIndices(std::size_t n,
                                     std::initializer_list<std::size_t> idx) {
  return FromIndices(n, std::vector<std::size_t>(idx));
}

StoppingSet StoppingSet::FromIndices(std::size_t n,
                                     const std::vector<std::size_t>& idx) {
  StoppingSet s(n);
  for (std::size_t i : idx) {
    if (i >= n) throw ConfigError(fmt::format("index {} out of range", i));
    s.set(i);
  }
  return s;
}

StoppingSet StoppingSet::Absorbing(const ChainModel& chain) {
  StoppingSet s(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) s.set(i, chain.absorbing(i));
  return s;
}

std::size_t StoppingSet::count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

bool StoppingSet::IsSubsetOf(const StoppingSet& other) const {
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i] && !other.mask_[i]) return false;
  }
  return true;
}

StoppingSet StoppingSet::Union(const StoppingSet& other) const {
  StoppingSet out(*this);
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (other.mask_[i]) out.mask_[i] = 1;
  }
  return out;
}

StoppingSet StoppingSet::Complement() const {
  StoppingSet out(*this);
  for (auto& m : out.mask_) m = m ? 0 : 1;
  return out;
}

std::vector<std::size_t> StoppingSet::Indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> StoppingSet::Runs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < mask_.size()) {
    if (!mask_[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < mask_.size() && mask_[j + 1]) ++j;
    out.emplace_back(i, j);
    i = j + 1;
  }
  return out;
}

GridFunction GridFunction2D::Diagonal() const {
  const std::size_t n = std::min(nx_, ny_);
  GridFunction d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = (*this)(i, i);
  return d;
}

GridFunction RewardColumn(const ChainModel& chain, const RewardSpec& reward,
                          double agent) {
  GridFunction col(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    col[i] = reward.F(chain.state(i), agent);
  }
  return col;
}

double SupNorm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace equistop
