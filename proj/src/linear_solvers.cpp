#include "equistop/linear_solvers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "equistop/errors.hpp"

namespace equistop {

TridiagonalLU::TridiagonalLU(std::span<const double> a,
                             std::span<const double> b,
                             std::span<const double> c)
    : a_(a.begin(), a.end()), cp_(b.size()), inv_(b.size()) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double sub = i > 0 ? a[i] * cp_[i - 1] : 0.0;
    const double pivot = b[i] - sub;
    const double scale =
        std::abs(b[i]) + (i > 0 ? std::abs(a[i]) : 0.0) +
        (i + 1 < n ? std::abs(c[i]) : 0.0);
    if (!(std::abs(pivot) > 1e-12 * scale)) {
      throw SingularSystem(fmt::format("vanishing pivot {} at row {}", pivot, i));
    }
    inv_[i] = 1.0 / pivot;
    cp_[i] = i + 1 < n ? c[i] * inv_[i] : 0.0;
  }
}

void TridiagonalLU::Solve(std::span<double> d) const {
  const std::size_t n = inv_.size();
  d[0] *= inv_[0];
  for (std::size_t i = 1; i < n; ++i) {
    d[i] = (d[i] - a_[i] * d[i - 1]) * inv_[i];
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= cp_[i] * d[i + 1];
}

double OneStepValue(const ChainModel& chain, std::size_t i,
                    std::span<const double> v, double r) {
  double s = 0.0;
  for (const Transition& t : chain.row(i)) s += t.p * v[t.to];
  return chain.Discount(i, r) * s;
}

struct EntryValueSolver::Dense {
  std::vector<std::size_t> free;
  std::vector<long> slot;
  Eigen::FullPivLU<Eigen::MatrixXd> lu;
};

EntryValueSolver::EntryValueSolver(const ChainModel& chain,
                                   const StoppingSet& S, double r)
    : chain_(&chain), S_(S), r_(r) {
  const std::size_t n = chain.size();
  if (S.size() != n) throw ConfigError("stopping set size mismatch");
  if (chain.birth_death()) {
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (S.contains(i)) continue;
      const double beta = chain.Discount(i, r);
      a[i] = -beta * chain.down(i);
      b[i] = 1.0 - beta * chain.stay(i);
      c[i] = -beta * chain.up(i);
    }
    tri_ = std::make_unique<TridiagonalLU>(a, b, c);
    return;
  }
  dense_ = std::make_unique<Dense>();
  dense_->slot.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!S.contains(i)) {
      dense_->slot[i] = static_cast<long>(dense_->free.size());
      dense_->free.push_back(i);
    }
  }
  const auto m = static_cast<Eigen::Index>(dense_->free.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const std::size_t i = dense_->free[k];
    const double beta = chain.Discount(i, r);
    for (const Transition& t : chain.row(i)) {
      const long s = dense_->slot[t.to];
      if (s >= 0) A(k, s) -= beta * t.p;
    }
  }
  dense_->lu.compute(A);
  if (m > 0 && !dense_->lu.isInvertible()) {
    throw SingularSystem(fmt::format(
        "off-set system of size {} is singular (rank {})", m,
        static_cast<long>(dense_->lu.rank())));
  }
}

EntryValueSolver::~EntryValueSolver() = default;
EntryValueSolver::EntryValueSolver(EntryValueSolver&&) noexcept = default;

GridFunction EntryValueSolver::SolveOnce(
    std::span<const double> rhs_on_S, std::span<const double> rhs_free) const {
  const std::size_t n = chain_->size();
  GridFunction v(n);
  if (tri_) {
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = S_.contains(i) ? rhs_on_S[i] : rhs_free[i];
    }
    tri_->Solve(v);
    return v;
  }
  const auto m = static_cast<Eigen::Index>(dense_->free.size());
  Eigen::VectorXd rhs(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const std::size_t i = dense_->free[k];
    const double beta = chain_->Discount(i, r_);
    double acc = rhs_free[i];
    for (const Transition& t : chain_->row(i)) {
      if (S_.contains(t.to)) acc += beta * t.p * rhs_on_S[t.to];
    }
    rhs(k) = acc;
  }
  Eigen::VectorXd sol = m > 0 ? Eigen::VectorXd(dense_->lu.solve(rhs)) : rhs;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = S_.contains(i) ? rhs_on_S[i] : sol(dense_->slot[i]);
  }
  return v;
}

double EntryValueSolver::Residual(std::span<const double> v,
                                  std::span<const double> g) const {
  double res = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = S_.contains(i) ? v[i] - g[i]
                                    : v[i] - OneStepValue(*chain_, i, v, r_);
    res = std::max(res, std::abs(e));
  }
  return res;
}

GridFunction EntryValueSolver::Solve(std::span<const double> g) const {
  const std::size_t n = chain_->size();
  const std::vector<double> zeros(n, 0.0);
  GridFunction v = SolveOnce(g, zeros);
  const double scale = std::max(1.0, SupNorm(v));
  if (Residual(v, g) <= 1e-12 * scale) return v;
  // One step of iterative refinement.
  std::vector<double> rs(n), rf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (S_.contains(i)) {
      rs[i] = g[i] - v[i];
    } else {
      rf[i] = OneStepValue(*chain_, i, v, r_) - v[i];
    }
  }
  const GridFunction dv = SolveOnce(rs, rf);
  for (std::size_t i = 0; i < n; ++i) v[i] += dv[i];
  return v;
}

}  // namespace equistop
