#pragma once

#include <memory>
#include <span>
#include <vector>

#include "equistop/core_model.hpp"

namespace equistop {

// Thomas factorisation of a tridiagonal matrix with rows
// a[i] x[i-1] + b[i] x[i] + c[i] x[i+1]. Throws SingularSystem on a
// vanishing pivot.
class TridiagonalLU {
 public:
  TridiagonalLU(std::span<const double> a, std::span<const double> b,
                std::span<const double> c);
  void Solve(std::span<double> rhs) const;
  std::size_t size() const { return inv_.size(); }

 private:
  std::vector<double> a_;
  std::vector<double> cp_;
  std::vector<double> inv_;
};

// e^{-r dt(i)} sum_z P[i][z] v[z]
double OneStepValue(const ChainModel& chain, std::size_t i,
                    std::span<const double> v, double r);

// Value of stopping at the first entry into S:
//   V = g on S,  V = e^{-r dt} P V off S.
// The factorisation is done once and reused for every right-hand side.
class EntryValueSolver {
 public:
  EntryValueSolver(const ChainModel& chain, const StoppingSet& S, double r);
  ~EntryValueSolver();
  EntryValueSolver(EntryValueSolver&&) noexcept;

  // `g` is read on S only. Residual of the returned solution is at most
  // 1e-12 relative to max(1, |V|).
  GridFunction Solve(std::span<const double> g) const;
  double Residual(std::span<const double> v, std::span<const double> g) const;

 private:
  struct Dense;
  const ChainModel* chain_;
  StoppingSet S_;
  double r_;
  std::unique_ptr<TridiagonalLU> tri_;
  std::unique_ptr<Dense> dense_;

  GridFunction SolveOnce(std::span<const double> rhs_on_S,
                         std::span<const double> rhs_free) const;
};

}  // namespace equistop
