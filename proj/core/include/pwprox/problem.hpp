#pragma once

#include <memory>
#include <vector>

#include "pwprox/common.hpp"
#include "pwprox/piecewise.hpp"
#include "pwprox/smooth.hpp"

namespace pwprox {

/// Piece index per coordinate, P(x).
using Assignment = std::vector<std::size_t>;

/// F(x) = g(x) + sum_i f_i(x_i), one piecewise convex function per coordinate.
/// Immutable once built; safe to share between concurrent solver runs.
class Problem {
 public:
  /// Same regulariser on every coordinate.
  Problem(SmoothLoss loss, std::shared_ptr<const PiecewiseFn> penalty);
  Problem(SmoothLoss loss, std::vector<std::shared_ptr<const PiecewiseFn>> penalties);

  Eigen::Index dim() const { return loss_.dim(); }
  const SmoothLoss& loss() const { return loss_; }
  const PiecewiseFn& penalty(Eigen::Index i) const { return *fns_[static_cast<std::size_t>(i)]; }
  /// Raw per-coordinate pointers, convenient for the span-based solver helpers.
  const std::vector<const PiecewiseFn*>& penalties() const { return raw_; }

  double regularizer(const Vector& x) const;
  double objective(const Vector& x) const;

  Assignment assignment(const Vector& x) const;
  /// sum_i f_{P_i}(v_i) for the surrogates selected by `p`.
  double surrogate_regularizer(const Assignment& p, const Vector& v) const;
  /// F_P(v) = g(v) + sum_i f_{P_i}(v_i)
  double surrogate_objective(const Assignment& p, const Vector& v) const;

  /// Smallest R0 and largest F0 over coordinates.
  double R0() const { return R0_; }
  double F0() const { return F0_; }
  /// True when every coordinate's regulariser is a single convex piece.
  bool convex_regularizer() const;

 private:
  void init();
  void check(const Vector& x) const;

  SmoothLoss loss_;
  std::vector<std::shared_ptr<const PiecewiseFn>> fns_;
  std::vector<const PiecewiseFn*> raw_;
  double R0_ = kInf;
  double F0_ = 0.0;
};

}  // namespace pwprox
