#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "pwprox/data.hpp"
#include "pwprox/piecewise.hpp"
#include "pwprox/problem.hpp"
#include "pwprox/smooth.hpp"

namespace pwprox::testing {

/// Random valid piecewise function: affine pieces whose slopes drop at every
/// continuous endpoint, with upward jumps at the discontinuous ones and an
/// occasional absolute-value piece.
inline PiecewiseFn random_piecewise(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pieces(2, 5);
  std::uniform_real_distribution<double> gap(0.3, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int M = pieces(rng);

  std::vector<double> q(M - 1);
  double at = -3.0 + unit(rng);
  for (auto& v : q) {
    v = at;
    at += gap(rng);
  }

  std::vector<Continuity> flags(M - 1);
  for (auto& f : flags) {
    const double u = unit(rng);
    f = u < 0.5 ? Continuity::continuous : (u < 0.75 ? Continuity::left_only : Continuity::right_only);
  }

  std::vector<PieceSpec> specs;
  double slope = 1.0 + 2.0 * unit(rng);
  double value_at_left = 0.0;  // limit of f at the left endpoint of the current piece
  double prev_right_slope = kInf;
  for (int m = 0; m < M; ++m) {
    const double left = m == 0 ? -kInf : q[m - 1];
    const double right = m + 1 == M ? kInf : q[m];
    PieceEvaluator ev = PieceEvaluator::constant(0.0);
    const double scale = 0.2 + unit(rng);
    const bool kink_ok = flags[m - (m > 0 ? 1 : 0)] != Continuity::continuous || prev_right_slope > 0.1 - scale;
    const bool use_abs = std::isfinite(left) && std::isfinite(right) && kink_ok && unit(rng) < 0.3;
    if (use_abs) {
      const double c = left + (0.2 + 0.6 * unit(rng)) * (right - left);
      ev = PieceEvaluator::abs(scale, c, value_at_left - scale * (c - left));
      slope = scale;
    } else if (m == 0) {
      ev = PieceEvaluator::affine(-slope * q[0], slope);
    } else {
      ev = PieceEvaluator::affine(value_at_left - slope * left, slope);
    }
    specs.push_back({left, right, ev});
    if (m + 1 < M) {
      const double end_value = ev(right);
      const double jump = 0.2 + unit(rng);
      switch (flags[m]) {
        case Continuity::continuous: value_at_left = end_value; break;
        case Continuity::left_only: value_at_left = end_value + jump; break;
        case Continuity::right_only: value_at_left = end_value - jump; break;
        case Continuity::isolated: break;
      }
      // Next slope must be smaller than this piece's right slope at continuous endpoints.
      const double right_slope = ev.left_derivative(right);
      prev_right_slope = right_slope;
      slope = flags[m] == Continuity::continuous ? right_slope - (0.1 + unit(rng)) : 4.0 * unit(rng) - 2.0;
    }
  }
  return PiecewiseFn::build(specs, flags);
}

/// Every built-in penalty family with a fixed parameter set.
inline std::vector<PiecewiseFn> builtin_penalties() {
  return {capped_l1(0.2, 1.0), leaky_capped_l1(1.0, 1.0, 0.5), indicator_penalty(2.0, 1.0), l0_penalty(1.0),
          l1_penalty(0.7),     zero_penalty(),                  capped_l1(1.5, 0.3)};
}

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * standard_normal(rng);
  }
  return m;
}

/// g(x) = 1/2 (x - c)^2 in one dimension, written as ||y - D x||^2.
inline SmoothLoss shifted_quadratic_1d(double c) {
  Dataset d;
  d.features = Matrix::Constant(1, 1, 1.0 / std::sqrt(2.0));
  d.labels = Vector::Constant(1, c / std::sqrt(2.0));
  return SmoothLoss(LossKind::least_squares, d);
}

inline std::shared_ptr<const PiecewiseFn> share(PiecewiseFn fn) {
  return std::make_shared<const PiecewiseFn>(std::move(fn));
}

/// Grid search for the global minimiser of a scalar function.
template <class F>
double grid_argmin(const F& f, double lo, double hi, double step) {
  double best_x = lo;
  double best = f(lo);
  const long n = static_cast<long>(std::floor((hi - lo) / step));
  for (long i = 1; i <= n; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace pwprox::testing
