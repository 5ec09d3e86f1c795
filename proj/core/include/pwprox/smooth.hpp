#pragma once

#include <cstdint>
#include <string>

#include "pwprox/common.hpp"

namespace pwprox {

/// Row-major design: one sample per row of `features`.
struct Dataset {
  Matrix features;
  Vector labels;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index d() const { return features.cols(); }

  /// Throws ModelError on empty data, shape mismatch, non-finite entries or,
  /// when `classification` is set, labels outside {-1, +1}.
  void validate(bool classification) const;
};

enum class LossKind { least_squares, logistic };

const char* to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& name);

/// Largest eigenvalue of A^T A by power iteration (Rayleigh quotient of the
/// final iterate). Deterministic start vector.
double spectral_norm_squared(const Matrix& a, int max_iter = 100, double tol = 1e-8);

/// Smooth convex loss g with gradient and a Lipschitz bound on the gradient.
///
///  - least squares: g(x) = ||y - D x||^2,             L = 2 sigma_max(D)^2
///  - logistic:      g(x) = (1/n) sum log(1 + exp(-y_i <a_i, x>)),
///                   L = sigma_max(A)^2 / (4n)
class SmoothLoss {
 public:
  SmoothLoss(LossKind kind, Dataset data);

  LossKind kind() const { return kind_; }
  const Dataset& data() const { return data_; }
  Eigen::Index dim() const { return data_.d(); }
  double lipschitz() const { return lipschitz_; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;

 private:
  void check_dim(const Vector& x) const;

  LossKind kind_;
  Dataset data_;
  double lipschitz_ = 0.0;
};

/// log(1 + exp(z)); linear asymptote beyond |z| > 30.
double softplus(double z);
/// 1 / (1 + exp(-z)) without overflow.
double sigmoid(double z);

}  // namespace pwprox
