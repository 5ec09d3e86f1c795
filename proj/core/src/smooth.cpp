#include "pwprox/smooth.hpp"

#include <cmath>
#include <random>

#include "pwprox/data.hpp"

namespace pwprox {

const char* to_string(LossKind k) { return k == LossKind::least_squares ? "least_squares" : "logistic"; }

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "least_squares" || name == "ls") return LossKind::least_squares;
  if (name == "logistic") return LossKind::logistic;
  throw ModelError("unknown loss '" + name + "'");
}

void Dataset::validate(bool classification) const {
  if (n() < 1 || d() < 1) throw ModelError("dataset must have at least one sample and one feature");
  if (labels.size() != n()) throw ModelError("label count does not match the number of samples");
  if (!features.allFinite() || !labels.allFinite()) throw ModelError("dataset contains non-finite values");
  if (classification) {
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      if (labels[i] != 1.0 && labels[i] != -1.0) throw ModelError("classification labels must be -1 or +1");
    }
  }
}

double softplus(double z) {
  if (z > 30.0) return z + std::exp(-z);
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double spectral_norm_squared(const Matrix& a, int max_iter, double tol) {
  if (a.size() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  Vector v(a.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 0.5 + uniform01(rng);
  v.normalize();

  double rho = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = a.transpose() * (a * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const bool done = std::abs(next - rho) <= tol * std::max(1.0, std::abs(next));
    rho = next;
    if (done) break;
  }
  return (a * v).squaredNorm();
}

SmoothLoss::SmoothLoss(LossKind kind, Dataset data) : kind_(kind), data_(std::move(data)) {
  data_.validate(kind_ == LossKind::logistic);
  const double sigma2 = spectral_norm_squared(data_.features);
  lipschitz_ = kind_ == LossKind::least_squares ? 2.0 * sigma2 : sigma2 / (4.0 * static_cast<double>(data_.n()));
}

void SmoothLoss::check_dim(const Vector& x) const {
  if (x.size() != data_.d()) {
    throw ModelError("dimension mismatch: loss expects " + std::to_string(data_.d()) + ", got " +
                     std::to_string(x.size()));
  }
}

double SmoothLoss::value(const Vector& x) const {
  check_dim(x);
  const Vector margin = data_.features * x;
  if (kind_ == LossKind::least_squares) return (data_.labels - margin).squaredNorm();
  double total = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) total += softplus(-data_.labels[i] * margin[i]);
  return total / static_cast<double>(data_.n());
}

Vector SmoothLoss::gradient(const Vector& x) const {
  check_dim(x);
  const Vector margin = data_.features * x;
  if (kind_ == LossKind::least_squares) return 2.0 * (data_.features.transpose() * (margin - data_.labels));
  Vector weights(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double y = data_.labels[i];
    weights[i] = -y * sigmoid(-y * margin[i]);
  }
  return (data_.features.transpose() * weights) / static_cast<double>(data_.n());
}

}  // namespace pwprox
