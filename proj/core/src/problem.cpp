#include "pwprox/problem.hpp"

#include <algorithm>
#include <string>

namespace pwprox {

Problem::Problem(SmoothLoss loss, std::shared_ptr<const PiecewiseFn> penalty) : loss_(std::move(loss)) {
  if (!penalty) throw ModelError("problem needs a regulariser");
  fns_.assign(static_cast<std::size_t>(dim()), penalty);
  init();
}

Problem::Problem(SmoothLoss loss, std::vector<std::shared_ptr<const PiecewiseFn>> penalties)
    : loss_(std::move(loss)), fns_(std::move(penalties)) {
  if (static_cast<Eigen::Index>(fns_.size()) != dim()) {
    throw ModelError("expected " + std::to_string(dim()) + " regularisers, got " + std::to_string(fns_.size()));
  }
  init();
}

void Problem::init() {
  for (const auto& f : fns_) {
    if (!f) throw ModelError("null regulariser");
    raw_.push_back(f.get());
    R0_ = std::min(R0_, f->constants().R0);
    F0_ = std::max(F0_, f->constants().F0);
  }
}

void Problem::check(const Vector& x) const {
  if (x.size() != dim()) {
    throw ModelError("dimension mismatch: problem has " + std::to_string(dim()) + " coordinates, got " +
                     std::to_string(x.size()));
  }
}

bool Problem::convex_regularizer() const {
  return std::all_of(raw_.begin(), raw_.end(), [](const PiecewiseFn* f) { return f->num_pieces() == 1; });
}

double Problem::regularizer(const Vector& x) const {
  check(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) total += raw_[static_cast<std::size_t>(i)]->evaluate(x[i]);
  return total;
}

double Problem::objective(const Vector& x) const { return loss_.value(x) + regularizer(x); }

Assignment Problem::assignment(const Vector& x) const {
  check(x);
  Assignment p(static_cast<std::size_t>(x.size()));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = raw_[i]->piece_index(x[static_cast<Eigen::Index>(i)]);
  return p;
}

double Problem::surrogate_regularizer(const Assignment& p, const Vector& v) const {
  check(v);
  if (p.size() != static_cast<std::size_t>(v.size())) throw ModelError("assignment length does not match dimension");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += raw_[i]->surrogate(p[i])(v[static_cast<Eigen::Index>(i)]);
  return total;
}

double Problem::surrogate_objective(const Assignment& p, const Vector& v) const {
  return loss_.value(v) + surrogate_regularizer(p, v);
}

}  // namespace pwprox
