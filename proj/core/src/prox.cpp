#include "pwprox/prox.hpp"

#include <cmath>
#include <string>

#include "pwprox/scalar.hpp"

namespace pwprox {

namespace {

double snap_or_stay(double at, double jump, double s, double x) {
  const ScalarCandidate snap{at, (at - x) * (at - x) / (2.0 * s)};
  const ScalarCandidate stay{x, jump};
  return preferred(snap, stay) ? snap.v : stay.v;
}

}  // namespace

double prox_surrogate(const SurrogateFn& fm, double s, double x) {
  if (!(s > 0.0)) throw ModelError("prox step size must be positive");
  const ProxKernel& k = fm.kernel();
  switch (k.kind) {
    case ProxKind::identity: return x;
    case ProxKind::linear_shift: return x - k.slope * s;
    case ProxKind::soft_threshold: return k.center + soft_threshold(x - k.center, k.scale * s);
    case ProxKind::indicator_snap:
      if (k.outer_left ? x >= k.at : x <= k.at) return x;
      return snap_or_stay(k.at, k.jump, s, x);
    case ProxKind::hard_threshold: return snap_or_stay(k.at, k.jump, s, x);
    case ProxKind::numeric: return prox_surrogate_regions(fm, s, x);
  }
  return x;
}

double prox_surrogate_regions(const SurrogateFn& fm, double s, double x) {
  if (!(s > 0.0)) throw ModelError("prox step size must be positive");
  const Piece& p = fm.inside();
  const auto objective = [&](double v) { return prox_objective(fm, s, x, v); };

  double v = p.eval.prox(s, x, p.left, p.right);
  ScalarCandidate best{v, objective(v)};

  const auto consider = [&](double cand) {
    ScalarCandidate c{cand, objective(cand)};
    if (preferred(c, best)) best = c;
  };
  const auto& l = fm.left_side();
  if (l.branch != SideBranch::unbounded) {
    const double slope = l.branch == SideBranch::constant_limit ? 0.0 : l.slope;
    consider(std::min(x - slope * s, p.left));
  }
  const auto& r = fm.right_side();
  if (r.branch != SideBranch::unbounded) {
    const double slope = r.branch == SideBranch::constant_limit ? 0.0 : r.slope;
    consider(std::max(x - slope * s, p.right));
  }
  if (!std::isfinite(best.objective)) throw NumericError("surrogate prox produced a non-finite objective");
  return best.v;
}

double prox_piecewise(const PiecewiseFn& f, double s, double x) {
  if (!(s > 0.0)) throw ModelError("prox step size must be positive");
  ScalarCandidate best;
  bool first = true;
  for (const Piece& p : f.pieces()) {
    const double v = p.eval.prox(s, x, p.left, p.right);
    ScalarCandidate c{v, prox_objective(f, s, x, v)};
    if (first || preferred(c, best)) {
      best = c;
      first = false;
    }
  }
  if (!std::isfinite(best.objective)) throw NumericError("prox of h produced a non-finite objective");
  return best.v;
}

Vector prox_vector(std::span<const SurrogateFn* const> surrogates, double s, const Vector& u) {
  if (static_cast<Eigen::Index>(surrogates.size()) != u.size()) {
    throw ModelError("prox_vector: " + std::to_string(surrogates.size()) + " surrogates for a vector of size " +
                     std::to_string(u.size()));
  }
  Vector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    try {
      out[i] = prox_surrogate(*surrogates[static_cast<std::size_t>(i)], s, u[i]);
    } catch (const NumericError& e) {
      throw NumericError("coordinate " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pwprox
