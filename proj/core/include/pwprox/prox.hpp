#pragma once

#include <span>
#include <vector>

#include "pwprox/common.hpp"
#include "pwprox/piecewise.hpp"

namespace pwprox {

/// argmin_v (v - x)^2 / (2s) + f_m(v) through the surrogate's closed-form
/// kernel; surrogates without one use prox_surrogate_regions. Ties between
/// global minimisers resolve to the smaller |v|, then the smaller v.
double prox_surrogate(const SurrogateFn& fm, double s, double x);

/// Kernel-free route: minimises separately over the left extension, the
/// piece itself and the right extension, and keeps the best candidate.
double prox_surrogate_regions(const SurrogateFn& fm, double s, double x);

/// Exact proximal map of the true piecewise function (used by the PGD and
/// APG baselines): the best of the per-piece constrained minimisers.
double prox_piecewise(const PiecewiseFn& f, double s, double x);

/// Objective (v - x)^2 / (2s) + f(v) for any scalar callable.
template <class F>
double prox_objective(const F& f, double s, double x, double v) {
  return (v - x) * (v - x) / (2.0 * s) + f(v);
}

/// Coordinatewise prox_surrogate; surrogates[i] applies to u[i].
/// Per-coordinate failures are rethrown with the coordinate index attached.
Vector prox_vector(std::span<const SurrogateFn* const> surrogates, double s, const Vector& u);

}  // namespace pwprox
