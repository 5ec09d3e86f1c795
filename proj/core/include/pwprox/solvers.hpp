#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pwprox/common.hpp"
#include "pwprox/piecewise.hpp"
#include "pwprox/problem.hpp"

namespace pwprox {

/// What the acceptance step did on one iteration.
enum class NceOutcome {
  none,         ///< initial row, or a solver without NCE
  guard,        ///< surrogate objective did not decrease; x kept
  same_pieces,  ///< z stayed on the pieces of x; x = z
  accepted,     ///< pieces changed and the flag was raised; x = z'
  rejected,     ///< pieces changed without a flag; x kept
};

const char* to_string(NceOutcome o);

struct NceResult {
  Vector x;
  NceOutcome outcome = NceOutcome::none;
};

/// t_{k+1} = (sqrt(1 + 4 t^2) + 1) / 2
double tk_next(double t);

/// u = x + (t_prev / t)(z - x) + ((t_prev - 1) / t)(x - x_prev)
Vector extrapolate(const Vector& x, const Vector& x_prev, const Vector& z, double t_prev, double t);

/// Coordinatewise clamp of u_i to closure(R_{P(x_i)}) intersected with [x_i - R0, x_i + R0].
Vector project_piecewise(const Vector& x, const Vector& u, double R0, std::span<const PiecewiseFn* const> fns);
Vector project_piecewise(const Vector& x, const Vector& u, double R0, const PiecewiseFn& fn);

/// Negative-curvature exploitation: decide whether z may move x onto new
/// pieces. Throws NumericError when a coordinate changes piece but no endpoint
/// of its current piece lies between w_i and z_i.
NceResult nce(const Vector& x, const Vector& z, const Vector& w, double w0, std::span<const PiecewiseFn* const> fns);
NceResult nce(const Vector& x, const Vector& z, const Vector& w, double w0, const PiecewiseFn& fn);

/// ||x - prox-step(x)|| / s, where the prox step uses the surrogates of P(x).
double stationarity_residual(const Problem& problem, const Vector& x, double s);

/// 1.5 times the largest ||grad g|| over the given points and `samples`
/// uniform draws from their bounding box inflated by `inflate` per side.
double estimate_G(const Problem& problem, const std::vector<Vector>& points, double inflate, std::uint64_t seed = 0,
                  int samples = 1000);
/// Box around x0 inflated by the problem's R0 (or by 1 when R0 is infinite).
double estimate_G(const Problem& problem, const Vector& x0);

struct SolverOptions {
  double s = 0.0;  ///< step size; <= 0 selects 1 / (2 L_g)
  double w0 = 0.5;
  std::size_t K = 100;
  bool record_iterates = false;
  bool timing = true;
  /// Stop once the stationarity residual drops below stop_tol with no
  /// piece transition during the last 10 iterations.
  bool early_stop = false;
  double stop_tol = 1e-8;
};

/// Row k describes x^(k) and the step that produced it from x^(k-1).
struct TraceRow {
  std::size_t k = 0;
  double F = 0.0;
  double F_surrogate_z = kNaN;  ///< F_{P(x^(k-1))}(z^(k)); true F(z) for PGD/APG
  std::size_t transitions = 0;  ///< piece changes of x up to and including k
  bool transition = false;      ///< P(x^(k)) != P(x^(k-1))
  NceOutcome nce = NceOutcome::none;
  double wall_ms = 0.0;
  double step_length = kNaN;  ///< ||z^(k) - w^(k-1)||
  double grad_norm = kNaN;    ///< ||grad g(w^(k-1))||
};

struct Trace {
  std::string solver;
  double s = 0.0;
  double w0 = 0.0;
  std::vector<TraceRow> rows;
  std::vector<Assignment> assignments;  ///< P(x^(k)) per row
  std::vector<Vector> iterates;         ///< x^(k) per row when recorded
  Vector x_final;
  double final_residual = kNaN;
  bool stopped_early = false;

  /// Index of the last row with a transition, or 0 when there is none.
  std::size_t last_transition() const;
};

Trace ppgd(const Problem& problem, const Vector& x0, const SolverOptions& opts);
/// Proximal gradient on the true h (exact piecewise prox per coordinate).
Trace pgd(const Problem& problem, const Vector& x0, const SolverOptions& opts);
/// Monotone accelerated proximal gradient on the true h.
Trace apg_monotone(const Problem& problem, const Vector& x0, const SolverOptions& opts);

/// Dispatch by name: "ppgd", "pgd" or "apg".
Trace run_solver(const std::string& name, const Problem& problem, const Vector& x0, const SolverOptions& opts);

}  // namespace pwprox
