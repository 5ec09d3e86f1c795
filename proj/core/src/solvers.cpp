#include "pwprox/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "pwprox/data.hpp"
#include "pwprox/prox.hpp"
#include "pwprox/scalar.hpp"

namespace pwprox {

const char* to_string(NceOutcome o) {
  switch (o) {
    case NceOutcome::none: return "none";
    case NceOutcome::guard: return "guard";
    case NceOutcome::same_pieces: return "same";
    case NceOutcome::accepted: return "accept";
    case NceOutcome::rejected: return "reject";
  }
  return "?";
}

double tk_next(double t) { return (std::sqrt(1.0 + 4.0 * t * t) + 1.0) / 2.0; }

namespace {

void require_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ModelError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
}

void require_fns(std::span<const PiecewiseFn* const> fns, const Vector& x, const char* what) {
  if (static_cast<Eigen::Index>(fns.size()) != x.size()) {
    throw ModelError(std::string(what) + ": expected one piecewise function per coordinate");
  }
}

std::vector<const PiecewiseFn*> replicate(const PiecewiseFn& fn, Eigen::Index d) {
  return std::vector<const PiecewiseFn*>(static_cast<std::size_t>(d), &fn);
}

}  // namespace

Vector extrapolate(const Vector& x, const Vector& x_prev, const Vector& z, double t_prev, double t) {
  require_same_size(x, x_prev, "extrapolate");
  require_same_size(x, z, "extrapolate");
  if (!(t > 0.0)) throw ModelError("extrapolate: t must be positive");
  return x + (t_prev / t) * (z - x) + ((t_prev - 1.0) / t) * (x - x_prev);
}

Vector project_piecewise(const Vector& x, const Vector& u, double R0, std::span<const PiecewiseFn* const> fns) {
  require_same_size(x, u, "project_piecewise");
  require_fns(fns, x, "project_piecewise");
  if (!(R0 > 0.0)) throw ModelError("project_piecewise: R0 must be positive");
  Vector w(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const PiecewiseFn& f = *fns[static_cast<std::size_t>(i)];
    const Piece& p = f.piece(f.piece_index(x[i]));
    const double lo = std::max(p.left, x[i] - R0);
    const double hi = std::min(p.right, x[i] + R0);
    w[i] = clamp_to(u[i], lo, hi);
  }
  return w;
}

Vector project_piecewise(const Vector& x, const Vector& u, double R0, const PiecewiseFn& fn) {
  const auto fns = replicate(fn, x.size());
  return project_piecewise(x, u, R0, fns);
}

NceResult nce(const Vector& x, const Vector& z, const Vector& w, double w0, std::span<const PiecewiseFn* const> fns) {
  require_same_size(x, z, "nce");
  require_same_size(x, w, "nce");
  require_fns(fns, x, "nce");
  if (!(w0 > 0.0 && w0 <= 1.0)) throw ModelError("nce: w0 must lie in (0, 1]");

  std::vector<std::size_t> changed;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const PiecewiseFn& f = *fns[static_cast<std::size_t>(i)];
    if (f.piece_index(z[i]) != f.piece_index(x[i])) changed.push_back(static_cast<std::size_t>(i));
  }
  if (changed.empty()) return {z, NceOutcome::same_pieces};

  bool flag = false;
  Vector zp = z;
  for (std::size_t i : changed) {
    const auto ii = static_cast<Eigen::Index>(i);
    const PiecewiseFn& f = *fns[i];
    const Piece& p = f.piece(f.piece_index(x[ii]));
    const double lo = std::min(w[ii], z[ii]);
    const double hi = std::max(w[ii], z[ii]);

    double q = kNaN;
    for (double e : {p.left, p.right}) {
      if (!std::isfinite(e) || e < lo || e > hi) continue;
      if (std::isnan(q) || std::abs(e - w[ii]) < std::abs(q - w[ii])) q = e;
    }
    if (std::isnan(q)) {
      throw NumericError("nce: coordinate " + std::to_string(i) +
                         " changed piece but no endpoint of its piece lies between w and z");
    }

    const double d0 = std::abs(z[ii] - w[ii]);
    const double d1 = std::abs(z[ii] - q);
    if (f.continuous_at(q)) {
      if (d1 >= w0 * d0) flag = true;
    } else {
      flag = true;
      const Piece& dest = f.piece(f.piece_index(z[ii]));
      if (dest.single_point() && dest.left == q) zp[ii] = q;
    }
  }
  if (!flag) return {x, NceOutcome::rejected};
  return {zp, NceOutcome::accepted};
}

NceResult nce(const Vector& x, const Vector& z, const Vector& w, double w0, const PiecewiseFn& fn) {
  const auto fns = replicate(fn, x.size());
  return nce(x, z, w, w0, fns);
}

namespace {

std::vector<const SurrogateFn*> surrogates_for(const Problem& problem, const Assignment& p) {
  std::vector<const SurrogateFn*> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = &problem.penalty(static_cast<Eigen::Index>(i)).surrogate(p[i]);
  return out;
}

Vector prox_true_h(const Problem& problem, double s, const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    try {
      out[i] = prox_piecewise(problem.penalty(i), s, v[i]);
    } catch (const NumericError& e) {
      throw NumericError("coordinate " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

double stationarity_residual(const Problem& problem, const Vector& x, double s) {
  if (!(s > 0.0)) throw ModelError("stationarity_residual: s must be positive");
  const Assignment p = problem.assignment(x);
  const auto fms = surrogates_for(problem, p);
  const Vector step = prox_vector(fms, s, x - s * problem.loss().gradient(x));
  return (x - step).norm() / s;
}

double estimate_G(const Problem& problem, const std::vector<Vector>& points, double inflate, std::uint64_t seed,
                  int samples) {
  if (points.empty()) throw ModelError("estimate_G needs at least one point");
  const Eigen::Index d = problem.dim();
  Vector lo = points.front();
  Vector hi = points.front();
  double best = 0.0;
  for (const Vector& pt : points) {
    if (pt.size() != d) throw ModelError("estimate_G: dimension mismatch");
    if (!pt.allFinite()) throw ModelError("estimate_G: non-finite point");
    lo = lo.cwiseMin(pt);
    hi = hi.cwiseMax(pt);
    best = std::max(best, problem.loss().gradient(pt).norm());
  }
  lo.array() -= inflate;
  hi.array() += inflate;

  std::mt19937_64 rng(seed);
  Vector sample(d);
  for (int n = 0; n < samples; ++n) {
    for (Eigen::Index i = 0; i < d; ++i) sample[i] = lo[i] + uniform01(rng) * (hi[i] - lo[i]);
    best = std::max(best, problem.loss().gradient(sample).norm());
  }
  return 1.5 * best;
}

double estimate_G(const Problem& problem, const Vector& x0) {
  const double inflate = std::isfinite(problem.R0()) ? problem.R0() : 1.0;
  return estimate_G(problem, {x0}, inflate);
}

std::size_t Trace::last_transition() const {
  for (std::size_t k = rows.size(); k-- > 0;) {
    if (rows[k].transition) return k;
  }
  return 0;
}

namespace {

using Clock = std::chrono::steady_clock;

double resolve_step(const Problem& problem, double s) {
  if (s > 0.0) return s;
  const double L = problem.loss().lipschitz();
  if (!(L > 0.0)) throw ModelError("cannot pick a default step size: the loss has a zero Lipschitz bound");
  return 1.0 / (2.0 * L);
}

void check_inputs(const Problem& problem, const Vector& x0, const SolverOptions& opts) {
  if (x0.size() != problem.dim()) throw ModelError("x0 has the wrong dimension");
  if (!x0.allFinite()) throw ModelError("x0 must be finite");
  if (!(opts.w0 > 0.0 && opts.w0 <= 1.0)) throw ModelError("w0 must lie in (0, 1]");
  if (std::isnan(opts.s) || std::isinf(opts.s)) throw ModelError("step size must be finite");
}

double finite_or_throw(double v, std::size_t k, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what + " at iteration " + std::to_string(k) +
                       " (step size too large?)");
  }
  return v;
}

/// Shared bookkeeping for the three solvers.
class Recorder {
 public:
  Recorder(Trace& trace, const Problem& problem, const SolverOptions& opts, double s)
      : trace_(trace), problem_(problem), opts_(opts), s_(s), start_(Clock::now()) {}

  void record(const Vector& x, double F, TraceRow row) {
    Assignment p = problem_.assignment(x);
    row.k = trace_.rows.size();
    if (!trace_.assignments.empty()) {
      row.transition = p != trace_.assignments.back();
      row.transitions = trace_.rows.back().transitions + (row.transition ? 1 : 0);
    }
    row.F = F;
    row.wall_ms = opts_.timing ? std::chrono::duration<double, std::milli>(Clock::now() - start_).count() : 0.0;
    trace_.rows.push_back(row);
    trace_.assignments.push_back(std::move(p));
    if (opts_.record_iterates) trace_.iterates.push_back(x);
  }

  bool should_stop(const Vector& x) const {
    if (!opts_.early_stop || trace_.rows.size() <= 10) return false;
    for (std::size_t j = trace_.rows.size() - 10; j < trace_.rows.size(); ++j) {
      if (trace_.rows[j].transition) return false;
    }
    return stationarity_residual(problem_, x, s_) < opts_.stop_tol;
  }

  void finish(const Vector& x, bool stopped) {
    trace_.x_final = x;
    trace_.stopped_early = stopped;
    trace_.final_residual = stationarity_residual(problem_, x, s_);
  }

 private:
  Trace& trace_;
  const Problem& problem_;
  const SolverOptions& opts_;
  double s_;
  Clock::time_point start_;
};

Trace start_trace(const char* name, double s, double w0, const SolverOptions& opts) {
  Trace t;
  t.solver = name;
  t.s = s;
  t.w0 = w0;
  t.rows.reserve(opts.K + 1);
  t.assignments.reserve(opts.K + 1);
  return t;
}

}  // namespace

Trace ppgd(const Problem& problem, const Vector& x0, const SolverOptions& opts) {
  check_inputs(problem, x0, opts);
  const double s = resolve_step(problem, opts.s);
  const double R0 = problem.R0();
  const auto& fns = problem.penalties();
  Trace trace = start_trace("ppgd", s, opts.w0, opts);
  Recorder rec(trace, problem, opts, s);

  Vector x = x0;
  Vector x_prev = x0;
  Vector z = x0;
  double t_prev = 0.0;
  double t = 1.0;
  double Fx = finite_or_throw(problem.objective(x), 0, "objective");
  Assignment P = problem.assignment(x);
  rec.record(x, Fx, {});

  bool stopped = false;
  for (std::size_t k = 1; k <= opts.K; ++k) {
    const Vector u = extrapolate(x, x_prev, z, t_prev, t);
    const Vector w = project_piecewise(x, u, R0, fns);
    const Vector grad = problem.loss().gradient(w);
    const auto fms = surrogates_for(problem, P);
    Vector z_next = prox_vector(fms, s, w - s * grad);
    t_prev = t;
    t = tk_next(t);

    TraceRow row;
    row.F_surrogate_z = finite_or_throw(problem.surrogate_objective(P, z_next), k, "surrogate objective");
    row.step_length = (z_next - w).norm();
    row.grad_norm = grad.norm();

    Vector x_next = x;
    if (row.F_surrogate_z <= Fx) {
      NceResult r = nce(x, z_next, w, opts.w0, fns);
      row.nce = r.outcome;
      x_next = std::move(r.x);
    } else {
      row.nce = NceOutcome::guard;
    }

    x_prev = std::move(x);
    x = std::move(x_next);
    z = std::move(z_next);
    if (row.nce == NceOutcome::same_pieces || row.nce == NceOutcome::accepted) {
      Fx = finite_or_throw(problem.objective(x), k, "objective");
      P = problem.assignment(x);
    }
    rec.record(x, Fx, row);
    if (rec.should_stop(x)) {
      stopped = true;
      break;
    }
  }
  rec.finish(x, stopped);
  return trace;
}

Trace pgd(const Problem& problem, const Vector& x0, const SolverOptions& opts) {
  check_inputs(problem, x0, opts);
  const double s = resolve_step(problem, opts.s);
  Trace trace = start_trace("pgd", s, 0.0, opts);
  Recorder rec(trace, problem, opts, s);

  Vector x = x0;
  rec.record(x, finite_or_throw(problem.objective(x), 0, "objective"), {});
  bool stopped = false;
  for (std::size_t k = 1; k <= opts.K; ++k) {
    const Vector grad = problem.loss().gradient(x);
    Vector x_next = prox_true_h(problem, s, x - s * grad);
    TraceRow row;
    row.step_length = (x_next - x).norm();
    row.grad_norm = grad.norm();
    const double F = finite_or_throw(problem.objective(x_next), k, "objective");
    row.F_surrogate_z = F;
    x = std::move(x_next);
    rec.record(x, F, row);
    if (rec.should_stop(x)) {
      stopped = true;
      break;
    }
  }
  rec.finish(x, stopped);
  return trace;
}

Trace apg_monotone(const Problem& problem, const Vector& x0, const SolverOptions& opts) {
  check_inputs(problem, x0, opts);
  const double s = resolve_step(problem, opts.s);
  Trace trace = start_trace("apg", s, 0.0, opts);
  Recorder rec(trace, problem, opts, s);

  Vector x = x0;
  Vector x_prev = x0;
  Vector z = x0;
  double t_prev = 0.0;
  double t = 1.0;
  double Fx = finite_or_throw(problem.objective(x), 0, "objective");
  rec.record(x, Fx, {});

  bool stopped = false;
  for (std::size_t k = 1; k <= opts.K; ++k) {
    const Vector u = extrapolate(x, x_prev, z, t_prev, t);
    const Vector grad = problem.loss().gradient(u);
    Vector z_next = prox_true_h(problem, s, u - s * grad);
    t_prev = t;
    t = tk_next(t);

    TraceRow row;
    row.F_surrogate_z = finite_or_throw(problem.objective(z_next), k, "objective");
    row.step_length = (z_next - u).norm();
    row.grad_norm = grad.norm();

    x_prev = x;
    if (row.F_surrogate_z <= Fx) {
      x = z_next;
      Fx = row.F_surrogate_z;
      row.nce = NceOutcome::same_pieces;
    } else {
      row.nce = NceOutcome::guard;
    }
    z = std::move(z_next);
    rec.record(x, Fx, row);
    if (rec.should_stop(x)) {
      stopped = true;
      break;
    }
  }
  rec.finish(x, stopped);
  return trace;
}

Trace run_solver(const std::string& name, const Problem& problem, const Vector& x0, const SolverOptions& opts) {
  if (name == "ppgd") return ppgd(problem, x0, opts);
  if (name == "pgd") return pgd(problem, x0, opts);
  if (name == "apg" || name == "apg_monotone") return apg_monotone(problem, x0, opts);
  throw ModelError("unknown solver '" + name + "'");
}

}  // namespace pwprox
