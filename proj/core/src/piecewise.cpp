#include "pwprox/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pwprox/scalar.hpp"

namespace pwprox {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kProbeClip = 1e6;
constexpr int kProbePoints = 1000;
constexpr double kConvexityTolerance = 1e-10;

double rel_tol(double a, double b) { return 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(Continuity c) {
  switch (c) {
    case Continuity::continuous: return "continuous";
    case Continuity::left_only: return "left_only";
    case Continuity::right_only: return "right_only";
    case Continuity::isolated: return "isolated";
  }
  return "?";
}

Continuity continuity_from_string(const std::string& name) {
  if (name == "continuous") return Continuity::continuous;
  if (name == "left_only") return Continuity::left_only;
  if (name == "right_only") return Continuity::right_only;
  if (name == "isolated") return Continuity::isolated;
  throw ModelError("unknown continuity tag '" + name + "'");
}

const char* to_string(SideBranch b) {
  switch (b) {
    case SideBranch::unbounded: return "unbounded";
    case SideBranch::continuous_linear: return "continuous_linear";
    case SideBranch::limit_linear: return "limit_linear";
    case SideBranch::constant_limit: return "constant_limit";
  }
  return "?";
}

const char* to_string(ProxKind k) {
  switch (k) {
    case ProxKind::identity: return "identity";
    case ProxKind::soft_threshold: return "soft_threshold";
    case ProxKind::indicator_snap: return "indicator_snap";
    case ProxKind::hard_threshold: return "hard_threshold";
    case ProxKind::linear_shift: return "linear_shift";
    case ProxKind::numeric: return "numeric";
  }
  return "?";
}

// ---------------------------------------------------------------- evaluator

PieceEvaluator PieceEvaluator::constant(double value) { return affine(value, 0.0); }

PieceEvaluator PieceEvaluator::affine(double intercept, double slope) {
  PieceEvaluator e;
  e.form_ = Form::affine;
  e.intercept_ = intercept;
  e.slope_ = slope;
  return e;
}

PieceEvaluator PieceEvaluator::abs(double scale, double center, double offset) {
  if (!(scale >= 0.0)) throw ModelError("abs evaluator needs a nonnegative scale");
  PieceEvaluator e;
  e.form_ = Form::abs;
  e.scale_ = scale;
  e.center_ = center;
  e.offset_ = offset;
  return e;
}

PieceEvaluator PieceEvaluator::custom(std::function<double(double)> fn) {
  if (!fn) throw ModelError("custom evaluator is empty");
  PieceEvaluator e;
  e.form_ = Form::custom;
  e.fn_ = std::move(fn);
  return e;
}

double PieceEvaluator::operator()(double x) const {
  switch (form_) {
    case Form::affine: return intercept_ + slope_ * x;
    case Form::abs: return scale_ * std::abs(x - center_) + offset_;
    case Form::custom: return fn_(x);
  }
  return 0.0;
}

double PieceEvaluator::right_derivative(double x) const {
  switch (form_) {
    case Form::affine: return slope_;
    case Form::abs: return x >= center_ ? scale_ : -scale_;
    case Form::custom: {
      const double h = kFdStep;
      const double fx = fn_(x);
      const double d1 = (fn_(x + h) - fx) / h;
      const double d2 = (fn_(x + h / 2) - fx) / (h / 2);
      return 2.0 * d2 - d1;
    }
  }
  return 0.0;
}

double PieceEvaluator::left_derivative(double x) const {
  switch (form_) {
    case Form::affine: return slope_;
    case Form::abs: return x > center_ ? scale_ : -scale_;
    case Form::custom: {
      const double h = kFdStep;
      const double fx = fn_(x);
      const double d1 = (fx - fn_(x - h)) / h;
      const double d2 = (fx - fn_(x - h / 2)) / (h / 2);
      return 2.0 * d2 - d1;
    }
  }
  return 0.0;
}

double PieceEvaluator::prox(double s, double x, double lo, double hi) const {
  switch (form_) {
    case Form::affine: return clamp_to(x - slope_ * s, lo, hi);
    case Form::abs: return clamp_to(center_ + soft_threshold(x - center_, scale_ * s), lo, hi);
    case Form::custom: {
      const auto phi = [&](double v) { return (v - x) * (v - x) / (2.0 * s) + fn_(v); };
      return minimize_convex_1d(phi, lo, hi, x);
    }
  }
  return x;
}

// -------------------------------------------------------------------- piece

bool Piece::contains(double x) const {
  if (x < left || x > right) return false;
  if (x == left && std::isfinite(left) && !owns_left) return false;
  if (x == right && std::isfinite(right) && !owns_right) return false;
  return true;
}

// ---------------------------------------------------------------- surrogate

SurrogateFn::SurrogateFn(std::size_t piece, Piece inside, Side left, Side right)
    : piece_(piece), inside_(std::move(inside)), left_(left), right_(right) {
  kernel_ = classify(inside_, left_, right_);
}

double SurrogateFn::operator()(double v) const {
  if (v < inside_.left) {
    if (left_.branch == SideBranch::constant_limit) return left_.value;
    return left_.value + left_.slope * (v - left_.at);
  }
  if (v > inside_.right) {
    if (right_.branch == SideBranch::constant_limit) return right_.value;
    return right_.value + right_.slope * (v - right_.at);
  }
  return inside_.eval(v);
}

bool SurrogateFn::convex() const {
  return left_.branch != SideBranch::constant_limit && right_.branch != SideBranch::constant_limit;
}

ProxKernel SurrogateFn::classify(const Piece& p, const Side& l, const Side& r) {
  ProxKernel k;
  const auto linear_or_open = [](const Side& s) {
    return s.branch == SideBranch::unbounded || s.branch == SideBranch::continuous_linear ||
           s.branch == SideBranch::limit_linear;
  };
  const auto flat = [](const Side& s) {
    return s.branch == SideBranch::unbounded ||
           ((s.branch == SideBranch::continuous_linear || s.branch == SideBranch::limit_linear) && s.slope == 0.0);
  };

  if (linear_or_open(l) && linear_or_open(r)) {
    if (p.eval.form() == PieceEvaluator::Form::affine) {
      k.kind = p.eval.slope() == 0.0 ? ProxKind::identity : ProxKind::linear_shift;
      k.slope = p.eval.slope();
      return k;
    }
    if (p.eval.form() == PieceEvaluator::Form::abs) {
      k.kind = ProxKind::soft_threshold;
      k.scale = p.eval.scale();
      k.center = p.eval.center();
      return k;
    }
    return k;
  }

  if (p.single_point()) {
    if (l.branch == SideBranch::constant_limit && r.branch == SideBranch::constant_limit && l.value == r.value) {
      const double fq = p.eval(p.left);
      if (l.value > fq) {
        k.kind = ProxKind::hard_threshold;
        k.at = p.left;
        k.jump = l.value - fq;
      }
    }
    return k;
  }

  if (p.eval.is_constant()) {
    const double c0 = p.eval.intercept();
    if (l.branch == SideBranch::constant_limit && flat(r) && l.value > c0) {
      k.kind = ProxKind::indicator_snap;
      k.at = p.left;
      k.jump = l.value - c0;
      k.outer_left = true;
    } else if (r.branch == SideBranch::constant_limit && flat(l) && r.value > c0) {
      k.kind = ProxKind::indicator_snap;
      k.at = p.right;
      k.jump = r.value - c0;
      k.outer_left = false;
    }
  }
  return k;
}

// -------------------------------------------------------------- piecewise fn

PiecewiseFn PiecewiseFn::build(std::vector<PieceSpec> specs, std::vector<Continuity> flags) {
  const std::size_t M = specs.size();
  if (M == 0) throw ModelError("piecewise function needs at least one piece");
  if (flags.size() != M - 1) {
    throw ModelError("expected " + std::to_string(M - 1) + " endpoint flags, got " + std::to_string(flags.size()));
  }
  if (specs.front().left != -kInf) throw ModelError("first piece must start at -inf (gap in coverage)");
  if (specs.back().right != kInf) throw ModelError("last piece must end at +inf (gap in coverage)");

  for (std::size_t m = 0; m < M; ++m) {
    const auto& s = specs[m];
    if (std::isnan(s.left) || std::isnan(s.right)) throw ModelError("piece bounds must not be NaN");
    if (s.left > s.right) throw ModelError("piece " + std::to_string(m) + " has left > right");
    if (m > 0 && !std::isfinite(s.left)) throw ModelError("interior endpoint must be finite");
    if (m + 1 < M && !std::isfinite(s.right)) throw ModelError("interior endpoint must be finite");
    if (m + 1 < M) {
      const double a = s.right;
      const double b = specs[m + 1].left;
      if (a < b) throw ModelError("gap in coverage between pieces " + std::to_string(m) + " and " + std::to_string(m + 1));
      if (a > b) throw ModelError("overlapping pieces " + std::to_string(m) + " and " + std::to_string(m + 1));
    }
  }

  PiecewiseFn fn;
  fn.flags_ = flags;
  fn.pieces_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    Piece& p = fn.pieces_[m];
    p.left = specs[m].left;
    p.right = specs[m].right;
    p.eval = specs[m].eval;
    // An absolute value whose kink is not interior is affine on the piece.
    if (p.eval.form() == PieceEvaluator::Form::abs && !p.single_point() &&
        !(p.left < p.eval.center() && p.eval.center() < p.right)) {
      const double sign = p.eval.center() <= p.left ? 1.0 : -1.0;
      const double slope = sign * p.eval.scale();
      p.eval = PieceEvaluator::affine(p.eval.offset() - slope * p.eval.center(), slope);
    }
  }

  // Membership.
  for (std::size_t j = 0; j + 1 < M; ++j) {
    Piece& lhs = fn.pieces_[j];
    Piece& rhs = fn.pieces_[j + 1];
    switch (flags[j]) {
      case Continuity::continuous:
      case Continuity::left_only:
        if (lhs.single_point() || rhs.single_point()) {
          throw ModelError("endpoint " + fmt(lhs.right) + " bounds a single-point piece and must be tagged isolated");
        }
        lhs.owns_right = true;
        break;
      case Continuity::right_only:
        if (lhs.single_point() || rhs.single_point()) {
          throw ModelError("endpoint " + fmt(lhs.right) + " bounds a single-point piece and must be tagged isolated");
        }
        rhs.owns_left = true;
        break;
      case Continuity::isolated:
        if (lhs.single_point() == rhs.single_point()) {
          throw ModelError("endpoint " + fmt(lhs.right) +
                           " is neither left nor right continuous and bounds no single-point piece");
        }
        if (lhs.single_point()) {
          lhs.owns_right = true;
        } else {
          rhs.owns_left = true;
        }
        break;
    }
  }
  for (auto& p : fn.pieces_) {
    if (p.single_point()) {
      if (!p.owns_left || !p.owns_right) throw ModelError("single-point piece does not own its point");
    }
  }

  // Slopes, limits, slope bounds, convexity probe.
  for (std::size_t m = 0; m < M; ++m) {
    Piece& p = fn.pieces_[m];
    if (std::isfinite(p.left)) p.limit_left = p.eval(p.left);
    if (std::isfinite(p.right)) p.limit_right = p.eval(p.right);
    if (!std::isfinite(p.limit_left) || !std::isfinite(p.limit_right)) {
      throw ModelError("piece " + std::to_string(m) + " has a non-finite boundary value");
    }
    if (p.single_point()) continue;

    const double lo = std::isfinite(p.left) ? p.left : std::min(-kProbeClip, p.right - 1.0);
    const double hi = std::isfinite(p.right) ? p.right : std::max(kProbeClip, p.left + 1.0);
    p.slope_left = p.eval.right_derivative(lo);
    p.slope_right = p.eval.left_derivative(hi);

    switch (p.eval.form()) {
      case PieceEvaluator::Form::affine: p.slope_bound = std::abs(p.eval.slope()); break;
      case PieceEvaluator::Form::abs: p.slope_bound = p.eval.scale(); break;
      case PieceEvaluator::Form::custom: {
        p.slope_bound = std::max(std::abs(p.slope_left), std::abs(p.slope_right));
        const auto growing = [](double far, double near) {
          return std::abs(far - near) > 1e-6 * (1.0 + std::abs(near));
        };
        if (!std::isfinite(p.left) && growing(p.slope_left, p.eval.right_derivative(lo / 10.0))) p.slope_bound = kInf;
        if (!std::isfinite(p.right) && growing(p.slope_right, p.eval.left_derivative(hi / 10.0))) p.slope_bound = kInf;
        break;
      }
    }

    const double h = (hi - lo) / (kProbePoints - 1);
    double f_prev = p.eval(lo);
    double f_cur = p.eval(lo + h);
    for (int i = 2; i < kProbePoints; ++i) {
      const double x = lo + i * h;
      const double f_next = p.eval(i + 1 == kProbePoints ? hi : x);
      const double second = f_prev - 2.0 * f_cur + f_next;
      if (!std::isfinite(second) || second < -kConvexityTolerance * std::max(1.0, std::abs(f_cur))) {
        throw ModelError("piece " + std::to_string(m) + " failed the convexity probe near x = " + fmt(x - h));
      }
      f_prev = f_cur;
      f_cur = f_next;
    }
  }

  // Endpoint consistency and structural constants.
  StructuralConstants& k = fn.constants_;
  for (std::size_t j = 0; j + 1 < M; ++j) {
    const Piece& lhs = fn.pieces_[j];
    const Piece& rhs = fn.pieces_[j + 1];
    const double q = lhs.right;
    const double from_left = lhs.limit_right;
    const double from_right = rhs.limit_left;
    const double tol = rel_tol(from_left, from_right);
    switch (flags[j]) {
      case Continuity::continuous: {
        if (std::abs(from_left - from_right) > tol) {
          throw ModelError("endpoint " + fmt(q) + " tagged continuous but f jumps there");
        }
        const double gap = lhs.slope_right - rhs.slope_left;
        if (!(gap > 0.0)) {
          throw ModelError("no negative curvature at continuous endpoint " + fmt(q) + " (slope drop " + fmt(gap) + ")");
        }
        k.C = std::min(k.C, gap);
        break;
      }
      case Continuity::left_only:
        if (from_right < from_left - tol) throw ModelError("f is not lower semicontinuous at " + fmt(q));
        if (from_right <= from_left + tol) throw ModelError("endpoint " + fmt(q) + " tagged left_only but f is continuous");
        k.J = std::min(k.J, from_right - from_left);
        break;
      case Continuity::right_only:
        if (from_left < from_right - tol) throw ModelError("f is not lower semicontinuous at " + fmt(q));
        if (from_left <= from_right + tol) throw ModelError("endpoint " + fmt(q) + " tagged right_only but f is continuous");
        k.J = std::min(k.J, from_left - from_right);
        break;
      case Continuity::isolated: {
        const double fq = lhs.single_point() ? from_left : from_right;
        const double outer = lhs.single_point() ? from_right : from_left;
        if (!(outer > fq + tol)) {
          throw ModelError("single-point piece at " + fmt(q) + " must lie strictly below its neighbours");
        }
        k.J = std::min(k.J, outer - fq);
        break;
      }
    }
    fn.endpoints_.push_back(Endpoint{q, flags[j]});
  }

  for (const auto& p : fn.pieces_) {
    k.F0 = std::max(k.F0, p.slope_bound);
    if (!p.single_point()) k.R0 = std::min(k.R0, p.length());
  }
  if (!std::isfinite(k.F0) && M > 1) {
    throw ModelError("slopes grow without bound on an unbounded piece; no finite subgradient bound F0 exists");
  }
  if (M > 1) {
    k.s0 = k.R0 / 2.0;
    for (const auto& p : fn.pieces_) {
      if (p.eval.form() != PieceEvaluator::Form::abs || p.single_point()) continue;
      if (std::isfinite(p.left)) k.s0 = std::min(k.s0, p.eval.center() - p.left);
      if (std::isfinite(p.right)) k.s0 = std::min(k.s0, p.right - p.eval.center());
    }
  }

  // Surrogates.
  for (std::size_t m = 0; m < M; ++m) {
    const Piece& p = fn.pieces_[m];
    SurrogateFn::Side left;
    SurrogateFn::Side right;
    if (m > 0) {
      left.at = p.left;
      const Continuity c = flags[m - 1];
      if (c == Continuity::continuous) {
        left.branch = SideBranch::continuous_linear;
        left.value = p.limit_left;
        left.slope = p.slope_left;
      } else if (!p.owns_left) {
        left.branch = SideBranch::limit_linear;
        left.value = p.limit_left;
        left.slope = p.single_point() ? 0.0 : p.slope_left;
      } else {
        left.branch = SideBranch::constant_limit;
        left.value = fn.pieces_[m - 1].limit_right;
      }
    }
    if (m + 1 < M) {
      right.at = p.right;
      const Continuity c = flags[m];
      if (c == Continuity::continuous) {
        right.branch = SideBranch::continuous_linear;
        right.value = p.limit_right;
        right.slope = p.slope_right;
      } else if (!p.owns_right) {
        right.branch = SideBranch::limit_linear;
        right.value = p.limit_right;
        right.slope = p.single_point() ? 0.0 : p.slope_right;
      } else {
        right.branch = SideBranch::constant_limit;
        right.value = fn.pieces_[m + 1].limit_left;
      }
    }
    fn.surrogates_.emplace_back(m, p, left, right);
  }
  return fn;
}

std::size_t PiecewiseFn::piece_index(double x) const {
  const auto it = std::partition_point(pieces_.begin(), pieces_.end(), [x](const Piece& p) {
    return !(x < p.right || (x == p.right && p.owns_right));
  });
  if (it == pieces_.end()) return pieces_.size() - 1;
  return static_cast<std::size_t>(it - pieces_.begin());
}

double PiecewiseFn::evaluate(double x) const { return pieces_[piece_index(x)].eval(x); }

bool PiecewiseFn::continuous_at(double q) const {
  return std::any_of(endpoints_.begin(), endpoints_.end(), [q](const Endpoint& e) {
    return e.value == q && e.continuity == Continuity::continuous;
  });
}

bool PiecewiseFn::has_continuous_endpoint() const {
  return std::any_of(endpoints_.begin(), endpoints_.end(),
                     [](const Endpoint& e) { return e.continuity == Continuity::continuous; });
}

bool PiecewiseFn::has_discontinuous_endpoint() const {
  return std::any_of(endpoints_.begin(), endpoints_.end(),
                     [](const Endpoint& e) { return e.continuity != Continuity::continuous; });
}

// ---------------------------------------------------------------- built-ins

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || std::isnan(v)) throw ModelError(std::string(name) + " must be positive");
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw ModelError(std::string(name) + " must be finite");
}

}  // namespace

PiecewiseFn indicator_penalty(double lambda, double tau) {
  require_positive(lambda, "lambda");
  require_finite(lambda, "lambda");
  require_finite(tau, "tau");
  auto fn = PiecewiseFn::build({{-kInf, tau, PieceEvaluator::constant(lambda)}, {tau, kInf, PieceEvaluator::constant(0.0)}},
                               {Continuity::right_only});
  fn.set_descriptor({"indicator", {{"lambda", lambda}, {"tau", tau}}});
  return fn;
}

PiecewiseFn capped_l1(double lambda, double b) {
  require_positive(lambda, "lambda");
  require_finite(lambda, "lambda");
  require_positive(b, "b");
  if (!std::isfinite(b)) return l1_penalty(lambda);
  auto fn = PiecewiseFn::build({{-kInf, -b, PieceEvaluator::constant(lambda * b)},
                                {-b, b, PieceEvaluator::abs(lambda)},
                                {b, kInf, PieceEvaluator::constant(lambda * b)}},
                               {Continuity::continuous, Continuity::continuous});
  fn.set_descriptor({"capped_l1", {{"lambda", lambda}, {"b", b}}});
  return fn;
}

PiecewiseFn leaky_capped_l1(double lambda, double b, double beta) {
  require_positive(lambda, "lambda");
  require_finite(lambda, "lambda");
  require_positive(b, "b");
  require_finite(b, "b");
  if (!(beta >= 0.0 && beta < lambda)) throw ModelError("leaky capped-l1 needs 0 <= beta < lambda");
  const double base = lambda * b - beta * b;
  auto fn = PiecewiseFn::build({{-kInf, -b, PieceEvaluator::affine(base, -beta)},
                                {-b, b, PieceEvaluator::abs(lambda)},
                                {b, kInf, PieceEvaluator::affine(base, beta)}},
                               {Continuity::continuous, Continuity::continuous});
  fn.set_descriptor({"leaky_capped_l1", {{"lambda", lambda}, {"b", b}, {"beta", beta}}});
  return fn;
}

PiecewiseFn l0_penalty(double lambda) {
  require_positive(lambda, "lambda");
  require_finite(lambda, "lambda");
  auto fn = PiecewiseFn::build({{-kInf, 0.0, PieceEvaluator::constant(lambda)},
                                {0.0, 0.0, PieceEvaluator::constant(0.0)},
                                {0.0, kInf, PieceEvaluator::constant(lambda)}},
                               {Continuity::isolated, Continuity::isolated});
  fn.set_descriptor({"l0", {{"lambda", lambda}}});
  return fn;
}

PiecewiseFn l1_penalty(double lambda) {
  if (!(lambda >= 0.0)) throw ModelError("lambda must be nonnegative");
  require_finite(lambda, "lambda");
  auto fn = PiecewiseFn::build({{-kInf, kInf, PieceEvaluator::abs(lambda)}}, {});
  fn.set_descriptor({"l1", {{"lambda", lambda}}});
  return fn;
}

PiecewiseFn zero_penalty() {
  auto fn = PiecewiseFn::build({{-kInf, kInf, PieceEvaluator::constant(0.0)}}, {});
  fn.set_descriptor({"zero", {}});
  return fn;
}

PiecewiseFn make_penalty(const PenaltyDescriptor& d) {
  const auto get = [&](const char* key) {
    auto it = d.params.find(key);
    if (it == d.params.end()) throw ModelError("penalty '" + d.kind + "' needs parameter '" + key + "'");
    return it->second;
  };
  const auto get_or = [&](const char* key, double fallback) {
    auto it = d.params.find(key);
    return it == d.params.end() ? fallback : it->second;
  };
  if (d.kind == "capped_l1") return capped_l1(get("lambda"), get_or("b", 1.0));
  if (d.kind == "leaky_capped_l1") return leaky_capped_l1(get("lambda"), get_or("b", 1.0), get("beta"));
  if (d.kind == "indicator") return indicator_penalty(get("lambda"), get_or("tau", 0.0));
  if (d.kind == "l0") return l0_penalty(get("lambda"));
  if (d.kind == "l1") return l1_penalty(get("lambda"));
  if (d.kind == "zero") return zero_penalty();
  throw ModelError("unknown penalty kind '" + d.kind + "'");
}

}  // namespace pwprox
