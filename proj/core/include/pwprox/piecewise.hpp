#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pwprox/common.hpp"

namespace pwprox {

/// How f behaves at a finite endpoint shared by two neighbouring pieces.
///
/// `continuous` and `left_only` endpoints belong to the piece on their left,
/// `right_only` endpoints to the piece on their right. `isolated` is reserved
/// for the two endpoints that bound a single-point piece {q}; that piece owns q.
enum class Continuity { continuous, left_only, right_only, isolated };

const char* to_string(Continuity c);
Continuity continuity_from_string(const std::string& name);

/// A convex univariate function used on one piece.
///
/// Affine and absolute-value forms carry analytic slopes and proximal maps;
/// custom forms fall back to finite differences and golden-section search.
class PieceEvaluator {
 public:
  enum class Form { affine, abs, custom };

  static PieceEvaluator constant(double value);
  static PieceEvaluator affine(double intercept, double slope);
  /// scale * |x - center| + offset
  static PieceEvaluator abs(double scale, double center = 0.0, double offset = 0.0);
  static PieceEvaluator custom(std::function<double(double)> fn);

  double operator()(double x) const;

  /// One-sided derivatives. Exact for analytic forms, Richardson-extrapolated
  /// forward/backward differences (base step 1e-6) for custom forms.
  double right_derivative(double x) const;
  double left_derivative(double x) const;

  /// argmin over v in [lo, hi] of (v - x)^2 / (2s) + f(v). Infinite bounds allowed.
  double prox(double s, double x, double lo, double hi) const;

  Form form() const { return form_; }
  bool is_constant() const { return form_ == Form::affine && slope_ == 0.0; }
  double intercept() const { return intercept_; }
  double slope() const { return slope_; }
  double scale() const { return scale_; }
  double center() const { return center_; }
  double offset() const { return offset_; }

 private:
  Form form_ = Form::affine;
  double intercept_ = 0.0;
  double slope_ = 0.0;
  double scale_ = 0.0;
  double center_ = 0.0;
  double offset_ = 0.0;
  std::function<double(double)> fn_;
};

/// Descriptor used to build a PiecewiseFn. `left`/`right` may be infinite;
/// a single-point piece has left == right.
struct PieceSpec {
  double left = -kInf;
  double right = kInf;
  PieceEvaluator eval = PieceEvaluator::constant(0.0);
};

/// One validated convex piece R_m.
struct Piece {
  double left = -kInf;
  double right = kInf;
  bool owns_left = false;
  bool owns_right = false;
  PieceEvaluator eval = PieceEvaluator::constant(0.0);

  double slope_left = 0.0;   ///< lim f'(x) as x -> left from inside (v+)
  double slope_right = 0.0;  ///< lim f'(x) as x -> right from inside (v-)
  double limit_left = 0.0;   ///< lim f(x) as x -> left from inside
  double limit_right = 0.0;  ///< lim f(x) as x -> right from inside
  double slope_bound = 0.0;  ///< sup |f'| over the interior

  bool single_point() const { return left == right; }
  double length() const { return right - left; }
  bool contains(double x) const;
};

/// One finite endpoint between pieces `index` and `index + 1`.
struct Endpoint {
  double value = 0.0;
  Continuity continuity = Continuity::continuous;
};

enum class SideBranch {
  unbounded,          ///< the piece extends to infinity on this side
  continuous_linear,  ///< f continuous at q: f(q) + v (x - q)
  limit_linear,       ///< q outside the piece: inner limit + v (x - q)
  constant_limit,     ///< q inside the piece, f jumps up across q: outer limit
};

const char* to_string(SideBranch b);

enum class ProxKind { identity, soft_threshold, indicator_snap, hard_threshold, linear_shift, numeric };

const char* to_string(ProxKind k);

/// Closed-form proximal kernel attached to a surrogate.
///
/// Parameter meaning per kind:
///  - linear_shift:   slope
///  - soft_threshold: scale, center, offset
///  - indicator_snap: at (= tau), jump, outer_left (constant region left of tau?)
///  - hard_threshold: at (= q), jump
struct ProxKernel {
  ProxKind kind = ProxKind::numeric;
  double slope = 0.0;
  double scale = 0.0;
  double center = 0.0;
  double at = 0.0;
  double jump = 0.0;
  bool outer_left = true;
};

/// Extension f_m of f restricted to piece m: agrees with f on R_m and is linear
/// (or, across an upward jump at an owned endpoint, constant) outside.
class SurrogateFn {
 public:
  struct Side {
    SideBranch branch = SideBranch::unbounded;
    double at = 0.0;     ///< endpoint q
    double value = 0.0;  ///< value anchored at q (linear) or the constant
    double slope = 0.0;  ///< zero for constant_limit
  };

  SurrogateFn(std::size_t piece, Piece inside, Side left, Side right);

  double operator()(double v) const;

  std::size_t piece() const { return piece_; }
  const Piece& inside() const { return inside_; }
  const Side& left_side() const { return left_; }
  const Side& right_side() const { return right_; }
  const ProxKernel& kernel() const { return kernel_; }

  /// True when neither side uses the constant (third) branch, in which case
  /// the surrogate is convex on the whole line.
  bool convex() const;

 private:
  static ProxKernel classify(const Piece& p, const Side& l, const Side& r);

  std::size_t piece_;
  Piece inside_;
  Side left_;
  Side right_;
  ProxKernel kernel_;
};

/// Structural constants of a piecewise convex function. +inf is used as a
/// sentinel when no endpoint of the relevant kind (or no finite length) exists.
struct StructuralConstants {
  double C = kInf;   ///< minimum slope drop across continuous endpoints
  double J = kInf;   ///< minimum jump across discontinuous endpoints
  double F0 = 0.0;   ///< bound on |f'| over piece interiors
  double R0 = kInf;  ///< minimum length over pieces of nonzero length
  double s0 = kInf;  ///< differentiability margin next to every endpoint
};

/// Parameters of a built-in penalty, kept so the function can be serialised.
struct PenaltyDescriptor {
  std::string kind;
  std::map<std::string, double> params;
};

/// Validated piecewise convex function. Immutable after construction.
class PiecewiseFn {
 public:
  /// Validates tiling, membership, convexity (grid probe) and the negative
  /// curvature condition; throws ModelError on any violation.
  /// `endpoint_flags` has one entry per boundary between consecutive pieces.
  static PiecewiseFn build(std::vector<PieceSpec> pieces, std::vector<Continuity> endpoint_flags);

  std::size_t num_pieces() const { return pieces_.size(); }
  const Piece& piece(std::size_t m) const { return pieces_.at(m); }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const std::vector<Endpoint>& endpoints() const { return endpoints_; }
  const StructuralConstants& constants() const { return constants_; }

  /// Index (0-based) of the unique piece containing x.
  std::size_t piece_index(double x) const;
  double operator()(double x) const { return evaluate(x); }
  double evaluate(double x) const;

  const SurrogateFn& surrogate(std::size_t m) const { return surrogates_.at(m); }

  /// True when f is continuous at the endpoint with value q (exact match).
  bool continuous_at(double q) const;

  bool has_continuous_endpoint() const;
  bool has_discontinuous_endpoint() const;

  const std::optional<PenaltyDescriptor>& descriptor() const { return descriptor_; }
  void set_descriptor(PenaltyDescriptor d) { descriptor_ = std::move(d); }

  /// Piece specs and flags as originally supplied (post-normalisation).
  const std::vector<Continuity>& endpoint_flags() const { return flags_; }

 private:
  PiecewiseFn() = default;

  std::vector<Piece> pieces_;
  std::vector<Endpoint> endpoints_;
  std::vector<Continuity> flags_;
  std::vector<SurrogateFn> surrogates_;
  StructuralConstants constants_;
  std::optional<PenaltyDescriptor> descriptor_;
};

// Built-in penalties.

/// lambda * 1{x < tau}
PiecewiseFn indicator_penalty(double lambda, double tau);
/// lambda * min(|x|, b)
PiecewiseFn capped_l1(double lambda, double b);
/// lambda * min(|x|, b) + beta * max(|x| - b, 0), requires 0 <= beta < lambda
PiecewiseFn leaky_capped_l1(double lambda, double b, double beta);
/// lambda * 1{x != 0}, modelled with the single-point piece {0}
PiecewiseFn l0_penalty(double lambda);
/// lambda * |x| as a single convex piece
PiecewiseFn l1_penalty(double lambda);
/// f = 0
PiecewiseFn zero_penalty();

/// Dispatch on a descriptor ({kind, params}); throws ModelError on unknown kinds.
PiecewiseFn make_penalty(const PenaltyDescriptor& d);

}  // namespace pwprox
