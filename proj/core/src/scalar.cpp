#include "pwprox/scalar.hpp"

#include <string>

namespace pwprox {

namespace {

constexpr int kMaxDoublings = 200;
constexpr int kMaxGoldenIterations = 400;
const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;

double checked(const std::function<double(double)>& phi, double v) {
  const double y = phi(v);
  if (std::isnan(y)) throw NumericError("objective is NaN at v = " + std::to_string(v));
  return y;
}

}  // namespace

double minimize_convex_1d(const std::function<double(double)>& phi, double lo, double hi, double start) {
  if (!(lo <= hi)) throw NumericError("minimize_convex_1d: empty interval");
  if (lo == hi) return lo;

  double a = lo;
  double b = hi;
  const double c = clamp_to(std::isfinite(start) ? start : 0.0, lo, hi);
  const double fc = checked(phi, c);

  if (!std::isfinite(b)) {
    double step = 1.0;
    double fprev = fc;
    int i = 0;
    for (; i < kMaxDoublings; ++i) {
      const double next = c + step;
      const double fn = checked(phi, next);
      if (fn > fprev) {
        b = next;
        break;
      }
      fprev = fn;
      step *= 2.0;
    }
    if (i == kMaxDoublings) throw NumericError("minimize_convex_1d: failed to bracket minimiser on the right");
  }
  if (!std::isfinite(a)) {
    double step = 1.0;
    double fprev = fc;
    int i = 0;
    for (; i < kMaxDoublings; ++i) {
      const double next = c - step;
      const double fn = checked(phi, next);
      if (fn > fprev) {
        a = next;
        break;
      }
      fprev = fn;
      step *= 2.0;
    }
    if (i == kMaxDoublings) throw NumericError("minimize_convex_1d: failed to bracket minimiser on the left");
  }

  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = checked(phi, x1);
  double f2 = checked(phi, x2);
  for (int it = 0; it < kMaxGoldenIterations; ++it) {
    if (b - a <= 1e-13 * std::max({1.0, std::abs(a), std::abs(b)})) break;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = checked(phi, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = checked(phi, x2);
    }
  }

  ScalarCandidate best{0.5 * (a + b), checked(phi, 0.5 * (a + b))};
  for (double v : {x1, x2, lo, hi}) {
    if (!std::isfinite(v)) continue;
    ScalarCandidate cand{v, checked(phi, v)};
    if (preferred(cand, best)) best = cand;
  }
  return best.v;
}

}  // namespace pwprox
