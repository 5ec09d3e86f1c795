#include "pwprox/certificate.hpp"

#include <algorithm>
#include <cmath>

namespace pwprox {

namespace {

void validate(const CertificateInputs& in) {
  const auto positive = [](double v) { return v > 0.0 && !std::isnan(v); };
  if (!positive(in.L_g) || !std::isfinite(in.L_g)) throw ModelError("certificate: L_g must be positive and finite");
  if (!(in.G >= 0.0) || !std::isfinite(in.G)) throw ModelError("certificate: G must be nonnegative and finite");
  if (!(in.F0 >= 0.0) || !std::isfinite(in.F0)) throw ModelError("certificate: F0 must be nonnegative and finite");
  if (!positive(in.C)) throw ModelError("certificate: C must be positive (or +inf)");
  if (!positive(in.J)) throw ModelError("certificate: J must be positive (or +inf)");
  if (!positive(in.s0)) throw ModelError("certificate: s0 must be positive (or +inf)");
  if (!positive(in.R0)) throw ModelError("certificate: R0 must be positive (or +inf)");
  if (!(in.w0 > 0.0 && in.w0 <= 1.0)) throw ModelError("certificate: w0 must lie in (0, 1]");
  if (!(in.d >= 1.0) || !std::isfinite(in.d)) throw ModelError("certificate: d must be at least 1");
  if (std::isfinite(in.C)) {
    if (!in.eps0) throw ModelError("certificate: eps0 is required when continuous endpoints exist (C finite)");
    if (!positive(*in.eps0) || !std::isfinite(*in.eps0)) throw ModelError("certificate: eps0 must be positive");
  }
  if (in.s && !(positive(*in.s) && std::isfinite(*in.s))) throw ModelError("certificate: s must be positive");
}

double safe_div(double num, double den) {
  if (den == 0.0) return num > 0.0 ? kInf : 0.0;
  return num / den;
}

/// Largest s with kappa(s) > 0 on (0, s): the positive root of each branch.
double kappa_root(const CertificateInputs& in, double A, double B) {
  const double G = in.G;
  const double F0 = in.F0;
  double root = kInf;
  if (std::isfinite(in.C)) {
    // s (C w0 eps0 - G B) - s^2 (C w0 L_g (1 - w0)(G + F0) + A B)
    const double lin = in.C * in.w0 * *in.eps0 - G * B;
    const double quad = in.C * in.w0 * in.L_g * (1.0 - in.w0) * (G + F0) + A * B;
    root = std::min(root, lin <= 0.0 ? 0.0 : safe_div(lin, quad));
  }
  if (std::isfinite(in.J)) {
    // J - s (2 F0 (G + F0) + G B) - s^2 A B, root in cancellation-free form
    const double beta = 2.0 * F0 * (G + F0) + G * B;
    const double disc = std::sqrt(beta * beta + 4.0 * A * B * in.J);
    root = std::min(root, safe_div(2.0 * in.J, beta + disc));
  }
  return root;
}

}  // namespace

Kappas kappa_at(const CertificateInputs& in, double s) {
  const double sqrt_d = std::sqrt(in.d);
  const double B = in.G + sqrt_d * in.F0;
  Kappas k;
  if (std::isfinite(in.C)) {
    k.kappa1 = s * in.C * in.w0 * (*in.eps0 - s * in.L_g * (1.0 - in.w0) * (in.G + in.F0));
  }
  if (std::isfinite(in.J)) k.kappa2 = in.J - 2.0 * s * in.F0 * (in.G + in.F0);
  k.kappa0 = std::min(k.kappa1, k.kappa2);
  k.kappa = std::isfinite(k.kappa0) ? k.kappa0 - s * (s * in.L_g * B + in.G) * B : kInf;
  return k;
}

StepSizeCertificate certify_step_size(const CertificateInputs& in) {
  validate(in);
  StepSizeCertificate c;
  c.inputs = in;
  const double G = in.G;
  const double F0 = in.F0;
  c.B = G + std::sqrt(in.d) * F0;
  c.A = in.L_g * c.B;
  const bool has_c = std::isfinite(in.C);
  const bool has_j = std::isfinite(in.J);

  c.s1_terms = {
      {"s0/(G+F0)", safe_div(in.s0, G + F0)},
      {"eps0/(L_g(1-w0)(G+F0))", has_c ? safe_div(*in.eps0, in.L_g * (1.0 - in.w0) * (G + F0)) : kInf},
      {"J/(F0 G+G^2/2)", has_j ? safe_div(in.J, F0 * G + G * G / 2.0) : kInf},
      {"J/(2F0(G+F0))", has_j ? safe_div(in.J, 2.0 * F0 * (G + F0)) : kInf},
      {"kappa>0", kappa_root(in, c.A, c.B)},
  };
  c.s1 = kInf;
  for (const auto& t : c.s1_terms) c.s1 = std::min(c.s1, t.value);

  c.cap_terms = {
      {"s1", c.s1},
      {"eps0/(L_g(G+sqrt(d)F0))", has_c ? safe_div(*in.eps0, in.L_g * c.B) : kInf},
      {"1/L_g", 1.0 / in.L_g},
  };

  // Report the single term that attains s_max, preferring the explicit s1 term.
  c.s_max = kInf;
  c.binding_term.clear();
  for (const auto& t : c.s1_terms) {
    if (t.value < c.s_max) {
      c.s_max = t.value;
      c.binding_term = t.name;
    }
  }
  for (std::size_t j = 1; j < c.cap_terms.size(); ++j) {
    if (c.cap_terms[j].value < c.s_max) {
      c.s_max = c.cap_terms[j].value;
      c.binding_term = c.cap_terms[j].name;
    }
  }

  c.s = in.s ? *in.s : c.s_max / 2.0;
  c.kappas = kappa_at(in, c.s);
  return c;
}

}  // namespace pwprox
