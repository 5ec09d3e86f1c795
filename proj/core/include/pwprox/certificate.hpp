#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwprox/common.hpp"

namespace pwprox {

/// Constants entering the theoretical step-size bound. C and J use +inf when
/// the regulariser has no continuous (resp. discontinuous) endpoint; eps0 is
/// only needed when C is finite.
struct CertificateInputs {
  double L_g = 1.0;
  double G = 0.0;
  double F0 = 0.0;
  double C = kInf;
  double J = kInf;
  std::optional<double> eps0;
  double s0 = kInf;
  double R0 = kInf;
  double w0 = 0.5;
  double d = 1.0;
  /// Step size at which the kappa constants are reported; half of s_max when unset.
  std::optional<double> s;
};

struct CertificateTerm {
  std::string name;
  double value = kInf;
};

/// kappa_1, kappa_2, kappa_0 = min(kappa_1, kappa_2) and kappa at one step size.
struct Kappas {
  double kappa1 = kInf;
  double kappa2 = kInf;
  double kappa0 = kInf;
  double kappa = kInf;
};

struct StepSizeCertificate {
  CertificateInputs inputs;
  double A = 0.0;  ///< L_g (G + sqrt(d) F0)
  double B = 0.0;  ///< G + sqrt(d) F0
  std::vector<CertificateTerm> s1_terms;
  double s1 = kInf;
  std::vector<CertificateTerm> cap_terms;  ///< s1 and the two extra caps
  double s_max = kInf;
  std::string binding_term;
  double s = 0.0;  ///< step size used for `kappas`
  Kappas kappas;

  bool feasible() const { return s_max > 0.0; }
};

Kappas kappa_at(const CertificateInputs& in, double s);

/// Evaluates every min-term of s1 and s_max and the kappa constants.
/// Throws ModelError on invalid inputs or when eps0 is required but missing.
StepSizeCertificate certify_step_size(const CertificateInputs& in);

}  // namespace pwprox
