// Acceptance suite. Usage: acceptance [criterion...]; no arguments runs 1-9.
// Prints one PASS/FAIL line per criterion and exits nonzero on any FAIL.

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pwprox/certificate.hpp"
#include "pwprox/data.hpp"
#include "pwprox/harness.hpp"
#include "pwprox/oracle.hpp"
#include "pwprox/prox.hpp"
#include "pwprox/solvers.hpp"

using namespace pwprox;

namespace {

// Pinned tolerances and budgets.
constexpr double kOracleResolution = 1e-6;
constexpr double kOracleSlack = 1e-8;
constexpr int kOracleDraws = 1000;
constexpr double kOracleSeconds = 10.0;

constexpr int kDescentProblems = 20;
constexpr double kDescentTol = 1e-12;
constexpr double kDescentSeconds = 30.0;

constexpr double kKappaSeconds = 1.0;

constexpr double kRateTail = 0.6;
constexpr double kPpgdSlopeMax = -1.7;
constexpr double kPgdSlopeMin = -1.3;
constexpr double kRateSeconds = 10.0;

constexpr double kReductionTol = 1e-12;

constexpr double kOrderingSeconds = 300.0;

constexpr double kGradientRelTol = 1e-5;

constexpr int kCertificateDraws = 1000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SolverOptions options(double s, std::size_t K) {
  SolverOptions o;
  o.s = s;
  o.K = K;
  o.timing = false;
  return o;
}

std::shared_ptr<const PiecewiseFn> share(PiecewiseFn fn) { return std::make_shared<const PiecewiseFn>(std::move(fn)); }

/// Oracle search radius: the largest surrogate slope moves the minimiser by at
/// most s * slope and a jump of height j by at most sqrt(2 s j).
double halfwidth(const SurrogateFn& fm, double s) {
  double slope = fm.inside().slope_bound;
  double jump = 0.0;
  for (const auto* side : {&fm.left_side(), &fm.right_side()}) {
    if (side->branch == SideBranch::unbounded) continue;
    slope = std::max(slope, std::abs(side->slope));
    const double inner = side == &fm.left_side() ? fm.inside().limit_left : fm.inside().limit_right;
    if (side->branch == SideBranch::constant_limit) jump += std::abs(side->value - inner);
  }
  return s * slope + std::sqrt(2.0 * s * jump) + 1e-3;
}

// 1. Closed-form surrogate prox never loses to a fine grid oracle.
Outcome prox_oracle_suite() {
  const auto t0 = Clock::now();
  // Snap and hard-threshold penalties use a small lambda so that the 1e-6
  // grid over their bracket stays within the time budget.
  const std::vector<PiecewiseFn> fns = {capped_l1(0.2, 1.0), leaky_capped_l1(0.2, 1.0, 0.1),
                                        indicator_penalty(0.05, 1.0), l0_penalty(0.05), l1_penalty(0.2),
                                        zero_penalty()};
  std::map<ProxKind, std::vector<const SurrogateFn*>> by_kernel;
  for (const auto& f : fns) {
    for (std::size_t m = 0; m < f.num_pieces(); ++m) by_kernel[f.surrogate(m).kernel().kind].push_back(&f.surrogate(m));
  }
  by_kernel.erase(ProxKind::numeric);

  std::mt19937_64 rng(1);
  double worst = -kInf;
  int failures = 0;
  std::ostringstream kinds;
  for (const auto& [kind, pieces] : by_kernel) {
    kinds << (kinds.tellp() > 0 ? "," : "") << to_string(kind);
    for (int i = 0; i < kOracleDraws; ++i) {
      const SurrogateFn& fm = *pieces[static_cast<std::size_t>(i) % pieces.size()];
      const double s = 1e-3 + (1.0 - 1e-3) * uniform01(rng);
      const double x = -10.0 + 20.0 * uniform01(rng);
      const double closed = prox_surrogate(fm, s, x);
      const double oracle = prox_oracle(fm, s, x, halfwidth(fm, s), kOracleResolution);
      const double excess = prox_objective(fm, s, x, closed) - prox_objective(fm, s, x, oracle);
      worst = std::max(worst, excess);
      if (excess > kOracleSlack) ++failures;
    }
  }
  const double secs = seconds_since(t0);
  const bool all_kernels = by_kernel.size() == 5;
  return {failures == 0 && all_kernels && secs < kOracleSeconds,
          "kernels " + kinds.str() + ", " + std::to_string(by_kernel.size() * kOracleDraws) + " draws, " +
              std::to_string(failures) + " above slack, worst excess " + fmt(worst) + ", " + fmt(secs) + " s"};
}

struct Instance {
  std::string label;
  Problem problem;
};

/// The twenty seeded problems shared by the descent and stability checks.
std::vector<Instance> random_instances() {
  std::vector<Instance> out;
  for (int i = 0; i < kDescentProblems; ++i) {
    SynthSpec spec;
    spec.kind = i % 2 == 0 ? LossKind::least_squares : LossKind::logistic;
    spec.n = static_cast<std::size_t>(100 + 20 * i);
    spec.d = static_cast<std::size_t>(10 + 2 * i);
    spec.sparsity = 0.3;
    spec.noise = 0.1;
    spec.seed = static_cast<std::uint64_t>(1000 + i);
    PiecewiseFn pen = i % 3 == 0 ? capped_l1(0.2, 1.0) : (i % 3 == 1 ? indicator_penalty(0.3, 0.2) : l0_penalty(0.2));
    std::string label = std::string(to_string(spec.kind)) + "/" + std::to_string(i);
    out.push_back({label, Problem(SmoothLoss(spec.kind, synth(spec).data), share(std::move(pen)))});
  }
  return out;
}

// 2. PPGD and monotone APG never increase F.
Outcome monotone_descent() {
  const auto t0 = Clock::now();
  double worst = -kInf;
  std::size_t transitions = 0;
  int violations = 0;
  for (const auto& inst : random_instances()) {
    const Vector x0 = Vector::Zero(inst.problem.dim());
    for (const char* name : {"ppgd", "apg"}) {
      const Trace t = run_solver(name, inst.problem, x0, options(0.0, 300));
      transitions += t.rows.back().transitions;
      for (std::size_t k = 1; k < t.rows.size(); ++k) {
        const double rise = t.rows[k].F - t.rows[k - 1].F;
        worst = std::max(worst, rise);
        if (rise > kDescentTol) ++violations;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < kDescentSeconds,
          std::to_string(kDescentProblems) + " problems x {ppgd, apg}, largest rise " + fmt(worst) + ", " +
              std::to_string(violations) + " violations, " + std::to_string(transitions) + " transitions, " +
              fmt(secs) + " s"};
}

// 3. Every transition on the certified 1D capped-l1 instance lowers F by kappa.
Outcome kappa_decrease() {
  const auto t0 = Clock::now();
  // g(x) = (x - 2)^2 / 2 written as ||y - D x||^2 with D = y / 2 = 1 / sqrt(2).
  Dataset data;
  data.features = Matrix::Constant(1, 1, 1.0 / std::sqrt(2.0));
  data.labels = Vector::Constant(1, 2.0 / std::sqrt(2.0));
  const Problem problem(SmoothLoss(LossKind::least_squares, data), share(capped_l1(0.2, 1.0)));
  const Vector x0 = Vector::Zero(1);

  CertificateInputs in;
  in.L_g = problem.loss().lipschitz();
  in.G = estimate_G(problem, x0);
  const auto& k = problem.penalty(0).constants();
  in.F0 = k.F0;
  in.C = k.C;
  in.J = k.J;
  in.s0 = k.s0;
  in.R0 = k.R0;
  // Smallest |g'| at the continuous endpoints -1 and 1.
  in.eps0 = std::min(std::abs(-1.0 - 2.0), std::abs(1.0 - 2.0));
  const StepSizeCertificate cert = certify_step_size(in);
  const std::string inputs = "L_g=" + fmt(in.L_g) + " G=" + fmt(in.G) + " C=" + fmt(in.C) + " eps0=" + fmt(*in.eps0) +
                             " F0=" + fmt(in.F0);
  if (!cert.feasible() || !(cert.kappas.kappa > 0.0)) {
    return {false, "no certified step size: s_max = " + fmt(cert.s_max) + " (binding " + cert.binding_term + ", " +
                       inputs + "), so no transition can be certified; " + fmt(seconds_since(t0)) + " s"};
  }
  const Trace t = ppgd(problem, x0, options(cert.s, 2000));
  std::size_t events = 0;
  double smallest_drop = kInf;
  for (std::size_t j = 1; j < t.rows.size(); ++j) {
    if (!t.rows[j].transition) continue;
    ++events;
    smallest_drop = std::min(smallest_drop, t.rows[j - 1].F - t.rows[j].F);
  }
  const double secs = seconds_since(t0);
  return {events > 0 && smallest_drop >= cert.kappas.kappa && secs < kKappaSeconds,
          "s=" + fmt(cert.s) + " kappa=" + fmt(cert.kappas.kappa) + ", " + std::to_string(events) +
              " transitions, smallest drop " + fmt(smallest_drop) + ", " + fmt(secs) + " s"};
}

// 4. After the last transition the piece assignment never changes.
Outcome piece_stability() {
  const auto t0 = Clock::now();
  int runs = 0;
  int broken = 0;
  std::size_t latest = 0;
  std::size_t transitions = 0;
  for (const auto& inst : random_instances()) {
    const Vector x0 = Vector::Zero(inst.problem.dim());
    for (const char* name : {"ppgd", "pgd", "apg"}) {
      SolverOptions o = options(0.0, 300);
      o.record_iterates = true;
      const Trace t = run_solver(name, inst.problem, x0, o);
      ++runs;
      // Recompute P(x^(k)) from the iterates rather than trusting the trace.
      std::size_t last = 0;
      std::size_t changes = 0;
      std::vector<Assignment> p;
      for (const auto& x : t.iterates) p.push_back(inst.problem.assignment(x));
      for (std::size_t j = 1; j < p.size(); ++j) {
        if (p[j] != p[j - 1]) {
          last = j;
          ++changes;
        }
      }
      bool ok = p == t.assignments && changes == t.rows.back().transitions && last == t.last_transition();
      for (std::size_t j = last; j < p.size(); ++j) ok = ok && p[j] == p[last];
      if (!ok) ++broken;
      latest = std::max(latest, last);
      transitions += changes;
    }
  }
  return {broken == 0, std::to_string(runs) + " runs, " + std::to_string(broken) + " unstable, " +
                           std::to_string(transitions) + " transitions, latest at k=" + std::to_string(latest) + ", " +
                           fmt(seconds_since(t0)) + " s"};
}

Matrix orthonormal_columns(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  Matrix g(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = standard_normal(rng);
  }
  const Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(n, d);
}

// 5. Local O(1/k^2) for PPGD against O(1/k) for PGD on an ill-conditioned
// quadratic + l1 problem with a known minimiser.
Outcome local_rate() {
  const auto t0 = Clock::now();
  constexpr Eigen::Index d = 30;
  constexpr Eigen::Index n = 60;
  constexpr double lambda = 1e-3;
  std::mt19937_64 rng(1);
  const Matrix U = orthonormal_columns(n, d, rng);
  const Matrix V = orthonormal_columns(d, d, rng);
  // Squared singular values log-spaced over [1e-7, 1] so both methods stay in
  // their sublinear regime over the fitted window.
  Vector sigma(d);
  for (Eigen::Index j = 0; j < d; ++j) sigma[j] = std::sqrt(std::pow(1e-7, static_cast<double>(j) / (d - 1)));
  const Matrix D = U * sigma.asDiagonal() * V.transpose();

  Vector x_star(d), sign(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    sign[i] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    x_star[i] = sign[i] * (1.0 + uniform01(rng));
  }
  // Choose y so that 2 D^T (D x* - y) + lambda sign(x*) = 0.
  const Vector r = U * (sigma.cwiseInverse().asDiagonal() * (V.transpose() * (0.5 * lambda * sign)));
  Dataset data;
  data.features = D;
  data.labels = D * x_star + r;
  const Problem problem(SmoothLoss(LossKind::least_squares, data), share(l1_penalty(lambda)));

  // Start in the orthant of x*: ||x0 - x*|| = 0.2 < min |x*_i| keeps every
  // sign fixed, which is the local regime the rate describes.
  Vector c(d);
  for (Eigen::Index j = 0; j < d; ++j) c[j] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  const Vector x0 = x_star + V * c * (0.2 / std::sqrt(static_cast<double>(d)));
  const double F_star = problem.objective(x_star);
  const double kkt = (problem.loss().gradient(x_star) + lambda * sign).lpNorm<Eigen::Infinity>();

  const Trace fast = ppgd(problem, x0, options(0.0, 2000));
  const Trace slow = pgd(problem, x0, options(0.0, 2000));
  const double ppgd_slope = fit_rate(fast, kRateTail, F_star);
  const double pgd_slope = fit_rate(slow, kRateTail, F_star);
  const double secs = seconds_since(t0);
  return {ppgd_slope <= kPpgdSlopeMax && pgd_slope >= kPgdSlopeMin && kkt < 1e-10 && secs < kRateSeconds,
          "ppgd slope " + fmt(ppgd_slope) + " (<= " + fmt(kPpgdSlopeMax) + "), pgd slope " + fmt(pgd_slope) +
              " (>= " + fmt(kPgdSlopeMin) + "), KKT residual " + fmt(kkt) + ", " + fmt(secs) + " s"};
}

// 6. With a single convex piece PPGD is monotone APG.
Outcome single_piece_reduction() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    SynthSpec spec;
    spec.kind = i % 2 == 0 ? LossKind::least_squares : LossKind::logistic;
    spec.n = 150;
    spec.d = 20;
    spec.sparsity = 0.3;
    spec.noise = 0.1;
    spec.seed = static_cast<std::uint64_t>(2000 + i);
    PiecewiseFn pen = i % 5 == 4 ? zero_penalty() : l1_penalty(0.05 * (1 + i % 5));
    const Problem problem(SmoothLoss(spec.kind, synth(spec).data), share(std::move(pen)));
    SolverOptions o = options(0.0, 500);
    o.record_iterates = true;
    const Trace a = ppgd(problem, Vector::Zero(problem.dim()), o);
    const Trace b = apg_monotone(problem, Vector::Zero(problem.dim()), o);
    if (a.iterates.size() != 501 || b.iterates.size() != 501) return {false, "iterate count mismatch"};
    for (std::size_t k = 0; k < a.iterates.size(); ++k) {
      worst = std::max(worst, (a.iterates[k] - b.iterates[k]).lpNorm<Eigen::Infinity>());
    }
  }
  return {worst <= kReductionTol,
          "10 instances x 500 iterations, max coordinate gap " + fmt(worst) + ", " + fmt(seconds_since(t0)) + " s"};
}

/// MNIST files when PWPROX_MNIST_DIR points at them, else a seeded synthetic set.
std::pair<Dataset, std::string> ordering_data() {
  namespace fs = std::filesystem;
  if (const char* dir = std::getenv("PWPROX_MNIST_DIR")) {
    const fs::path images = fs::path(dir) / "train-images-idx3-ubyte";
    const fs::path labels = fs::path(dir) / "train-labels-idx1-ubyte";
    if (fs::exists(images) && fs::exists(labels)) {
      std::mt19937_64 rng(1);
      const auto a = static_cast<double>(uniform_index(rng, 10));
      auto b = static_cast<double>(uniform_index(rng, 9));
      if (b >= a) b += 1.0;
      const Dataset all = load_idx(images.string(), labels.string());
      return {subsample_binary(all, a, b, 5000, 1), "MNIST " + fmt(a) + " vs " + fmt(b)};
    }
  }
  SynthSpec spec;
  spec.kind = LossKind::logistic;
  spec.n = 10000;
  spec.d = 784;
  spec.sparsity = 0.01;
  spec.noise = 0.1;
  spec.feature_scale = 2.0;
  spec.seed = 1;
  return {synth(spec).data, "synthetic n=10000 d=784"};
}

// 7. Desk-scale version of the logistic experiment.
Outcome objective_ordering() {
  const auto t0 = Clock::now();
  auto [data, source] = ordering_data();
  const Problem problem(SmoothLoss(LossKind::logistic, std::move(data)), share(capped_l1(0.2, 1.0)));
  const Vector x0 = Vector::Zero(problem.dim());
  const Trace a = ppgd(problem, x0, options(0.0, 300));
  const Trace b = apg_monotone(problem, x0, options(0.0, 300));
  const Trace c = pgd(problem, x0, options(0.0, 300));
  int above = 0;
  double worst = -kInf;
  for (std::size_t k = 100; k < a.rows.size(); ++k) {
    const double gap = a.rows[k].F - b.rows[k].F;
    worst = std::max(worst, gap);
    if (gap > 0.0) ++above;
  }
  const double secs = seconds_since(t0);
  const double fa = a.rows.back().F;
  const double fb = b.rows.back().F;
  const double fc = c.rows.back().F;
  return {above == 0 && fa <= fc && secs < kOrderingSeconds,
          source + ", final F ppgd " + fmt(fa) + " apg " + fmt(fb) + " pgd " + fmt(fc) + ", k>=100 ppgd above apg " +
              std::to_string(above) + " times (max " + fmt(worst) + "), transitions " +
              std::to_string(a.rows.back().transitions) + "/" + std::to_string(b.rows.back().transitions) + "/" +
              std::to_string(c.rows.back().transitions) + ", " + fmt(secs) + " s"};
}

// 8. Loss gradients against central finite differences.
Outcome gradient_checks() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (LossKind kind : {LossKind::least_squares, LossKind::logistic}) {
    SynthSpec spec;
    spec.kind = kind;
    spec.n = 200;
    spec.d = 20;
    spec.sparsity = 0.5;
    spec.noise = 0.1;
    spec.seed = 3000;
    const SmoothLoss loss(kind, synth(spec).data);
    std::mt19937_64 rng(kind == LossKind::logistic ? 2 : 1);
    for (int p = 0; p < 100; ++p) {
      Vector x(loss.dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = standard_normal(rng);
      const Vector g = loss.gradient(x);
      Vector fd(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
        Vector up = x, down = x;
        up[i] += h;
        down[i] -= h;
        fd[i] = (loss.value(up) - loss.value(down)) / (up[i] - down[i]);
      }
      worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
    }
  }
  return {worst <= kGradientRelTol,
          "2 losses x 100 points, worst relative error " + fmt(worst) + ", " + fmt(seconds_since(t0)) + " s"};
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * uniform01(rng));
}

// 9. Every kappa constant is positive strictly below s_max.
Outcome certificate_positivity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(9);
  int feasible = 0;
  int violations = 0;
  for (int i = 0; i < kCertificateDraws; ++i) {
    CertificateInputs in;
    in.L_g = log_uniform(rng, 1e-2, 1e2);
    in.G = log_uniform(rng, 1e-3, 10.0);
    in.F0 = log_uniform(rng, 1e-3, 10.0);
    in.C = log_uniform(rng, 1e-2, 10.0);
    in.J = log_uniform(rng, 1e-2, 10.0);
    in.eps0 = log_uniform(rng, 1e-3, 100.0);
    in.s0 = log_uniform(rng, 1e-2, 10.0);
    in.R0 = 2.0 * in.s0;
    in.w0 = 0.05 + 0.95 * uniform01(rng);
    in.d = static_cast<double>(1 + uniform_index(rng, 50));
    const StepSizeCertificate c = certify_step_size(in);
    if (!c.feasible()) continue;
    ++feasible;
    for (double frac : {1e-6, 0.1, 0.5, 0.9, 0.999999}) {
      const Kappas k = kappa_at(in, frac * c.s_max);
      if (!(k.kappa > 0.0 && k.kappa0 > 0.0 && k.kappa1 > 0.0 && k.kappa2 > 0.0)) ++violations;
    }
  }
  return {violations == 0 && feasible > 0,
          std::to_string(kCertificateDraws) + " draws, " + std::to_string(feasible) + " with s_max > 0, " +
              std::to_string(violations) + " nonpositive kappas, " + fmt(seconds_since(t0)) + " s"};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list = {
      {"prox oracle suite", prox_oracle_suite},
      {"monotone descent", monotone_descent},
      {"kappa decrease on transitions", kappa_decrease},
      {"eventual piece stability", piece_stability},
      {"local O(1/k^2) rate", local_rate},
      {"single-piece reduction", single_piece_reduction},
      {"logistic objective ordering", objective_ordering},
      {"gradient checks", gradient_checks},
      {"certificate positivity", certificate_positivity},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > static_cast<int>(criteria().size())) {
      std::cerr << "unknown criterion '" << argv[i] << "'; expected 1-" << criteria().size() << '\n';
      return 2;
    }
    selected.push_back(id);
  }
  if (selected.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria().size()); ++i) selected.push_back(i);
  }
  bool all = true;
  for (int id : selected) {
    const auto& [name, check] = criteria()[static_cast<std::size_t>(id - 1)];
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
