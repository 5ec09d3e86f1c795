#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pwprox/certificate.hpp"
#include "pwprox/harness.hpp"
#include "pwprox/io.hpp"
#include "pwprox/oracle.hpp"
#include "pwprox/prox.hpp"
#include "pwprox/solvers.hpp"

namespace pwprox::cli {

namespace {

using nlohmann::json;

/// Raised for bad flag values; mapped to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_number(const std::string& text, const std::string& flag) {
  if (text == "inf" || text == "+inf") return kInf;
  if (text == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError(flag + ": '" + text + "' is not a number");
  return v;
}

std::uint64_t parse_count(const std::string& text, const std::string& flag) {
  const double v = parse_number(text, flag);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) throw UsageError(flag + ": '" + text + "' is not a count");
  return static_cast<std::uint64_t>(v);
}

/// An inline flag and the config key it mirrors.
struct Flag {
  std::string name;
  std::string key;  ///< dotted config path
  enum Kind { text, number, count, boolean } kind;
  std::string value;
  bool set = false;
  CLI::Option* opt = nullptr;
};

/// Flags shared by `solve` and `benchmark`, each mirroring one config key.
class ProblemFlags {
 public:
  void attach(CLI::App* app, bool many_solvers) {
    flags_.reserve(32);
    add(app, "--loss", "loss", Flag::text, "Loss: logistic or least_squares");
    add(app, "--penalty", "penalty.kind", Flag::text, "Penalty kind: capped_l1, leaky_capped_l1, indicator, l0, l1, zero");
    add(app, "--lambda", "penalty.params.lambda", Flag::number, "Penalty weight lambda");
    add(app, "--b", "penalty.params.b", Flag::number, "Cap b of the capped penalties");
    add(app, "--tau", "penalty.params.tau", Flag::number, "Threshold tau of the indicator penalty");
    add(app, "--beta", "penalty.params.beta", Flag::number, "Outer slope beta of the leaky capped penalty");
    add(app, "--data-kind", "data.kind", Flag::text, "Data source: synth, csv or idx");
    add(app, "--data-path", "data.path", Flag::text, "CSV file (last column is the label)");
    add(app, "--header", "data.header", Flag::boolean, "CSV file has a header line");
    add(app, "--images", "data.images", Flag::text, "IDX image file");
    add(app, "--labels", "data.labels", Flag::text, "IDX label file");
    add(app, "--class-a", "data.class_a", Flag::number, "IDX class mapped to +1");
    add(app, "--class-b", "data.class_b", Flag::number, "IDX class mapped to -1");
    add(app, "--per-class", "data.per_class", Flag::count, "IDX examples drawn per class");
    add(app, "--n", "data.n", Flag::count, "Synthetic sample count");
    add(app, "--d", "data.d", Flag::count, "Synthetic dimension");
    add(app, "--sparsity", "data.sparsity", Flag::number, "Synthetic fraction of nonzero true coefficients");
    add(app, "--noise", "data.noise", Flag::number, "Synthetic label noise level");
    add(app, "--feature-scale", "data.feature_scale", Flag::number, "Synthetic feature scale");
    add(app, "--seed", "data.seed", Flag::count, "Data seed (synthetic draw or IDX subsample)");
    auto* solver = app->add_option("--solver", solvers_,
                                   many_solvers ? "Solvers to race (repeatable): ppgd, pgd, apg" : "Solver: ppgd, pgd or apg");
    if (!many_solvers) solver->expected(1);
    add(app, "--s", "solvers.s", Flag::number, "Step size (default 1/(2 L_g))");
    add(app, "--w0", "solvers.w0", Flag::number, "NCE threshold w0 in (0, 1]");
    add(app, "--K", "solvers.K", Flag::count, "Iterations");
    add(app, "--output-dir", "output_dir", Flag::text, "Directory for traces and reports");
    add(app, "--timing", "timing", Flag::boolean, "Record wall-clock times (outputs stop being byte-stable)");
    add(app, "--no-fit-rates", "fit_rates", Flag::boolean, "Skip the reference runs used for rate fitting");
    add(app, "--rate-tail-fraction", "rate_tail_fraction", Flag::number, "Tail fraction used by the rate fit");
    app->add_option("--config", config_path_, "JSON config file; its values win over inline flags")
        ->check(CLI::ExistingFile);
  }

  /// Config document assembled from the inline flags, overridden by --config.
  ExperimentConfig resolve(const std::vector<std::string>& default_solvers, std::ostream& err) {
    json inline_cfg = json::object();
    std::vector<std::string> names = solvers_;
    for (auto& f : flags_) {
      f.set = f.opt->count() > 0;
      if (!f.set) continue;
      json value;
      switch (f.kind) {
        case Flag::text: value = f.value; break;
        case Flag::number: {
          const double v = parse_number(f.value, f.name);
          value = std::isinf(v) ? json(v > 0 ? "inf" : "-inf") : json(v);
          break;
        }
        case Flag::count: value = parse_count(f.value, f.name); break;
        case Flag::boolean: value = f.key == "fit_rates" ? false : true; break;
      }
      if (f.key.rfind("solvers.", 0) == 0) continue;
      set_path(inline_cfg, f.key, value);
    }
    const bool solver_fields = std::any_of(flags_.begin(), flags_.end(), [](const Flag& f) {
      return f.set && f.key.rfind("solvers.", 0) == 0;
    });
    if (!names.empty() || solver_fields) {
      if (names.empty()) names = default_solvers;
      json arr = json::array();
      for (const auto& n : names) {
        json s{{"name", n}};
        for (const auto& f : flags_) {
          if (!f.set || f.key.rfind("solvers.", 0) != 0) continue;
          const std::string field = f.key.substr(8);
          if (f.kind == Flag::count) {
            s[field] = parse_count(f.value, f.name);
          } else {
            s[field] = parse_number(f.value, f.name);
          }
        }
        arr.push_back(s);
      }
      inline_cfg["solvers"] = arr;
    }

    json merged = inline_cfg;
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      std::stringstream ss;
      ss << in.rdbuf();
      json file_cfg;
      try {
        file_cfg = json::parse(ss.str());
      } catch (const json::exception& e) {
        throw ModelError("invalid config JSON in '" + config_path_ + "': " + e.what());
      }
      warn_conflicts(inline_cfg, file_cfg, "", err);
      merged.merge_patch(file_cfg);
    }
    if (!merged.contains("solvers")) {
      json arr = json::array();
      for (const auto& n : default_solvers) arr.push_back({{"name", n}});
      merged["solvers"] = arr;
    }
    return parse_config(merged.dump());
  }

 private:
  void add(CLI::App* app, const std::string& name, const std::string& key, Flag::Kind kind, const std::string& help) {
    // Options keep pointers into flags_; the reserve in attach() keeps them stable.
    Flag& f = flags_.emplace_back(Flag{name, key, kind, "", false, nullptr});
    f.opt = kind == Flag::boolean ? app->add_flag(name, help) : app->add_option(name, f.value, help);
  }

  static void set_path(json& root, const std::string& key, const json& value) {
    json* node = &root;
    std::size_t start = 0;
    for (std::size_t dot = key.find('.'); dot != std::string::npos; dot = key.find('.', start)) {
      node = &(*node)[key.substr(start, dot - start)];
      start = dot + 1;
    }
    (*node)[key.substr(start)] = value;
  }

  static void warn_conflicts(const json& inline_cfg, const json& file_cfg, const std::string& prefix,
                             std::ostream& err) {
    for (const auto& [key, value] : inline_cfg.items()) {
      if (!file_cfg.is_object() || !file_cfg.contains(key)) continue;
      const std::string path = prefix.empty() ? key : prefix + "." + key;
      if (value.is_object() && file_cfg.at(key).is_object()) {
        warn_conflicts(value, file_cfg.at(key), path, err);
      } else {
        err << "warning: '" << path << "' is set both inline and in the config file; using the config file\n";
      }
    }
  }

  std::vector<Flag> flags_;
  std::vector<std::string> solvers_;
  std::string config_path_;
};

Problem build_problem(const ExperimentConfig& cfg) {
  auto penalty = std::make_shared<const PiecewiseFn>(make_penalty(cfg.penalty));
  return Problem(SmoothLoss(cfg.loss, load_data(cfg.data, cfg.loss)), penalty);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Oracle search radius: the surrogate's largest slope moves the prox by at
/// most s * slope, and a jump of size j by at most sqrt(2 s j).
double oracle_halfwidth(const SurrogateFn& fm, double s) {
  double slope = fm.inside().slope_bound;
  double jump = 0.0;
  for (const auto* side : {&fm.left_side(), &fm.right_side()}) {
    if (side->branch == SideBranch::unbounded) continue;
    slope = std::max(slope, std::abs(side->slope));
    if (side->branch == SideBranch::constant_limit) {
      const double inner = side == &fm.left_side() ? fm.inside().limit_left : fm.inside().limit_right;
      jump += std::abs(side->value - inner);
    }
  }
  return s * slope + std::sqrt(2.0 * s * jump) + 1e-3;
}

struct App {
  CLI::App app{"Proximal solvers for piecewise convex regularised problems", "pwprox"};
  CLI::App* solve = nullptr;
  CLI::App* bench = nullptr;
  CLI::App* prox_check = nullptr;
  CLI::App* certify = nullptr;

  ProblemFlags solve_flags;
  ProblemFlags bench_flags;

  // prox-check
  std::string pc_penalty = "capped_l1";
  std::string pc_lambda = "0.2";
  std::string pc_b;
  std::string pc_tau;
  std::string pc_beta;
  std::string pc_json;
  std::string pc_piece;
  std::string pc_s = "0.5";
  std::string pc_xmin = "-3";
  std::string pc_xmax = "3";
  std::string pc_points = "13";
  std::string pc_resolution = "1e-6";

  // certify
  std::map<std::string, std::string> cert;
  std::map<std::string, CLI::Option*> cert_opts;
  std::string cert_penalty;
  std::string cert_lambda;
  std::string cert_b;
  std::string cert_tau;
  std::string cert_beta;
  bool cert_json = false;

  App() {
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    solve = app.add_subcommand("solve", "Run one solver and print the final objective and residual");
    solve_flags.attach(solve, false);

    bench = app.add_subcommand("benchmark", "Race several solvers on one problem and write traces plus a report");
    bench_flags.attach(bench, true);

    prox_check = app.add_subcommand("prox-check", "Compare closed-form surrogate prox values against the grid oracle");
    prox_check->add_option("--penalty", pc_penalty, "Penalty kind")->capture_default_str();
    prox_check->add_option("--lambda", pc_lambda, "Penalty weight lambda")->capture_default_str();
    prox_check->add_option("--b", pc_b, "Cap b");
    prox_check->add_option("--tau", pc_tau, "Indicator threshold tau");
    prox_check->add_option("--beta", pc_beta, "Leaky outer slope beta");
    prox_check->add_option("--penalty-json", pc_json, "Penalty JSON file (overrides --penalty)")
        ->check(CLI::ExistingFile);
    prox_check->add_option("--piece", pc_piece, "Piece index, 0-based (default: every piece)");
    prox_check->add_option("--s", pc_s, "Step size")->capture_default_str();
    prox_check->add_option("--x-min", pc_xmin, "Smallest input")->capture_default_str();
    prox_check->add_option("--x-max", pc_xmax, "Largest input")->capture_default_str();
    prox_check->add_option("--points", pc_points, "Inputs per piece")->capture_default_str();
    prox_check->add_option("--resolution", pc_resolution, "Oracle grid spacing")->capture_default_str();

    certify = app.add_subcommand("certify", "Evaluate the theoretical step-size bound and decrease constants");
    const std::vector<std::pair<std::string, std::string>> cert_flags = {
        {"--L-g", "Gradient Lipschitz constant L_g"},
        {"--G", "Gradient bound G over the enlarged level set"},
        {"--F0", "Subgradient bound F0"},
        {"--C", "Negative curvature gap C (inf when there is no continuous endpoint)"},
        {"--J", "Minimum jump J (inf when there is no discontinuous endpoint)"},
        {"--eps0", "Nonvanishing gradient margin eps0 (needed when C is finite)"},
        {"--s0", "Differentiability margin s0"},
        {"--R0", "Minimum piece length R0"},
        {"--w0", "NCE threshold w0"},
        {"--d", "Dimension d"},
        {"--s", "Step size at which the kappa constants are reported (default s_max/2)"},
    };
    for (const auto& [name, text] : cert_flags) cert_opts[name] = certify->add_option(name, cert[name], text);
    certify->add_option("--penalty", cert_penalty, "Take C, J, F0, s0 and R0 from this penalty kind");
    certify->add_option("--lambda", cert_lambda, "Penalty weight lambda");
    certify->add_option("--b", cert_b, "Cap b");
    certify->add_option("--tau", cert_tau, "Indicator threshold tau");
    certify->add_option("--beta", cert_beta, "Leaky outer slope beta");
    certify->add_flag("--json", cert_json, "Print the certificate as JSON");
  }

};

PenaltyDescriptor descriptor_from(const std::string& kind, const std::string& lambda, const std::string& b,
                                  const std::string& tau, const std::string& beta) {
  PenaltyDescriptor d;
  d.kind = kind;
  if (!lambda.empty()) d.params["lambda"] = parse_number(lambda, "--lambda");
  if (!b.empty()) d.params["b"] = parse_number(b, "--b");
  if (!tau.empty()) d.params["tau"] = parse_number(tau, "--tau");
  if (!beta.empty()) d.params["beta"] = parse_number(beta, "--beta");
  return d;
}

int do_solve(App& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = a.solve_flags.resolve({"ppgd"}, err);
  cfg.validate();
  if (cfg.solvers.size() != 1) throw ModelError("solve runs exactly one solver; use benchmark for several");
  const SolverSpec& spec = cfg.solvers.front();
  const Problem problem = build_problem(cfg);
  SolverOptions opts;
  opts.s = spec.s;
  opts.w0 = spec.w0;
  opts.K = spec.K;
  opts.timing = cfg.timing;
  const Trace trace = run_solver(spec.name, problem, Vector::Zero(problem.dim()), opts);

  const bool write = a.solve->get_option("--output-dir")->count() > 0 || a.solve->get_option("--config")->count() > 0;
  if (write) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ModelError("cannot create output directory '" + cfg.output_dir + "'");
    std::ofstream csv(dir / (spec.name + ".csv"));
    write_trace_csv(trace, csv);
    std::ofstream js(dir / (spec.name + ".json"));
    js << trace_to_json(trace) << '\n';
    if (!csv || !js) throw ModelError("cannot write traces into '" + cfg.output_dir + "'");
  }

  out << "solver: " << spec.name << '\n';
  out << "iterations: " << trace.rows.size() - 1 << '\n';
  out << "step size: " << format_double(trace.s) << '\n';
  out << "final objective: " << format_double(trace.rows.back().F) << '\n';
  out << "stationarity residual: " << format_double(trace.final_residual) << '\n';
  out << "piece transitions: " << trace.rows.back().transitions << '\n';
  return 0;
}

int do_benchmark(App& a, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = a.bench_flags.resolve({"pgd", "apg", "ppgd"}, err);
  const Report report = run_experiment(cfg);
  out << std::left << std::setw(8) << "solver" << std::setw(26) << "final_objective" << std::setw(13) << "transitions"
      << "rate_slope\n";
  for (const auto& s : report.summaries) {
    out << std::setw(8) << s.name << std::setw(26) << format_double(s.final_objective) << std::setw(13)
        << s.transitions << (cfg.fit_rates ? format_double(s.rate_slope) : std::string("-")) << '\n';
  }
  out << "wrote " << report.summaries.size() << " traces and report.json to " << cfg.output_dir << '\n';
  return 0;
}

int do_prox_check(App& a, std::ostream& out) {
  const PiecewiseFn fn = a.pc_json.empty()
                             ? make_penalty(descriptor_from(a.pc_penalty, a.pc_lambda, a.pc_b, a.pc_tau, a.pc_beta))
                             : penalty_from_json(read_text(a.pc_json));
  const double s = parse_number(a.pc_s, "--s");
  const double x_min = parse_number(a.pc_xmin, "--x-min");
  const double x_max = parse_number(a.pc_xmax, "--x-max");
  const auto points = parse_count(a.pc_points, "--points");
  const double resolution = parse_number(a.pc_resolution, "--resolution");
  if (!(s > 0.0)) throw UsageError("--s must be positive");
  if (!(x_min <= x_max) || points < 1) throw UsageError("need --x-min <= --x-max and --points >= 1");

  std::vector<std::size_t> pieces;
  if (a.pc_piece.empty()) {
    for (std::size_t m = 0; m < fn.num_pieces(); ++m) pieces.push_back(m);
  } else {
    const auto m = parse_count(a.pc_piece, "--piece");
    if (m >= fn.num_pieces()) throw UsageError("--piece must be below " + std::to_string(fn.num_pieces()));
    pieces.push_back(m);
  }

  out << "piece,kernel,x,closed_form,oracle,gap\n";
  for (std::size_t m : pieces) {
    const SurrogateFn& fm = fn.surrogate(m);
    const double hw = oracle_halfwidth(fm, s);
    if (!std::isfinite(hw)) throw ModelError("piece " + std::to_string(m) + " has unbounded slopes; no oracle bracket");
    for (std::uint64_t i = 0; i < points; ++i) {
      const double x = points == 1 ? x_min : x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(points - 1);
      const double closed = prox_surrogate(fm, s, x);
      const double oracle = prox_oracle(fm, s, x, hw, resolution);
      const double gap = prox_objective(fm, s, x, closed) - prox_objective(fm, s, x, oracle);
      out << m << ',' << to_string(fm.kernel().kind) << ',' << format_double(x) << ',' << format_double(closed) << ','
          << format_double(oracle) << ',' << format_double(gap) << '\n';
    }
  }
  return 0;
}

int do_certify(App& a, std::ostream& out) {
  CertificateInputs in;
  if (!a.cert_penalty.empty()) {
    const PiecewiseFn fn = make_penalty(descriptor_from(a.cert_penalty, a.cert_lambda, a.cert_b, a.cert_tau, a.cert_beta));
    const auto& k = fn.constants();
    in.C = k.C;
    in.J = k.J;
    in.F0 = k.F0;
    in.s0 = k.s0;
    in.R0 = k.R0;
  }
  const auto given = [&](const char* name) { return a.cert_opts.at(name)->count() > 0; };
  const auto num = [&](const char* name) { return parse_number(a.cert.at(name), name); };
  if (!given("--L-g")) throw UsageError("certify needs --L-g");
  in.L_g = num("--L-g");
  if (given("--G")) in.G = num("--G");
  if (given("--F0")) in.F0 = num("--F0");
  if (given("--C")) in.C = num("--C");
  if (given("--J")) in.J = num("--J");
  if (given("--eps0")) in.eps0 = num("--eps0");
  if (given("--s0")) in.s0 = num("--s0");
  if (given("--R0")) in.R0 = num("--R0");
  if (given("--w0")) in.w0 = num("--w0");
  if (given("--d")) in.d = num("--d");
  if (given("--s")) in.s = num("--s");
  const StepSizeCertificate c = certify_step_size(in);
  if (a.cert_json) {
    out << certificate_to_json(c) << '\n';
  } else {
    print_certificate(c, out);
  }
  return 0;
}

}  // namespace

std::string help_text(const std::string& subcommand) {
  App a;
  if (subcommand.empty()) return a.app.help();
  return a.app.get_subcommand(subcommand)->help(a.app.get_name());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  App a;
  if (!args.empty() && !args.front().empty() && args.front()[0] != '-') {
    try {
      a.app.get_subcommand(args.front());
    } catch (const CLI::OptionNotFound&) {
      err << "error: unknown subcommand '" << args.front() << "'\n" << a.app.help();
      return 1;
    }
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    a.app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return a.app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return a.app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << a.app.help();
    return 1;
  }

  try {
    if (a.app.got_subcommand(a.solve)) return do_solve(a, out, err);
    if (a.app.got_subcommand(a.bench)) return do_benchmark(a, out, err);
    if (a.app.got_subcommand(a.prox_check)) return do_prox_check(a, out);
    if (a.app.got_subcommand(a.certify)) return do_certify(a, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << "error: no subcommand\n";
  return 1;
}

}  // namespace pwprox::cli
