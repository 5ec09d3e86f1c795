#include "pwprox/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pwprox/io.hpp"

namespace pwprox {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ModelError("unknown key '" + key + "' in " + where);
  }
}

json number_or_text(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

void ExperimentConfig::validate() const {
  if (solvers.empty()) throw ModelError("config needs at least one solver");
  for (const auto& s : solvers) {
    if (s.name != "ppgd" && s.name != "pgd" && s.name != "apg") throw ModelError("unknown solver '" + s.name + "'");
    if (s.K < 1) throw ModelError("solver '" + s.name + "' needs K >= 1");
    if (!(s.w0 > 0.0 && s.w0 <= 1.0)) throw ModelError("solver '" + s.name + "' needs w0 in (0, 1]");
    if (!std::isfinite(s.s)) throw ModelError("solver '" + s.name + "' has a non-finite step size");
  }
  if (!(rate_tail_fraction > 0.0 && rate_tail_fraction <= 1.0)) {
    throw ModelError("rate_tail_fraction must lie in (0, 1]");
  }
  if (output_dir.empty()) throw ModelError("output_dir must not be empty");
  make_penalty(penalty);
  if (data.kind == "csv") {
    if (!fs::exists(data.path)) throw ModelError("data file '" + data.path + "' does not exist");
  } else if (data.kind == "idx") {
    if (!fs::exists(data.images)) throw ModelError("image file '" + data.images + "' does not exist");
    if (!fs::exists(data.labels)) throw ModelError("label file '" + data.labels + "' does not exist");
  } else if (data.kind == "synth") {
    if (data.n < 1 || data.d < 1) throw ModelError("synthetic data needs n, d >= 1");
  } else {
    throw ModelError("unknown data kind '" + data.kind + "'");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("invalid config JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    reject_unknown(j, {"loss", "penalty", "data", "solvers", "output_dir", "timing", "fit_rates", "rate_tail_fraction"},
                   "config");
    if (j.contains("loss")) cfg.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    if (j.contains("penalty")) {
      const auto& p = j.at("penalty");
      reject_unknown(p, {"kind", "params"}, "penalty");
      cfg.penalty.kind = p.at("kind").get<std::string>();
      cfg.penalty.params.clear();
      if (p.contains("params")) {
        for (const auto& [k, v] : p.at("params").items()) {
          if (v.is_string() && (v == "inf" || v == "+inf")) {
            cfg.penalty.params[k] = kInf;
          } else {
            cfg.penalty.params[k] = v.get<double>();
          }
        }
      }
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      reject_unknown(d,
                     {"kind", "path", "paths", "header", "images", "labels", "class_a", "class_b", "per_class", "n",
                      "d", "sparsity", "noise", "feature_scale", "seed"},
                     "data");
      DataSpec& s = cfg.data;
      s.kind = d.value("kind", s.kind);
      s.path = d.value("path", s.path);
      s.images = d.value("images", s.images);
      s.labels = d.value("labels", s.labels);
      if (d.contains("paths")) {
        const auto paths = d.at("paths").get<std::vector<std::string>>();
        if (s.kind == "idx" && paths.size() == 2) {
          s.images = paths[0];
          s.labels = paths[1];
        } else if (s.kind == "csv" && paths.size() == 1) {
          s.path = paths[0];
        } else {
          throw ModelError("data.paths must hold [images, labels] for idx or [path] for csv");
        }
      }
      s.header = d.value("header", s.header);
      s.class_a = d.value("class_a", s.class_a);
      s.class_b = d.value("class_b", s.class_b);
      s.per_class = d.value("per_class", s.per_class);
      s.n = d.value("n", s.n);
      s.d = d.value("d", s.d);
      s.sparsity = d.value("sparsity", s.sparsity);
      s.noise = d.value("noise", s.noise);
      s.feature_scale = d.value("feature_scale", s.feature_scale);
      s.seed = d.value("seed", s.seed);
    }
    if (j.contains("solvers")) {
      for (const auto& s : j.at("solvers")) {
        reject_unknown(s, {"name", "s", "w0", "K"}, "solver");
        SolverSpec spec;
        spec.name = s.at("name").get<std::string>();
        spec.s = s.value("s", spec.s);
        spec.w0 = s.value("w0", spec.w0);
        spec.K = s.value("K", spec.K);
        cfg.solvers.push_back(spec);
      }
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.timing = j.value("timing", cfg.timing);
    cfg.fit_rates = j.value("fit_rates", cfg.fit_rates);
    cfg.rate_tail_fraction = j.value("rate_tail_fraction", cfg.rate_tail_fraction);
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["loss"] = to_string(cfg.loss);
  j["penalty"] = {{"kind", cfg.penalty.kind}, {"params", json::object()}};
  for (const auto& [k, v] : cfg.penalty.params) j["penalty"]["params"][k] = number_or_text(v);
  const DataSpec& d = cfg.data;
  json data{{"kind", d.kind}};
  if (d.kind == "csv") {
    data["path"] = d.path;
    data["header"] = d.header;
  } else if (d.kind == "idx") {
    data["images"] = d.images;
    data["labels"] = d.labels;
    data["class_a"] = d.class_a;
    data["class_b"] = d.class_b;
    data["per_class"] = d.per_class;
    data["seed"] = d.seed;
  } else {
    data["n"] = d.n;
    data["d"] = d.d;
    data["sparsity"] = d.sparsity;
    data["noise"] = d.noise;
    data["feature_scale"] = d.feature_scale;
    data["seed"] = d.seed;
  }
  j["data"] = data;
  j["solvers"] = json::array();
  for (const auto& s : cfg.solvers) j["solvers"].push_back({{"name", s.name}, {"s", s.s}, {"w0", s.w0}, {"K", s.K}});
  j["output_dir"] = cfg.output_dir;
  j["timing"] = cfg.timing;
  j["fit_rates"] = cfg.fit_rates;
  j["rate_tail_fraction"] = cfg.rate_tail_fraction;
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg, int indent) { return config_json(cfg).dump(indent); }

Dataset load_data(const DataSpec& spec, LossKind loss) {
  if (spec.kind == "csv") return load_csv(spec.path, spec.header);
  if (spec.kind == "idx") {
    Dataset raw = load_idx(spec.images, spec.labels);
    return subsample_binary(raw, spec.class_a, spec.class_b, spec.per_class, spec.seed);
  }
  if (spec.kind == "synth") {
    SynthSpec s;
    s.kind = loss;
    s.n = spec.n;
    s.d = spec.d;
    s.sparsity = spec.sparsity;
    s.noise = spec.noise;
    s.feature_scale = spec.feature_scale;
    s.seed = spec.seed;
    return synth(s).data;
  }
  throw ModelError("unknown data kind '" + spec.kind + "'");
}

std::string Report::to_json(int indent) const {
  json j;
  j["config"] = config_json(config);
  j["solvers"] = json::array();
  for (const auto& s : summaries) {
    json e{{"name", s.name},
           {"s", s.s},
           {"w0", s.w0},
           {"K", s.K},
           {"final_objective", number_or_text(s.final_objective)},
           {"final_residual", number_or_text(s.final_residual)},
           {"transitions", s.transitions},
           {"last_transition", s.last_transition},
           {"csv", s.csv}};
    if (config.fit_rates) {
      e["rate_slope"] = number_or_text(s.rate_slope);
      e["F_ref"] = number_or_text(s.F_ref);
    }
    if (config.timing) e["wall_ms"] = s.wall_ms;
    j["solvers"].push_back(e);
  }
  return j.dump(indent);
}

unsigned harness_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PIECEWISE_PROX_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = static_cast<unsigned>(v);
  }
  return n;
}

Report run_experiment(const ExperimentConfig& config) {
  config.validate();
  const fs::path out_dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw ModelError("cannot create output directory '" + config.output_dir + "'");

  auto penalty = std::make_shared<const PiecewiseFn>(make_penalty(config.penalty));
  const Problem problem(SmoothLoss(config.loss, load_data(config.data, config.loss)), penalty);
  const Vector x0 = Vector::Zero(problem.dim());

  // Main runs first, then the optional 5x-longer reference runs.
  struct Job {
    std::size_t solver;
    bool reference;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < config.solvers.size(); ++i) jobs.push_back({i, false});
  if (config.fit_rates) {
    for (std::size_t i = 0; i < config.solvers.size(); ++i) jobs.push_back({i, true});
  }
  std::vector<Trace> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const SolverSpec& spec = config.solvers[jobs[j].solver];
      SolverOptions opts;
      opts.s = spec.s;
      opts.w0 = spec.w0;
      opts.K = jobs[j].reference ? 5 * spec.K : spec.K;
      opts.timing = config.timing;
      try {
        results[j] = run_solver(spec.name, problem, x0, opts);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::min<unsigned>(harness_threads(), static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Report report;
  report.config = config;
  std::set<std::string> used;
  for (std::size_t i = 0; i < config.solvers.size(); ++i) {
    const SolverSpec& spec = config.solvers[i];
    Trace& trace = results[i];
    std::string file = spec.name + ".csv";
    if (used.count(file)) file = spec.name + "_" + std::to_string(i) + ".csv";
    used.insert(file);
    {
      std::ofstream csv(out_dir / file);
      if (!csv) throw ModelError("cannot write '" + (out_dir / file).string() + "'");
      write_trace_csv(trace, csv);
      if (!csv) throw ModelError("write failed for '" + (out_dir / file).string() + "'");
    }

    SolverSummary s;
    s.name = spec.name;
    s.s = trace.s;
    s.w0 = spec.w0;
    s.K = spec.K;
    s.final_objective = trace.rows.back().F;
    s.final_residual = trace.final_residual;
    s.transitions = trace.rows.back().transitions;
    s.last_transition = trace.last_transition();
    s.wall_ms = trace.rows.back().wall_ms;
    s.csv = file;
    if (config.fit_rates) {
      const Trace& ref = results[config.solvers.size() + i];
      double fmin = kInf;
      for (const auto& r : ref.rows) fmin = std::min(fmin, r.F);
      s.F_ref = fmin - 1e-12;
      s.rate_slope = fit_rate(trace, config.rate_tail_fraction, s.F_ref);
    }
    report.summaries.push_back(s);
    report.traces.push_back(std::move(trace));
  }

  std::ofstream rep(out_dir / "report.json");
  if (!rep) throw ModelError("cannot write report.json in '" + config.output_dir + "'");
  rep << report.to_json() << '\n';
  return report;
}

double fit_rate(const Trace& trace, double tail_fraction, double F_ref) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ModelError("fit_rate: tail_fraction must lie in (0, 1]");
  const std::size_t n = trace.rows.size();
  const auto start = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * static_cast<double>(n))));
  const double floor_gap = 1e-11 * std::max(1.0, std::abs(F_ref));
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = start; k < n; ++k) {
    const double gap = trace.rows[k].F - F_ref;
    if (!(gap > floor_gap)) continue;
    lx.push_back(std::log(static_cast<double>(trace.rows[k].k)));
    ly.push_back(std::log(gap));
  }
  if (lx.size() < 20) return -kInf;
  const double m = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) return -kInf;
  return sxy / sxx;
}

double fit_rate(const Trace& trace, double tail_fraction) {
  double fmin = kInf;
  for (const auto& r : trace.rows) fmin = std::min(fmin, r.F);
  return fit_rate(trace, tail_fraction, fmin - 1e-12);
}

}  // namespace pwprox
