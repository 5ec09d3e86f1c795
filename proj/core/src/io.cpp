#include "pwprox/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace pwprox {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

json bound_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double bound_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ModelError("piece bound must be a number, \"inf\" or \"-inf\"");
}

json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

json eval_to_json(const PieceEvaluator& e) {
  switch (e.form()) {
    case PieceEvaluator::Form::affine: return {{"type", "affine"}, {"intercept", e.intercept()}, {"slope", e.slope()}};
    case PieceEvaluator::Form::abs:
      return {{"type", "abs"}, {"scale", e.scale()}, {"center", e.center()}, {"offset", e.offset()}};
    case PieceEvaluator::Form::custom: break;
  }
  throw ModelError("custom piece evaluators cannot be serialised");
}

PieceEvaluator eval_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "affine") return PieceEvaluator::affine(j.value("intercept", 0.0), j.value("slope", 0.0));
  if (type == "constant") return PieceEvaluator::constant(j.at("value").get<double>());
  if (type == "abs") return PieceEvaluator::abs(j.at("scale").get<double>(), j.value("center", 0.0), j.value("offset", 0.0));
  throw ModelError("unknown piece evaluator type '" + type + "'");
}

}  // namespace

std::string penalty_to_json(const PiecewiseFn& fn, int indent) {
  json j;
  if (fn.descriptor()) {
    j["kind"] = fn.descriptor()->kind;
    j["params"] = json::object();
    for (const auto& [k, v] : fn.descriptor()->params) j["params"][k] = bound_to_json(v);
    return j.dump(indent);
  }
  j["pieces"] = json::array();
  for (const Piece& p : fn.pieces()) {
    j["pieces"].push_back({{"left", bound_to_json(p.left)}, {"right", bound_to_json(p.right)}, {"eval", eval_to_json(p.eval)}});
  }
  j["endpoints"] = json::array();
  for (Continuity c : fn.endpoint_flags()) j["endpoints"].push_back(to_string(c));
  return j.dump(indent);
}

PiecewiseFn penalty_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("invalid penalty JSON: ") + e.what());
  }
  try {
    if (j.contains("kind")) {
      PenaltyDescriptor d;
      d.kind = j.at("kind").get<std::string>();
      if (j.contains("params")) {
        for (const auto& [k, v] : j.at("params").items()) d.params[k] = bound_from_json(v);
      }
      return make_penalty(d);
    }
    std::vector<PieceSpec> specs;
    for (const auto& p : j.at("pieces")) {
      specs.push_back({bound_from_json(p.at("left")), bound_from_json(p.at("right")), eval_from_json(p.at("eval"))});
    }
    std::vector<Continuity> flags;
    if (j.contains("endpoints")) {
      for (const auto& e : j.at("endpoints")) flags.push_back(continuity_from_string(e.get<std::string>()));
    }
    return PiecewiseFn::build(std::move(specs), std::move(flags));
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed penalty JSON: ") + e.what());
  }
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "k,F,F_surrogate_z,n_transitions_so_far,nce_flag,wall_ms,transition,step_length,grad_norm\n";
  for (const auto& r : trace.rows) {
    out << r.k << ',' << format_double(r.F) << ',' << format_double(r.F_surrogate_z) << ',' << r.transitions << ','
        << to_string(r.nce) << ',' << format_double(r.wall_ms) << ',' << (r.transition ? 1 : 0) << ','
        << format_double(r.step_length) << ',' << format_double(r.grad_norm) << '\n';
  }
}

std::string trace_to_json(const Trace& trace, int indent) {
  json j;
  j["solver"] = trace.solver;
  j["s"] = trace.s;
  j["w0"] = trace.w0;
  j["iterations"] = trace.rows.empty() ? 0 : trace.rows.size() - 1;
  j["final_objective"] = trace.rows.empty() ? json(nullptr) : number_or_null(trace.rows.back().F);
  j["final_residual"] = number_or_null(trace.final_residual);
  j["stopped_early"] = trace.stopped_early;
  j["transitions"] = trace.rows.empty() ? 0 : trace.rows.back().transitions;
  j["last_transition"] = trace.last_transition();
  j["rows"] = json::array();
  for (const auto& r : trace.rows) {
    j["rows"].push_back({{"k", r.k},
                         {"F", number_or_null(r.F)},
                         {"F_surrogate_z", number_or_null(r.F_surrogate_z)},
                         {"n_transitions_so_far", r.transitions},
                         {"transition", r.transition},
                         {"nce", to_string(r.nce)},
                         {"wall_ms", number_or_null(r.wall_ms)},
                         {"step_length", number_or_null(r.step_length)},
                         {"grad_norm", number_or_null(r.grad_norm)}});
  }
  j["x_final"] = json::array();
  for (Eigen::Index i = 0; i < trace.x_final.size(); ++i) j["x_final"].push_back(trace.x_final[i]);
  return j.dump(indent);
}

std::string certificate_to_json(const StepSizeCertificate& c, int indent) {
  const auto& in = c.inputs;
  json j;
  j["inputs"] = {{"L_g", in.L_g},         {"G", in.G},
                 {"F0", in.F0},           {"C", number_or_null(in.C)},
                 {"J", number_or_null(in.J)}, {"eps0", in.eps0 ? json(*in.eps0) : json(nullptr)},
                 {"s0", number_or_null(in.s0)}, {"R0", number_or_null(in.R0)},
                 {"w0", in.w0},           {"d", in.d}};
  j["A"] = number_or_null(c.A);
  j["s1_terms"] = json::object();
  for (const auto& t : c.s1_terms) j["s1_terms"][t.name] = number_or_null(t.value);
  j["s1"] = number_or_null(c.s1);
  j["cap_terms"] = json::object();
  for (const auto& t : c.cap_terms) j["cap_terms"][t.name] = number_or_null(t.value);
  j["s_max"] = number_or_null(c.s_max);
  j["binding_term"] = c.binding_term;
  j["s"] = number_or_null(c.s);
  j["kappa1"] = number_or_null(c.kappas.kappa1);
  j["kappa2"] = number_or_null(c.kappas.kappa2);
  j["kappa0"] = number_or_null(c.kappas.kappa0);
  j["kappa"] = number_or_null(c.kappas.kappa);
  return j.dump(indent);
}

void print_certificate(const StepSizeCertificate& c, std::ostream& out) {
  const auto& in = c.inputs;
  out << "inputs: L_g=" << format_double(in.L_g) << " G=" << format_double(in.G) << " F0=" << format_double(in.F0)
      << " C=" << format_double(in.C) << " J=" << format_double(in.J)
      << " eps0=" << (in.eps0 ? format_double(*in.eps0) : std::string("unset")) << " s0=" << format_double(in.s0)
      << " R0=" << format_double(in.R0) << " w0=" << format_double(in.w0) << " d=" << format_double(in.d) << '\n';
  out << "A = " << format_double(c.A) << '\n';
  for (const auto& t : c.s1_terms) out << "s1 term " << t.name << " = " << format_double(t.value) << '\n';
  out << "s1 = " << format_double(c.s1) << '\n';
  for (std::size_t j = 1; j < c.cap_terms.size(); ++j) {
    out << "cap " << c.cap_terms[j].name << " = " << format_double(c.cap_terms[j].value) << '\n';
  }
  out << "s_max = " << format_double(c.s_max) << '\n';
  out << "binding term: " << c.binding_term << '\n';
  out << "at s = " << format_double(c.s) << ": kappa1=" << format_double(c.kappas.kappa1)
      << " kappa2=" << format_double(c.kappas.kappa2) << " kappa0=" << format_double(c.kappas.kappa0)
      << " kappa=" << format_double(c.kappas.kappa) << '\n';
  if (!c.feasible()) out << "no positive step size satisfies the bound\n";
}

}  // namespace pwprox
