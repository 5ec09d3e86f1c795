#pragma once

#include <iosfwd>
#include <string>

#include "pwprox/certificate.hpp"
#include "pwprox/piecewise.hpp"
#include "pwprox/solvers.hpp"

namespace pwprox {

/// Built-in penalties serialise as {"kind", "params"}; anything else as
/// {"pieces": [{left, right, eval}], "endpoints": [tag, ...]} with "-inf" and
/// "inf" strings for unbounded ends. Custom evaluators cannot be serialised.
std::string penalty_to_json(const PiecewiseFn& fn, int indent = 2);
PiecewiseFn penalty_from_json(const std::string& text);

/// CSV with columns k, F, F_surrogate_z, n_transitions_so_far, nce_flag,
/// wall_ms, transition, step_length, grad_norm.
void write_trace_csv(const Trace& trace, std::ostream& out);
std::string trace_to_json(const Trace& trace, int indent = 2);

std::string certificate_to_json(const StepSizeCertificate& cert, int indent = 2);
/// Human-readable breakdown, one term per line.
void print_certificate(const StepSizeCertificate& cert, std::ostream& out);

/// Shortest decimal text that reads back to the same double ("nan", "inf", "-inf" otherwise).
std::string format_double(double v);

}  // namespace pwprox
