#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pbitsim/metrics.hpp"
#include "pbitsim/pbit_device.hpp"
#include "pbitsim/pcircuit.hpp"
#include "pbitsim/smtj.hpp"
#include "pbitsim/trace_analysis.hpp"

namespace pbitsim::io {

/// Shortest round-trip decimal representation (locale independent).
[[nodiscard]] std::string format_double(double v);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// "# pbitsim <version> seed=<seed> config_hash=<16 hex digits>" (no newline).
[[nodiscard]] std::string metadata_line(std::uint64_t seed, std::string_view canonical_config);

// Every CSV writer emits `header` (when non-empty) as its first line, then
// the column header, then rows. Readers skip lines starting with '#'.

/// `time_s,resistance_ohm[,state]`, state in {P, AP} when labels are present.
void write_trace_csv(std::ostream& os, const smtj::TelegraphTrace& trace,
                     const std::string& header = {});

/// Reads either `time_s,resistance_ohm[,state]` or an oscilloscope export
/// `time_s,voltage_V`; voltages are divided by `bias_current_a` (required
/// > 0 for that format). Samples must be uniformly spaced.
/// Throws std::invalid_argument on malformed input.
[[nodiscard]] smtj::TelegraphTrace read_trace_csv(std::istream& is, double bias_current_a = 0.0);

/// Reads `bias_current_A` from a JSON sidecar object.
[[nodiscard]] double read_bias_current(std::istream& is);

void write_sweep_csv(std::ostream& os, const analysis::FieldSweep& sweep,
                     const std::string& header = {});

void write_transfer_samples_csv(std::ostream& os, const device::TransferCurve& curve,
                                const std::string& header = {});
void write_transfer_means_csv(std::ostream& os, const device::TransferCurve& curve,
                              const std::string& header = {});

void write_histogram_csv(std::ostream& os, const circuit::StateHistogram& hist,
                         const std::string& header = {});
/// `word,probability` for an exact distribution.
void write_distribution_csv(std::ostream& os, const circuit::Distribution& dist, std::size_t n,
                            const std::string& header = {});

void write_perf_points_csv(std::ostream& os, const std::vector<metrics::PerfPoint>& points,
                           const std::string& header = {});

// JSON round trips. Readers accept a subset of keys (missing keys keep their
// defaults, or the values in `base`) and reject unknown keys or wrong types
// with std::invalid_argument. Readers do not call validate().

[[nodiscard]] std::string to_json(const smtj::SmtjParams& p);
[[nodiscard]] smtj::SmtjParams smtj_params_from_json(std::string_view text,
                                                     const smtj::SmtjParams& base = {});

[[nodiscard]] std::string to_json(const device::PbitParams& p);
[[nodiscard]] device::PbitParams pbit_params_from_json(std::string_view text,
                                                       const device::PbitParams& base = {});

[[nodiscard]] std::string to_json(const circuit::PCircuit& c);
[[nodiscard]] circuit::PCircuit pcircuit_from_json(std::string_view text);

}  // namespace pbitsim::io
