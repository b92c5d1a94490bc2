#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smc2/smc2.hpp"

namespace smc2 {

inline constexpr std::string_view kTraceSchema = "smc2-trace/1";
inline constexpr std::string_view kFigureSchema = "smc2-figure/1";
inline constexpr std::string_view kPosteriorSchema = "smc2-posterior/1";
inline constexpr std::string_view kSummarySchema = "smc2-summary/1";
inline constexpr std::string_view kManifestSchema = "smc2-manifest/1";
inline constexpr std::string_view kDataSchema = "smc2-data/1";

/// Shortest text that parses back to exactly `v`; "nan", "inf", "-inf" for
/// non-finite values.
std::string format_number(double v);
/// Inverse of format_number. Throws InputError on anything else.
double parse_number(std::string_view text);

/// First line of every CSV the library writes: "# schema: <schema>".
void write_schema_line(std::ostream& os, std::string_view schema);
/// Consumes the schema line and returns the schema string; InputError if absent.
std::string read_schema_line(std::istream& is);

/// Columns: t, ess, n_x, resampled, pg_applied, pmmh_attempts, pmmh_accepts,
/// sigma2_hat, log_evidence, elapsed_s, backfit_iters.
void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);
/// Reads back the columns written by write_trace_csv (other TraceRow fields
/// are left at their defaults).
std::vector<TraceRow> read_trace_csv(std::istream& is);

/// Splits one CSV line on commas (no quoting is ever written).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace smc2
