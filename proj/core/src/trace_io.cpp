#include "smc2/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "smc2/errors.hpp"

namespace smc2 {

namespace {

constexpr std::string_view kTraceHeader =
    "t,ess,n_x,resampled,pg_applied,pmmh_attempts,pmmh_accepts,sigma2_hat,log_evidence,elapsed_s,backfit_iters";

std::size_t parse_count(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("expected a nonnegative integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_flag(std::string_view s) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw InputError("expected 0 or 1, got '" + std::string(s) + "'");
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

double parse_number(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InputError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_schema_line(std::ostream& os, std::string_view schema) { os << "# schema: " << schema << '\n'; }

std::string read_schema_line(std::istream& is) {
  std::string line;
  constexpr std::string_view prefix = "# schema: ";
  if (!std::getline(is, line) || line.rfind(prefix, 0) != 0) throw InputError("missing '# schema:' header line");
  return line.substr(prefix.size());
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  write_schema_line(os, kTraceSchema);
  os << kTraceHeader << '\n';
  for (const TraceRow& r : rows) {
    os << r.t << ',' << format_number(r.ess) << ',' << r.n_x << ',' << (r.resampled ? 1 : 0) << ','
       << (r.pg_applied ? 1 : 0) << ',' << r.pmmh_attempts << ',' << r.pmmh_accepts << ','
       << format_number(r.sigma2_hat) << ',' << format_number(r.log_evidence) << ',' << format_number(r.elapsed_s)
       << ',' << r.backfit_iterations << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& is) {
  const std::string schema = read_schema_line(is);
  if (schema != kTraceSchema) throw InputError("unexpected trace schema '" + schema + "'");
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) != split_csv_line(kTraceHeader)) {
    throw InputError("trace header does not match the expected columns");
  }
  std::vector<TraceRow> rows;
  std::size_t line_no = 2;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) throw InputError("trace line " + std::to_string(line_no) + ": expected 11 fields");
    try {
      TraceRow r;
      r.t = parse_count(f[0]);
      r.ess = parse_number(f[1]);
      r.n_x = parse_count(f[2]);
      r.resampled = parse_flag(f[3]);
      r.pg_applied = parse_flag(f[4]);
      r.pmmh_attempts = parse_count(f[5]);
      r.pmmh_accepts = parse_count(f[6]);
      r.sigma2_hat = parse_number(f[7]);
      r.log_evidence = parse_number(f[8]);
      r.elapsed_s = parse_number(f[9]);
      r.backfit_iterations = parse_count(f[10]);
      rows.push_back(r);
    } catch (const InputError& e) {
      throw InputError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace smc2
