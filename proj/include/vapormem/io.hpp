#pragma once

// CSV and key=value renderings. '\n' line endings, '.' decimal separator,
// shortest round-trip number formatting.

#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "engine.hpp"
#include "harness.hpp"
#include "text.hpp"

namespace vapormem::io {

using text::format_number;

inline void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "t_ns,kind,rail_mhz,out_energy,stored_after\n";
  for (const auto& ev : trace)
    os << format_number(ev.t) << ',' << to_string(ev.kind) << ',' << format_number(ev.f_rail) << ','
       << format_number(ev.out_energy) << ',' << format_number(ev.stored_after) << '\n';
}

inline void write_scan_csv(std::ostream& os, const harness::ScanResult& scan) {
  os << scan.axis_name;
  for (const auto& [name, values] : scan.series) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < scan.axis.size(); ++i) {
    os << format_number(scan.axis[i]);
    for (const auto& s : scan.series) os << ',' << format_number(s.second[i]);
    os << '\n';
  }
}

inline void write_waveform_csv(std::ostream& os, const Waveform& wf) {
  os << "t_ns,intensity\n";
  for (const auto& s : wf) os << format_number(s.t) << ',' << format_number(s.intensity) << '\n';
}

inline std::string fit_report(const FitResult& fr) {
  std::ostringstream os;
  os << "A0=" << format_number(fr.a0) << '\n'
     << "A0_err=" << format_number(fr.a0_err) << '\n'
     << "tau_us=" << format_number(fr.tau) << '\n'
     << "tau_err_us=" << format_number(fr.tau_err) << '\n'
     << "rss=" << format_number(fr.rss) << '\n';
  return os.str();
}

class CsvError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto c = line.find(',', start);
    out.push_back(text::trim(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start)));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}
}  // namespace detail

/// Reads (t, y) pairs from a CSV. The first column is t; y is the column
/// named `column`, or the second column when no name is given. A
/// non-numeric first row is treated as the header.
inline std::vector<harness::Point> read_points_csv(std::string_view source,
                                                   const std::optional<std::string>& column = std::nullopt) {
  const auto lines = text::split_lines(source);
  std::vector<harness::Point> pts;
  std::size_t y_col = 1;
  bool first = true;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const auto fields = detail::split_commas(lines[li]);
    if (first) {
      first = false;
      if (!text::parse_number(fields[0])) {
        if (column) {
          y_col = fields.size();
          for (std::size_t i = 0; i < fields.size(); ++i)
            if (fields[i] == *column) y_col = i;
          if (y_col == fields.size()) throw CsvError("no column named '" + *column + "'");
        }
        continue;
      }
      if (column) throw CsvError("column selection needs a header row");
    }
    if (fields.size() <= y_col)
      throw CsvError("line " + std::to_string(li + 1) + ": too few columns");
    auto t = text::parse_number(fields[0]);
    auto y = text::parse_number(fields[y_col]);
    if (!t || !y) throw CsvError("line " + std::to_string(li + 1) + ": not a number");
    pts.push_back({*t, *y});
  }
  return pts;
}

}  // namespace vapormem::io
