#pragma once

// Experiment-sequence file format.
//
//   # comment
//   SEQUENCE random_access
//   RAILS 170MHz 190MHz 210MHz 230MHz
//   AT 0us WRITE 230MHz
//   AT 400ns WRITE 210MHz 0.5     # trailing number is pulse energy
//   AT 0.6us READ 210MHz
//   AT 1us PUMP 170MHz
//
// Keywords and units are case-sensitive. Numbers may be separated from
// their unit ("0.4 us") or fused ("0.4us"). Times are absolute and held in
// ns; 1 us = 1000 ns exactly.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "text.hpp"

namespace vapormem::seqlang {

// Minimum rail separation for which a neighbor read leaves no visible trace.
inline constexpr double kCrosstalkFreeSeparationMHz = 20.0;

enum class Severity { Error, Warning };

inline const char* to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

struct Diagnostic {
  std::string code;  // E001 spacing, E002 band, E003 order, E004 undeclared, W001 separation
  Severity severity = Severity::Error;
  int line = 0;
  std::string message;

  bool blocking() const { return severity == Severity::Error; }
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.blocking(); });
}

// "<severity> <code> line <n>: <message>"
inline std::string render(const Diagnostic& d) {
  return std::string(to_string(d.severity)) + " " + d.code + " line " + std::to_string(d.line) +
         ": " + d.message;
}

class ParseError : public Error {
 public:
  ParseError(int line, int column, std::string message, std::string code = {})
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line), column_(column), code_(std::move(code)) {}

  int line() const { return line_; }
  int column() const { return column_; }
  // Diagnostic code when the failure maps onto one (E003, E004), else empty.
  const std::string& code() const { return code_; }

 private:
  int line_;
  int column_;
  std::string code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diags)
      : Error(summary(diags)), diags_(std::move(diags)) {}

  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  static std::string summary(const std::vector<Diagnostic>& diags) {
    std::string s = "sequence failed validation";
    for (const auto& d : diags)
      if (d.blocking()) s += "\n  " + render(d);
    return s;
  }
  std::vector<Diagnostic> diags_;
};

// Source line of every directive. Sequences built in code get the line
// numbers their canonical rendering would have.
struct SourceMap {
  int header_line = 1;
  int rails_line = 0;  // 0 when no RAILS directive
  std::vector<int> op_lines;

  static SourceMap canonical(const Sequence& seq) {
    SourceMap m;
    int line = 2;
    if (!seq.rails().empty()) m.rails_line = line++;
    for (std::size_t i = 0; i < seq.ops().size(); ++i) m.op_lines.push_back(line++);
    return m;
  }
};

struct Document {
  Sequence sequence;
  SourceMap lines;
};

namespace detail {

struct RawDocument {
  std::string name;
  std::vector<double> rails;
  std::vector<Operation> ops;
  std::vector<bool> declared;  // per op: rail declared before use
  SourceMap lines;
};

inline std::optional<double> scaled_with_unit(std::string_view tok, std::string_view unit, int shift) {
  if (tok.size() <= unit.size() || tok.substr(tok.size() - unit.size()) != unit) return std::nullopt;
  return text::parse_scaled(tok.substr(0, tok.size() - unit.size()), shift);
}

// Reads "<number><unit>" or "<number> <unit>" at toks[i]; advances i.
inline double read_quantity(const std::vector<text::Token>& toks, std::size_t& i, int line,
                            const std::vector<std::pair<std::string_view, int>>& units,
                            const char* what) {
  if (i >= toks.size()) {
    const int col = toks.empty() ? 1 : toks.back().column + static_cast<int>(toks.back().text.size());
    throw ParseError(line, col, std::string("expected ") + what);
  }
  const auto& tok = toks[i];
  for (const auto& [unit, shift] : units) {
    if (auto v = scaled_with_unit(tok.text, unit, shift)) {
      ++i;
      return *v;
    }
  }
  if (text::parse_number(tok.text) && i + 1 < toks.size()) {
    for (const auto& [unit, shift] : units) {
      if (toks[i + 1].text == unit) {
        auto v = text::parse_scaled(tok.text, shift);
        i += 2;
        return *v;
      }
    }
    throw ParseError(line, toks[i + 1].column,
                     "unknown unit '" + std::string(toks[i + 1].text) + "' for " + what);
  }
  throw ParseError(line, tok.column, std::string("expected ") + what + ", got '" +
                                         std::string(tok.text) + "'");
}

inline double read_freq(const std::vector<text::Token>& toks, std::size_t& i, int line) {
  return read_quantity(toks, i, line, {{"MHz", 0}}, "frequency in MHz");
}

inline double read_time(const std::vector<text::Token>& toks, std::size_t& i, int line) {
  return read_quantity(toks, i, line, {{"ns", 0}, {"us", 3}}, "time in ns or us");
}

// Syntax-level parse. Ordering and rail declarations are recorded, not
// enforced, so the linter can report them as diagnostics.
inline RawDocument parse_raw(std::string_view source) {
  RawDocument doc;
  bool have_header = false;
  bool have_rails = false;
  const auto lines = text::split_lines(source);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int line = static_cast<int>(li) + 1;
    const auto toks = text::tokenize(lines[li]);
    if (toks.empty()) continue;
    const auto kw = toks[0].text;
    if (!have_header) {
      if (kw != "SEQUENCE") throw ParseError(line, toks[0].column, "missing SEQUENCE header");
      if (toks.size() != 2) throw ParseError(line, toks[0].column, "SEQUENCE takes exactly one name");
      doc.name = std::string(toks[1].text);
      doc.lines.header_line = line;
      have_header = true;
      continue;
    }
    if (kw == "SEQUENCE") throw ParseError(line, toks[0].column, "duplicate SEQUENCE header");
    if (kw == "RAILS") {
      if (have_rails) throw ParseError(line, toks[0].column, "duplicate RAILS directive");
      if (toks.size() < 2) throw ParseError(line, toks[0].column, "RAILS needs at least one frequency");
      std::size_t i = 1;
      while (i < toks.size()) {
        const int col = toks[i].column;
        const double f = read_freq(toks, i, line);
        if (std::find(doc.rails.begin(), doc.rails.end(), f) != doc.rails.end())
          throw ParseError(line, col, "rail declared twice");
        doc.rails.push_back(f);
      }
      have_rails = true;
      doc.lines.rails_line = line;
      continue;
    }
    if (kw == "AT") {
      std::size_t i = 1;
      Operation op;
      op.t = read_time(toks, i, line);
      if (i >= toks.size()) throw ParseError(line, toks.back().column, "expected WRITE, READ or PUMP");
      const auto verb = toks[i].text;
      if (verb == "WRITE") op.kind = OpKind::Write;
      else if (verb == "READ") op.kind = OpKind::Read;
      else if (verb == "PUMP") op.kind = OpKind::Pump;
      else throw ParseError(line, toks[i].column, "unknown operation '" + std::string(verb) + "'");
      ++i;
      op.f_rail = read_freq(toks, i, line);
      if (i < toks.size()) {
        if (op.kind != OpKind::Write)
          throw ParseError(line, toks[i].column, "only WRITE takes a pulse energy");
        auto e = text::parse_number(toks[i].text);
        if (!e) throw ParseError(line, toks[i].column, "expected pulse energy");
        if (!(*e > 0.0)) throw ParseError(line, toks[i].column, "pulse energy must be > 0");
        op.energy = *e;
        ++i;
      }
      if (i < toks.size()) throw ParseError(line, toks[i].column, "unexpected token");
      if (!(op.t >= 0.0)) throw ParseError(line, toks[1].column, "time must be >= 0");
      doc.declared.push_back(std::find(doc.rails.begin(), doc.rails.end(), op.f_rail) != doc.rails.end());
      doc.ops.push_back(op);
      doc.lines.op_lines.push_back(line);
      continue;
    }
    throw ParseError(line, toks[0].column, "unknown directive '" + std::string(kw) + "'");
  }
  if (!have_header) throw ParseError(1, 1, "missing SEQUENCE header");
  return doc;
}

inline std::vector<Diagnostic> check(const std::vector<double>& rails,
                                     const std::vector<Operation>& ops,
                                     const std::vector<bool>& declared, const SourceMap& lines,
                                     const PhysicsParams& p) {
  std::vector<Diagnostic> out;
  auto op_line = [&](std::size_t i) {
    return i < lines.op_lines.size() ? lines.op_lines[i] : 0;
  };
  for (double f : rails) {
    if (!p.in_band(f))
      out.push_back({"E002", Severity::Error, lines.rails_line,
                     "rail " + text::format_number(f) + " MHz outside AOD band [" +
                         text::format_number(p.band_min()) + ", " +
                         text::format_number(p.band_max()) + "] MHz"});
  }
  for (std::size_t i = 0; i < rails.size(); ++i)
    for (std::size_t j = i + 1; j < rails.size(); ++j)
      if (std::abs(rails[i] - rails[j]) < kCrosstalkFreeSeparationMHz)
        out.push_back({"W001", Severity::Warning, lines.rails_line,
                       "rails " + text::format_number(rails[i]) + " and " +
                           text::format_number(rails[j]) + " MHz are closer than " +
                           text::format_number(kCrosstalkFreeSeparationMHz) +
                           " MHz; neighbor operations will disturb stored pulses"});
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i < declared.size() && !declared[i])
      out.push_back({"E004", Severity::Error, op_line(i),
                     "operation on undeclared rail " + text::format_number(ops[i].f_rail) + " MHz"});
    if (i == 0) continue;
    const double gap = ops[i].t - ops[i - 1].t;
    if (!(gap > 0.0)) {
      out.push_back({"E003", Severity::Error, op_line(i),
                     "time " + text::format_number(ops[i].t) + " ns does not follow " +
                         text::format_number(ops[i - 1].t) + " ns"});
    } else if (gap < p.t_switch) {
      out.push_back({"E001", Severity::Error, op_line(i),
                     "spacing " + text::format_number(gap) + " ns below AOD switching time " +
                         text::format_number(p.t_switch) + " ns"});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  return out;
}

}  // namespace detail

/// Parses a sequence file and records source lines. Ops on rails not yet
/// declared (E004) and non-increasing times (E003) are parse errors here.
inline Document parse_document(std::string_view source) {
  auto raw = detail::parse_raw(source);
  for (std::size_t i = 0; i < raw.ops.size(); ++i) {
    if (!raw.declared[i])
      throw ParseError(raw.lines.op_lines[i], 1,
                       "operation on undeclared rail " + text::format_number(raw.ops[i].f_rail) + " MHz",
                       "E004");
    if (i > 0 && !(raw.ops[i].t > raw.ops[i - 1].t))
      throw ParseError(raw.lines.op_lines[i], 1, "operation times must be strictly increasing", "E003");
  }
  return {Sequence(std::move(raw.name), std::move(raw.rails), std::move(raw.ops)), std::move(raw.lines)};
}

inline Sequence parse(std::string_view source) { return parse_document(source).sequence; }

inline std::string format(const Sequence& seq) {
  std::ostringstream os;
  os << "SEQUENCE " << seq.name() << "\n";
  if (!seq.rails().empty()) {
    os << "RAILS";
    for (double f : seq.rails()) os << " " << text::format_number(f) << "MHz";
    os << "\n";
  }
  for (const auto& op : seq.ops()) {
    os << "AT " << text::format_number(op.t) << "ns " << to_string(op.kind) << " "
       << text::format_number(op.f_rail) << "MHz";
    if (op.kind == OpKind::Write && op.energy != 1.0) os << " " << text::format_number(op.energy);
    os << "\n";
  }
  return os.str();
}

/// Static checks against the instrument limits. Diagnostics are sorted by
/// line; lines refer to `lines`, or to the canonical rendering when absent.
inline std::vector<Diagnostic> validate(const Sequence& seq, const PhysicsParams& p,
                                        const SourceMap* lines = nullptr) {
  const SourceMap canonical = SourceMap::canonical(seq);
  const std::vector<bool> declared(seq.ops().size(), true);
  return detail::check(seq.rails(), seq.ops(), declared, lines ? *lines : canonical, p);
}

struct LintResult {
  std::optional<Document> document;  // empty when E003/E004 prevent construction
  std::vector<Diagnostic> diagnostics;
};

// Parse + validate in one pass, reporting ordering and declaration problems
// as diagnostics instead of exceptions. Syntax errors still throw.
inline LintResult lint(std::string_view source, const PhysicsParams& p) {
  auto raw = detail::parse_raw(source);
  LintResult result;
  result.diagnostics = detail::check(raw.rails, raw.ops, raw.declared, raw.lines, p);
  const bool constructible = std::none_of(
      result.diagnostics.begin(), result.diagnostics.end(),
      [](const Diagnostic& d) { return d.code == "E003" || d.code == "E004"; });
  if (constructible)
    result.document = Document{Sequence(raw.name, raw.rails, raw.ops), raw.lines};
  return result;
}

}  // namespace vapormem::seqlang
