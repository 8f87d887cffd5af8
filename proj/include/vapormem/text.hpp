#pragma once

// Locale-independent number formatting and parsing shared by the sequence
// format, CSV writers and the config reader.

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace vapormem::text {

// Shortest representation that round-trips through parse_number.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // from_chars rejects a leading '+'; accept it for hand-written files.
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Parses a decimal number and scales it by 10^shift without an intermediate
// rounding step, so "0.4" with shift 3 gives exactly 400.
inline std::optional<double> parse_scaled(std::string_view s, int shift) {
  if (shift == 0) return parse_number(s);
  std::string mantissa(s);
  long exponent = 0;
  auto epos = mantissa.find_first_of("eE");
  if (epos != std::string::npos) {
    std::string_view exp_text(mantissa.data() + epos + 1, mantissa.size() - epos - 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc{} || ptr != exp_text.data() + exp_text.size()) return std::nullopt;
    mantissa.resize(epos);
  }
  if (!parse_number(mantissa)) return std::nullopt;
  return parse_number(mantissa + "e" + std::to_string(exponent + shift));
}

struct Token {
  std::string_view text;
  int column = 0;  // 1-based
};

// Whitespace-separated tokens of one line, stopping at '#'.
inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != '#' && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r' && line[j] != '\v' && line[j] != '\f')
      ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

// Splits on '\n', dropping a trailing '\r' from each line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!lines.empty() && lines.back().empty() && !text.empty() && text.back() == '\n')
    lines.pop_back();
  return lines;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace vapormem::text
