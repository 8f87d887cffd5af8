#pragma once

// Command implementations behind the `vapormem` executable. Each command
// takes parsed options and output streams and returns the process exit
// status: 0 success, 1 failed check or rejected input, 2 I/O or usage error.
// Output files are written only after every computation has succeeded.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "engine.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "physics.hpp"
#include "seqlang.hpp"

namespace vapormem::cli {

inline std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool write_file(const std::filesystem::path& path, const std::string& content, std::ostream& err) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) {
    err << "error: cannot write " << path.string() << "\n";
    return false;
  }
  return true;
}

inline Config load_config(const std::optional<std::string>& path) {
  if (!path) return Config{};
  auto text = read_file(*path);
  if (!text) throw ConfigError(0, "cannot read " + *path);
  return parse_config(*text);
}

namespace detail {

inline std::string syntax_line(const seqlang::ParseError& e) {
  seqlang::Diagnostic d{e.code().empty() ? "E000" : e.code(), seqlang::Severity::Error, e.line(), e.what()};
  return seqlang::render(d);
}

// Lints a sequence file; prints diagnostics. Returns the document only when
// no error-severity diagnostic was raised.
inline std::optional<seqlang::Document> load_sequence(const std::string& path, const PhysicsParams& p,
                                                      std::ostream& out, std::ostream& err, int& status) {
  auto text = read_file(path);
  if (!text) {
    err << "error: cannot read " << path << "\n";
    status = 2;
    return std::nullopt;
  }
  try {
    auto res = seqlang::lint(*text, p);
    for (const auto& d : res.diagnostics) out << seqlang::render(d) << "\n";
    if (seqlang::has_errors(res.diagnostics)) {
      status = 1;
      return std::nullopt;
    }
    status = 0;
    return res.document;
  } catch (const seqlang::ParseError& e) {
    out << syntax_line(e) << "\n";
    status = 1;
    return std::nullopt;
  }
}

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace detail

inline int cmd_validate(const std::string& seq_path, const Config& cfg, std::ostream& out, std::ostream& err) {
  int status = 0;
  detail::load_sequence(seq_path, cfg.params, out, err, status);
  return status;
}

struct RunOptions {
  std::optional<std::string> trace_out;
  std::optional<std::string> waveform_out;
  double sample_period_ns = 1.0;
  double noise_floor = 0.0;
};

inline int cmd_run(const std::string& seq_path, const Config& cfg, const RunOptions& opt, std::ostream& out,
                   std::ostream& err) {
  int status = 0;
  auto doc = detail::load_sequence(seq_path, cfg.params, err, err, status);
  if (!doc) return status;
  Trace trace;
  std::string waveform_csv;
  try {
    Memory mem(cfg.params, cfg.rails);
    trace = run_sequence(mem, doc->sequence);
    if (opt.waveform_out) {
      std::ostringstream ws;
      io::write_waveform_csv(ws, render_waveform(trace, cfg.optical, opt.sample_period_ns, opt.noise_floor));
      waveform_csv = ws.str();
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::ostringstream ts;
  io::write_trace_csv(ts, trace);
  const std::filesystem::path trace_path =
      opt.trace_out ? std::filesystem::path(*opt.trace_out) : std::filesystem::path(cfg.out_dir) / "trace.csv";
  if (!write_file(trace_path, ts.str(), err)) return 2;
  if (opt.waveform_out && !write_file(*opt.waveform_out, waveform_csv, err)) return 2;

  out << "sequence " << doc->sequence.name() << ": " << trace.size() << " operations\n";
  out << std::setw(10) << "t_ns" << std::setw(7) << "op" << std::setw(10) << "rail_MHz" << std::setw(14)
      << "out_energy" << std::setw(14) << "stored_after" << "\n";
  for (const auto& ev : trace)
    out << std::setw(10) << detail::fixed(ev.t, 0) << std::setw(7) << to_string(ev.kind) << std::setw(10)
        << detail::fixed(ev.f_rail, 1) << std::setw(14) << detail::fixed(ev.out_energy, 6) << std::setw(14)
        << detail::fixed(ev.stored_after, 6) << "\n";
  out << "trace: " << trace_path.string() << "\n";
  if (opt.waveform_out) out << "waveform: " << *opt.waveform_out << "\n";
  return 0;
}

struct ScanOptions {
  std::optional<double> min, max, step;
  std::optional<double> rail;
};

inline int cmd_scan(const std::string& kind, const Config& cfg, const ScanOptions& opt, std::ostream& out,
                    std::ostream& err) {
  harness::ScanResult scan;
  std::string file;
  try {
    const bool custom = opt.min || opt.max || opt.step;
    if (kind == "crosstalk") {
      if (opt.rail) {
        err << "error: --rail applies to lifetime scans only; the cross-talk write rail is 190 MHz\n";
        return 2;
      }
      const auto grid = custom ? harness::make_grid(opt.min.value_or(0.0), opt.max.value_or(25.0), opt.step.value_or(1.0))
                               : harness::default_separations();
      scan = harness::scan_crosstalk(cfg.params, cfg.rails, grid);
      file = "crosstalk.csv";
    } else if (kind == "lifetime") {
      const double rail = opt.rail.value_or(190.0);
      const auto grid = custom ? harness::make_grid(opt.min.value_or(0.4), opt.max.value_or(11.2), opt.step.value_or(0.4))
                               : harness::default_delays();
      if (!find_rail(cfg.rails, rail)) throw UnknownRailError("no calibration for rail " + text::format_number(rail) + " MHz");
      scan = harness::scan_lifetime(cfg.params, cfg.rails, rail, grid);
      file = "lifetime_" + text::format_number(rail) + ".csv";
    } else {
      err << "error: unknown scan kind '" << kind << "' (expected crosstalk or lifetime)\n";
      return 2;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  std::ostringstream cs;
  io::write_scan_csv(cs, scan);
  const auto path = std::filesystem::path(cfg.out_dir) / file;
  if (!write_file(path, cs.str(), err)) return 2;
  out << "wrote " << path.string() << " (" << scan.axis.size() << " rows)\n";
  return 0;
}

inline int cmd_fit(const std::string& csv_path, const std::optional<std::string>& column, std::ostream& out,
                   std::ostream& err) {
  auto text = read_file(csv_path);
  if (!text) {
    err << "error: cannot read " << csv_path << "\n";
    return 2;
  }
  try {
    out << io::fit_report(harness::fit_exponential(io::read_points_csv(*text, column)));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int cmd_report(const Config& cfg, std::ostream& out, std::ostream& err) {
  harness::TableReport rep;
  const harness::TableTolerances tol;
  try {
    rep = harness::reproduce_table(cfg.params, cfg.rails, harness::default_delays(), tol);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  using detail::fixed;
  auto cell = [](const std::string& s) {
    std::ostringstream os;
    os << " | " << std::setw(16) << s;
    return os.str();
  };
  out << std::left << std::setw(22) << "Rail (MHz)";
  for (const auto& r : rep.rows) out << cell(text::format_number(r.f_rail));
  out << cell("Mean") << "\n";
  out << std::setw(22) << "Lifetime fit (us)";
  for (const auto& r : rep.rows) out << cell(fixed(r.fit.tau, 4));
  out << cell(fixed(rep.mean_tau.mean, 2) + " +- " + fixed(rep.mean_tau.sigma, 2)) << "\n";
  out << std::setw(22) << "Lifetime calib. (us)";
  for (const auto& r : rep.rows) out << cell(fixed(r.tau_cal, 1) + " +- " + fixed(r.tau_err_cal, 1));
  out << cell("") << "\n";
  out << std::setw(22) << "Efficiency (%)";
  for (const auto& r : rep.rows) out << cell(fixed(100.0 * r.eta_fit, 2));
  out << cell(fixed(100.0 * rep.mean_eta, 0) + " (" + fixed(100.0 * rep.mean_eta, 1) + ")") << "\n";
  out << std::right;

  auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  out << verdict(rep.rails_pass) << " per-rail lifetime within " << text::format_number(tol.tau_rel)
      << " relative and efficiency within " << text::format_number(100.0 * tol.eta_abs) << " points of calibration\n";
  out << verdict(rep.mean_tau_pass) << " weighted mean lifetime " << fixed(rep.mean_tau.mean, 3) << " us in "
      << text::format_number(tol.mean_tau_target) << " +- " << text::format_number(tol.mean_tau_halfwidth) << " us\n";
  out << verdict(rep.mean_eta_pass) << " mean efficiency " << fixed(100.0 * rep.mean_eta, 2) << " % in "
      << text::format_number(100.0 * tol.mean_eta_target) << " +- "
      << text::format_number(100.0 * tol.mean_eta_halfwidth) << " %\n";
  return rep.pass() ? 0 : 1;
}

// Brownian-walker check of the analytic overlap model on the
// {0, 270, 675} um x {0.4, 2.0} us grid.
inline int cmd_oracle(const Config& cfg, std::size_t n_atoms, std::ostream& out, std::ostream& err) {
  constexpr double kTolerance = 0.02;
  bool ok = true;
  try {
    const double d_coef = physics::diffusion_coefficient(cfg.params);
    const double s0 = cfg.params.sigma0 * cfg.params.sigma0;
    out << std::setw(8) << "d_um" << std::setw(8) << "t_us" << std::setw(12) << "analytic" << std::setw(12)
        << "monte_carlo" << std::setw(12) << "std_error" << std::setw(12) << "abs_diff" << "\n";
    for (double t : {0.4, 2.0}) {
      for (double d : {0.0, 270.0, 675.0}) {
        const double analytic = physics::overlap_factor(d, physics::spread_variance(s0, t, d_coef), cfg.params);
        const auto mc = harness::monte_carlo_overlap(cfg.params, n_atoms, d, t, cfg.seed);
        const double diff = std::abs(mc.value - analytic);
        ok = ok && diff <= kTolerance;
        out << std::setw(8) << detail::fixed(d, 0) << std::setw(8) << detail::fixed(t, 1) << std::setw(12)
            << detail::fixed(analytic, 6) << std::setw(12) << detail::fixed(mc.value, 6) << std::setw(12)
            << detail::fixed(mc.std_error, 6) << std::setw(12) << detail::fixed(diff, 6) << "  "
            << (diff <= kTolerance ? "PASS" : "FAIL") << "\n";
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return ok ? 0 : 1;
}

}  // namespace vapormem::cli
