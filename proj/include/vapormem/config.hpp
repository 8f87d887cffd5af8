#pragma once

// Flat `key = value` configuration with `#` comments. Physics parameters use
// their field names (`w_dep = 450`), rails use dotted paths
// (`rail.190.tau_us = 5.4`), optical pulse widths live under `optical.`.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "text.hpp"

namespace vapormem {

struct Config {
  PhysicsParams params = default_params();
  std::vector<RailCalibration> rails = table1_calibration();
  OpticalConfig optical;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what)
      : Error(line > 0 ? "config line " + std::to_string(line) + ": " + what : "config: " + what) {}
};

namespace detail {

struct RailOverride {
  std::optional<double> tau, tau_err, eta_mem, split_ratio;
};

inline double number_or_throw(std::string_view v, int line, const std::string& key) {
  auto n = text::parse_number(v);
  if (!n) throw ConfigError(line, "value of " + key + " is not a number");
  return *n;
}

inline bool set_physics(PhysicsParams& p, const std::string& key, std::string_view v, int line) {
  const std::map<std::string, double PhysicsParams::*> doubles{
      {"d0", &PhysicsParams::d0},
      {"t0", &PhysicsParams::t0},
      {"p0", &PhysicsParams::p0},
      {"t_cell", &PhysicsParams::t_cell},
      {"p_buffer", &PhysicsParams::p_buffer},
      {"w_signal", &PhysicsParams::w_signal},
      {"w_control", &PhysicsParams::w_control},
      {"sigma0", &PhysicsParams::sigma0},
      {"w_dep", &PhysicsParams::w_dep},
      {"f_center", &PhysicsParams::f_center},
      {"f_halfband", &PhysicsParams::f_halfband},
      {"edge_loss", &PhysicsParams::edge_loss},
      {"pos_per_mhz", &PhysicsParams::pos_per_mhz},
      {"t_switch", &PhysicsParams::t_switch},
      {"pump_fidelity", &PhysicsParams::pump_fidelity},
  };
  if (auto it = doubles.find(key); it != doubles.end()) {
    p.*(it->second) = number_or_throw(v, line, key);
    return true;
  }
  if (key == "m_dep") {
    const double m = number_or_throw(v, line, key);
    if (m != static_cast<int>(m)) throw ConfigError(line, "m_dep must be an integer");
    p.m_dep = static_cast<int>(m);
    return true;
  }
  if (key == "decay_mode") {
    auto mode = decay_mode_from_string(std::string(v));
    if (!mode) throw ConfigError(line, "decay_mode must be Empirical or Diffusive");
    p.decay_mode = *mode;
    return true;
  }
  return false;
}

inline bool set_optical(OpticalConfig& o, const std::string& key, std::string_view v, int line) {
  const std::map<std::string, double OpticalConfig::*> doubles{
      {"optical.delta", &OpticalConfig::delta},
      {"optical.fwhm_signal", &OpticalConfig::fwhm_signal},
      {"optical.fwhm_control", &OpticalConfig::fwhm_control},
      {"optical.norm_detuning", &OpticalConfig::norm_detuning},
      {"optical.pump_power", &OpticalConfig::pump_power},
      {"optical.pump_duration", &OpticalConfig::pump_duration},
      {"optical.control_power", &OpticalConfig::control_power},
      {"optical.control_gate", &OpticalConfig::control_gate},
  };
  auto it = doubles.find(key);
  if (it == doubles.end()) return false;
  o.*(it->second) = number_or_throw(v, line, key);
  return true;
}

}  // namespace detail

/// Applies the overrides in `source` on top of `base` and re-checks every
/// invariant. Unknown keys are errors.
inline Config parse_config(std::string_view source, Config base = {}) {
  std::map<double, detail::RailOverride> rail_overrides;
  const auto lines = text::split_lines(source);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int line = static_cast<int>(li) + 1;
    std::string_view l = lines[li];
    if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = text::trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line, "expected key = value");
    const std::string key(text::trim(l.substr(0, eq)));
    const std::string_view value = text::trim(l.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(line, "expected key = value");

    if (detail::set_physics(base.params, key, value, line)) continue;
    if (detail::set_optical(base.optical, key, value, line)) continue;
    if (key == "seed") {
      std::uint64_t s = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
      if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError(line, "seed must be an unsigned integer");
      base.seed = s;
      continue;
    }
    if (key == "out") {
      base.out_dir = std::string(value);
      continue;
    }
    if (key.rfind("rail.", 0) == 0) {
      const auto dot = key.rfind('.');
      const std::string field = key.substr(dot + 1);
      const auto freq = text::parse_number(std::string_view(key).substr(5, dot > 5 ? dot - 5 : 0));
      if (!freq || dot <= 5) throw ConfigError(line, "rail keys look like rail.<MHz>.<field>");
      auto& ov = rail_overrides[*freq];
      const double v = detail::number_or_throw(value, line, key);
      if (field == "tau_us") ov.tau = v;
      else if (field == "tau_err_us") ov.tau_err = v;
      else if (field == "eta_mem") ov.eta_mem = v;
      else if (field == "split_ratio") ov.split_ratio = v;
      else throw ConfigError(line, "unknown rail field '" + field + "'");
      continue;
    }
    throw ConfigError(line, "unknown key '" + key + "'");
  }

  try {
    base.params.validate();
    base.optical.validate();
    for (const auto& [f, ov] : rail_overrides) {
      auto it = std::find_if(base.rails.begin(), base.rails.end(),
                             [f = f](const RailCalibration& r) { return r.f_rail == f; });
      if (it == base.rails.end()) {
        if (!ov.tau || !ov.tau_err || !ov.eta_mem)
          throw ConfigError(0, "new rail " + text::format_number(f) +
                                   " MHz needs tau_us, tau_err_us and eta_mem");
        base.rails.push_back(make_rail(f, *ov.tau, *ov.tau_err, *ov.eta_mem, ov.split_ratio.value_or(1.0)));
      } else {
        const double ratio = it->eta_write / it->eta_read;
        *it = make_rail(f, ov.tau.value_or(it->tau), ov.tau_err.value_or(it->tau_err),
                        ov.eta_mem.value_or(it->eta_mem), ov.split_ratio.value_or(ratio));
      }
    }
    for (const auto& r : base.rails) check_rail(r, base.params);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(0, e.what());
  }
  return base;
}

}  // namespace vapormem
