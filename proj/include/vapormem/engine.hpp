#pragma once

// Event-driven multi-rail memory. A Memory holds a global pool of Gaussian
// spin-wave components in the shared vapor; rails only fix where a component
// is born and which calibration it inherits.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "physics.hpp"
#include "seqlang.hpp"

namespace vapormem {

class Memory {
 public:
  Memory(PhysicsParams params, std::vector<RailCalibration> rails)
      : params_(std::move(params)), rails_(std::move(rails)) {
    params_.validate();
    if (rails_.empty()) throw PreconditionError("memory needs at least one rail");
    for (std::size_t i = 0; i < rails_.size(); ++i) {
      check_rail(rails_[i], params_);
      for (std::size_t j = 0; j < i; ++j)
        if (rails_[i].f_rail == rails_[j].f_rail)
          throw DuplicateRailError("duplicate rail " + text::format_number(rails_[i].f_rail) + " MHz");
    }
    diffusion_ = physics::diffusion_coefficient(params_);
  }

  const PhysicsParams& params() const { return params_; }
  const std::vector<RailCalibration>& rails() const { return rails_; }
  const std::vector<SpinWaveComponent>& components() const { return components_; }
  double t_now() const { return t_now_; }
  std::optional<double> last_op_t() const { return last_op_t_; }
  double diffusion() const { return diffusion_; }

  const RailCalibration& rail(double f) const {
    if (const auto* r = find_rail(rails_, f)) return *r;
    throw UnknownRailError("unknown rail " + text::format_number(f) + " MHz");
  }

  // Lets every component diffuse up to time t (ns) without an operation.
  void advance_to(double t) {
    if (!(t >= t_now_))
      throw TimeOrderError("time " + text::format_number(t) + " ns precedes t_now " +
                           text::format_number(t_now_) + " ns");
    const double dt_us = (t - t_now_) / 1000.0;
    if (dt_us > 0.0)
      for (auto& c : components_) c.s2 = physics::spread_variance(c.s2, dt_us, diffusion_);
    t_now_ = t;
  }

  // Optical pumping empties the addressed region.
  void pump(double f, double t) {
    const double x = physics::rail_position(rail(f).f_rail, params_);
    advance_to(t);
    for (auto& c : components_)
      c.amplitude *= 1.0 - params_.pump_fidelity * physics::depletion_fraction(x - c.x_center, params_);
    finish_op(t);
  }

  // Returns leakage. Pre-existing components see the control pulse exactly
  // as during a read; whatever they would emit is not collected.
  double write(double f, double t, double energy) {
    const RailCalibration& cal = rail(f);
    if (!(energy > 0.0)) throw PreconditionError("write energy must be > 0");
    const double x = physics::rail_position(cal.f_rail, params_);
    advance_to(t);
    deplete(x);
    SpinWaveComponent c;
    c.amplitude = energy * cal.eta_write;
    c.x_center = x;
    c.s2 = params_.sigma0 * params_.sigma0;
    c.t_birth = t;
    c.tau = cal.tau;
    components_.push_back(c);
    finish_op(t);
    return energy * (1.0 - cal.eta_write);
  }

  // Returns retrieved energy summed over every component the control beam
  // samples, then depletes them.
  double read(double f, double t) {
    const RailCalibration& cal = rail(f);
    const double x = physics::rail_position(cal.f_rail, params_);
    advance_to(t);
    double retrieved = 0.0;
    for (const auto& c : components_) {
      const double age_us = (t - c.t_birth) / 1000.0;
      const double decay = params_.decay_mode == DecayMode::Empirical
                               ? std::exp(-age_us / c.tau)
                               : physics::diffusive_decay(c.s2, params_);
      retrieved += c.amplitude * cal.eta_read * decay *
                   physics::overlap_factor(x - c.x_center, c.s2, params_);
    }
    deplete(x);
    finish_op(t);
    return retrieved;
  }

  // Undecayed amplitude of the components written on rail f.
  double stored_on(double f) const {
    const double x = physics::rail_position(rail(f).f_rail, params_);
    double sum = 0.0;
    for (const auto& c : components_)
      if (c.x_center == x) sum += c.amplitude;
    return sum;
  }

 private:
  void deplete(double x) {
    for (auto& c : components_)
      c.amplitude *= 1.0 - physics::depletion_fraction(x - c.x_center, params_);
  }

  void finish_op(double t) {
    std::erase_if(components_, [](const SpinWaveComponent& c) { return c.amplitude == 0.0; });
    last_op_t_ = t;
  }

  PhysicsParams params_;
  std::vector<RailCalibration> rails_;
  std::vector<SpinWaveComponent> components_;
  double t_now_ = 0.0;
  std::optional<double> last_op_t_;
  double diffusion_ = 0.0;
};

inline Memory new_memory(const PhysicsParams& params, const std::vector<RailCalibration>& rails) {
  return Memory(params, rails);
}

inline TraceEvent apply(Memory& mem, const Operation& op) {
  TraceEvent ev{op.t, op.kind, op.f_rail, 0.0, 0.0};
  switch (op.kind) {
    case OpKind::Write: ev.out_energy = mem.write(op.f_rail, op.t, op.energy); break;
    case OpKind::Read: ev.out_energy = mem.read(op.f_rail, op.t); break;
    case OpKind::Pump: mem.pump(op.f_rail, op.t); break;
  }
  ev.stored_after = mem.stored_on(op.f_rail);
  return ev;
}

/// Validates `seq` against the memory's parameters, then applies every
/// operation in order. Throws ValidationError before touching the state if
/// any error diagnostic is raised.
inline Trace run_sequence(Memory& mem, const Sequence& seq) {
  auto diags = seqlang::validate(seq, mem.params());
  if (seqlang::has_errors(diags)) throw seqlang::ValidationError(std::move(diags));
  Trace trace;
  trace.reserve(seq.ops().size());
  for (const auto& op : seq.ops()) trace.push_back(apply(mem, op));
  return trace;
}

// ---------------------------------------------------------------------------
// Detector waveform

struct WaveformSample {
  double t = 0.0;  // ns
  double intensity = 0.0;
};

using Waveform = std::vector<WaveformSample>;

struct TimeWindow {
  double begin = 0.0;  // ns, inclusive
  double end = 0.0;    // ns, exclusive
};

// [0, end of the last pulse rounded up to the next whole us).
inline TimeWindow default_window(const Trace& trace, const OpticalConfig& cfg) {
  double last = 0.0;
  for (const auto& ev : trace) last = std::max(last, ev.t);
  const double tail = trace.empty() ? 0.0 : last + 4.0 * cfg.fwhm_signal;
  return {0.0, std::max(1000.0, std::ceil(tail / 1000.0) * 1000.0)};
}

/// Each event becomes a Gaussian pulse of the signal FWHM whose area equals
/// its out_energy; noise_floor is added to every sample.
inline Waveform render_waveform(const Trace& trace, const OpticalConfig& cfg, double sample_period,
                                double noise_floor, std::optional<TimeWindow> window = std::nullopt) {
  if (!(sample_period > 0.0)) throw DomainError("sample period must be > 0");
  cfg.validate();
  const TimeWindow w = window.value_or(default_window(trace, cfg));
  if (!(w.end >= w.begin)) throw DomainError("waveform window end precedes begin");
  const double sigma = cfg.fwhm_signal / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  const auto n = static_cast<std::size_t>(std::ceil((w.end - w.begin) / sample_period - 1e-9));
  Waveform out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = w.begin + static_cast<double>(k) * sample_period;
    double v = noise_floor;
    for (const auto& ev : trace) {
      if (ev.out_energy == 0.0) continue;
      const double u = (t - ev.t) / sigma;
      v += ev.out_energy * norm * std::exp(-0.5 * u * u);
    }
    out[k] = {t, v};
  }
  return out;
}

}  // namespace vapormem
