#pragma once

// Domain types shared by every part of the simulator. Nothing in here does
// physics; constructors and validate() only enforce value invariants.
//
// Units used throughout:
//   time on the sequence/engine axis   ns
//   lifetimes and delays               us
//   lateral positions and radii        um
//   AOD drive frequencies              MHz
//   diffusion constants                cm^2/s
//   energies                           normalization-pulse units

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vapormem {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class OutOfBandError : public Error {
 public:
  using Error::Error;
};

class TimeOrderError : public Error {
 public:
  using Error::Error;
};

class UnknownRailError : public Error {
 public:
  using Error::Error;
};

class DuplicateRailError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Physical parameters

enum class DecayMode { Empirical, Diffusive };

inline const char* to_string(DecayMode m) {
  return m == DecayMode::Empirical ? "Empirical" : "Diffusive";
}

inline std::optional<DecayMode> decay_mode_from_string(const std::string& s) {
  if (s == "Empirical") return DecayMode::Empirical;
  if (s == "Diffusive") return DecayMode::Diffusive;
  return std::nullopt;
}

struct PhysicsParams {
  double d0 = 0.24;         // cm^2/s at (t0, p0)
  double t0 = 273.15;       // K
  double p0 = 760.0;        // torr
  double t_cell = 333.15;   // K
  double p_buffer = 5.0;    // torr, N2
  double w_signal = 270.0;  // um, 1/e^2 intensity radius
  double w_control = 350.0; // um, 1/e^2 intensity radius
  double sigma0 = 135.0;    // um, initial spin-wave std per axis
  double w_dep = 500.0;     // um, depletion kernel radius
  int m_dep = 3;            // super-Gaussian order of the depletion kernel
  double f_center = 200.0;  // MHz
  double f_halfband = 50.0; // MHz
  double edge_loss = 0.25;  // diffraction-efficiency loss at band edge
  double pos_per_mhz = 33.75; // um/MHz
  double t_switch = 48.0;   // ns
  double pump_fidelity = 1.0;
  DecayMode decay_mode = DecayMode::Empirical;

  double band_min() const { return f_center - f_halfband; }
  double band_max() const { return f_center + f_halfband; }
  bool in_band(double f) const { return std::abs(f - f_center) <= f_halfband; }

  // Throws DomainError naming the first violated invariant.
  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw DomainError(std::string(name) + " must be > 0");
    };
    positive(d0, "d0");
    positive(t0, "t0");
    positive(p0, "p0");
    positive(t_cell, "t_cell");
    positive(p_buffer, "p_buffer");
    positive(w_signal, "w_signal");
    positive(w_control, "w_control");
    positive(sigma0, "sigma0");
    positive(w_dep, "w_dep");
    positive(f_halfband, "f_halfband");
    positive(t_switch, "t_switch");
    positive(pos_per_mhz, "pos_per_mhz");
    if (m_dep < 1) throw DomainError("m_dep must be >= 1");
    if (!(edge_loss >= 0.0 && edge_loss < 1.0))
      throw DomainError("edge_loss must be in [0, 1)");
    if (!(pump_fidelity >= 0.0 && pump_fidelity <= 1.0))
      throw DomainError("pump_fidelity must be in [0, 1]");
  }

  bool operator==(const PhysicsParams&) const = default;
};

// Calibrated defaults for the 25x75 mm Cs cell at 60 C with 5 torr N2.
inline PhysicsParams default_params() { return PhysicsParams{}; }

// Descriptive optical settings. Only the pulse widths feed into the model
// (waveform rendering); the rest documents the operating point.
struct OpticalConfig {
  double delta = 0.0;                // MHz, common red detuning
  std::string omega_s = "F=3->F'=3"; // signal
  std::string omega_c = "F=4->F'=3"; // control
  std::string omega_p = "F=4->F'=4"; // pump
  double fwhm_signal = 25.0;         // ns
  double fwhm_control = 43.75;       // ns
  double norm_detuning = 2.0;        // GHz below the signal transition
  double pump_power = 20.0;          // mW
  double pump_duration = 900.0;      // ns
  double control_power = 200.0;      // mW
  double control_gate = 120.0;       // ns

  void validate() const {
    if (!(fwhm_signal > 0.0)) throw DomainError("fwhm_signal must be > 0");
    if (!(fwhm_control > 0.0)) throw DomainError("fwhm_control must be > 0");
    if (!(norm_detuning > 0.0)) throw DomainError("norm_detuning must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Rails

struct RailCalibration {
  double f_rail = 0.0;    // MHz
  double tau = 0.0;       // us, 1/e lifetime
  double tau_err = 0.0;   // us
  double eta_mem = 0.0;   // internal efficiency at zero storage time
  double eta_write = 0.0; // capture factor
  double eta_read = 0.0;  // retrieval factor

  bool operator==(const RailCalibration&) const = default;
};

/// Builds a rail with the internal efficiency split into capture and
/// retrieval factors. split_ratio = eta_write / eta_read; 1 is symmetric.
inline RailCalibration make_rail(double f_rail, double tau, double tau_err,
                                 double eta_mem, double split_ratio = 1.0) {
  if (!(tau > 0.0)) throw DomainError("rail tau must be > 0");
  if (!(tau_err >= 0.0)) throw DomainError("rail tau_err must be >= 0");
  if (!(eta_mem > 0.0 && eta_mem <= 1.0))
    throw DomainError("rail eta_mem must be in (0, 1]");
  if (!(split_ratio > 0.0)) throw DomainError("split_ratio must be > 0");
  RailCalibration r;
  r.f_rail = f_rail;
  r.tau = tau;
  r.tau_err = tau_err;
  r.eta_mem = eta_mem;
  r.eta_write = std::sqrt(eta_mem * split_ratio);
  r.eta_read = std::sqrt(eta_mem / split_ratio);
  if (r.eta_write > 1.0 || r.eta_read > 1.0)
    throw DomainError("split_ratio pushes a rail factor above 1");
  return r;
}

// Invariant check used when rails arrive from outside (config overrides).
inline void check_rail(const RailCalibration& r, const PhysicsParams& p) {
  if (!(r.tau > 0.0)) throw DomainError("rail tau must be > 0");
  if (!(r.eta_mem > 0.0 && r.eta_mem <= 1.0))
    throw DomainError("rail eta_mem must be in (0, 1]");
  if (std::abs(r.eta_write * r.eta_read - r.eta_mem) > 1e-12 * r.eta_mem)
    throw DomainError("rail eta_write * eta_read must equal eta_mem");
  if (!p.in_band(r.f_rail))
    throw OutOfBandError("rail " + std::to_string(r.f_rail) +
                         " MHz outside AOD band");
}

// Four rails spaced by 20 MHz, lifetimes and efficiencies as measured.
inline std::vector<RailCalibration> table1_calibration() {
  return {
      make_rail(170.0, 4.3, 0.5, 0.32),
      make_rail(190.0, 5.4, 0.7, 0.35),
      make_rail(210.0, 3.3, 0.3, 0.39),
      make_rail(230.0, 2.6, 0.3, 0.36),
  };
}

inline const RailCalibration* find_rail(const std::vector<RailCalibration>& rails,
                                        double f) {
  auto it = std::find_if(rails.begin(), rails.end(),
                         [f](const RailCalibration& r) { return r.f_rail == f; });
  return it == rails.end() ? nullptr : &*it;
}

// ---------------------------------------------------------------------------
// Stored excitations

struct SpinWaveComponent {
  double amplitude = 0.0; // stored energy
  double x_center = 0.0;  // um
  double s2 = 0.0;        // um^2, per-axis variance at the owning memory's t_now
  double t_birth = 0.0;   // ns
  double tau = 0.0;       // us, inherited from the rail that wrote it

  bool operator==(const SpinWaveComponent&) const = default;
};

// ---------------------------------------------------------------------------
// Sequences

enum class OpKind { Write, Read, Pump };

inline const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::Write: return "WRITE";
    case OpKind::Read: return "READ";
    case OpKind::Pump: return "PUMP";
  }
  return "?";
}

struct Operation {
  double t = 0.0;      // ns
  OpKind kind = OpKind::Read;
  double f_rail = 0.0; // MHz
  double energy = 1.0; // input pulse energy, Write only

  bool operator==(const Operation&) const = default;
};

// A time-ordered program on a declared set of rails. Construction rejects
// unsorted ops and ops on undeclared rails; timing against the AOD switching
// time is left to the validator.
class Sequence {
 public:
  Sequence() = default;

  Sequence(std::string name, std::vector<double> rails, std::vector<Operation> ops)
      : name_(std::move(name)), rails_(std::move(rails)), ops_(std::move(ops)) {
    for (std::size_t i = 0; i < rails_.size(); ++i)
      for (std::size_t j = i + 1; j < rails_.size(); ++j)
        if (rails_[i] == rails_[j])
          throw DuplicateRailError("rail declared twice: " + std::to_string(rails_[i]));
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      const Operation& op = ops_[i];
      if (!(op.t >= 0.0)) throw PreconditionError("operation time must be >= 0");
      if (op.kind == OpKind::Write && !(op.energy > 0.0))
        throw PreconditionError("write energy must be > 0");
      if (i > 0 && !(op.t > ops_[i - 1].t))
        throw TimeOrderError("operations must be strictly increasing in time");
      if (std::find(rails_.begin(), rails_.end(), op.f_rail) == rails_.end())
        throw UnknownRailError("operation on undeclared rail " +
                               std::to_string(op.f_rail));
    }
  }

  const std::string& name() const { return name_; }
  const std::vector<double>& rails() const { return rails_; }
  const std::vector<Operation>& ops() const { return ops_; }
  bool empty() const { return ops_.empty(); }

  bool operator==(const Sequence&) const = default;

 private:
  std::string name_;
  std::vector<double> rails_;
  std::vector<Operation> ops_;
};

// ---------------------------------------------------------------------------
// Traces and fits

struct TraceEvent {
  double t = 0.0;           // ns
  OpKind kind = OpKind::Read;
  double f_rail = 0.0;      // MHz
  double out_energy = 0.0;  // leakage (Write) or retrieved energy (Read)
  double stored_after = 0.0;

  bool operator==(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;

struct FitResult {
  double a0 = 0.0;
  double tau = 0.0;   // us
  double a0_err = 0.0;
  double tau_err = 0.0;
  double rss = 0.0;
  int iterations = 0;
};

}  // namespace vapormem
