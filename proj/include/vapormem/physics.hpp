#pragma once

// Diffusion, geometry and AOD transfer functions. All pure.

#include <cmath>
#include <string>

#include "core.hpp"

namespace vapormem::physics {

// 1 cm^2/s expressed in um^2/us.
inline constexpr double kCm2PerSInUm2PerUs = 1e8 * 1e-6;

// Buffer-gas diffusion constant at cell conditions, cm^2/s.
// D = D0 * (P0 / P) * (T / T0)^(3/2)
inline double diffusion_coefficient(const PhysicsParams& p) {
  if (!(p.t0 > 0.0)) throw DomainError("t0 must be > 0");
  if (!(p.p_buffer > 0.0)) throw DomainError("p_buffer must be > 0");
  if (!(p.t_cell > 0.0) || !(p.p0 > 0.0) || !(p.d0 > 0.0))
    throw DomainError("diffusion inputs must be > 0");
  if (p.t_cell == p.t0 && p.p_buffer == p.p0) return p.d0;
  return p.d0 * (p.p0 / p.p_buffer) * std::pow(p.t_cell / p.t0, 1.5);
}

// Time for the 2D diffusion length sqrt(4 D t) to reach delta_x. Returns us.
inline double transit_time(double delta_x_um, double d_cm2_s) {
  if (!(delta_x_um > 0.0) || !(d_cm2_s > 0.0))
    throw DomainError("transit_time needs delta_x > 0 and D > 0");
  return delta_x_um * delta_x_um / (4.0 * d_cm2_s * kCm2PerSInUm2PerUs);
}

inline void require_in_band(double f, const PhysicsParams& p) {
  if (!p.in_band(f))
    throw OutOfBandError("frequency " + std::to_string(f) + " MHz outside [" +
                         std::to_string(p.band_min()) + ", " +
                         std::to_string(p.band_max()) + "] MHz");
}

// Lateral beam position at the cell, um; band center is the origin.
inline double rail_position(double f_mhz, const PhysicsParams& p) {
  require_in_band(f_mhz, p);
  return (f_mhz - p.f_center) * p.pos_per_mhz;
}

// Parabolic diffraction-efficiency roll-off towards the band edges.
inline double aod_efficiency(double f_mhz, const PhysicsParams& p) {
  require_in_band(f_mhz, p);
  const double u = (f_mhz - p.f_center) / p.f_halfband;
  return 1.0 - p.edge_loss * u * u;
}

// Per-axis Gaussian variance after free diffusion for dt_us.
inline double spread_variance(double s2_um2, double dt_us, double d_cm2_s) {
  if (!(s2_um2 >= 0.0)) throw DomainError("variance must be >= 0");
  if (!(dt_us >= 0.0)) throw DomainError("elapsed time must be >= 0");
  return s2_um2 + 2.0 * d_cm2_s * kCm2PerSInUm2PerUs * dt_us;
}

// Variance of the control-beam intensity profile, which acts as the
// retrieval sampling kernel.
inline double read_variance(const PhysicsParams& p) {
  return p.w_control * p.w_control / 4.0;
}

// Retrieval weight of a read beam displaced by d from a stored Gaussian of
// per-axis variance s2, relative to a coaxial read.
inline double overlap_factor(double d_um, double s2_um2, const PhysicsParams& p) {
  if (!(s2_um2 >= 0.0)) throw DomainError("variance must be >= 0");
  return std::exp(-d_um * d_um / (2.0 * (s2_um2 + read_variance(p))));
}

// Fraction of a stored component destroyed by a control pulse at distance d.
// Super-Gaussian: flat near the beam, steep edge.
inline double depletion_fraction(double d_um, const PhysicsParams& p) {
  const double u = std::abs(d_um) / p.w_dep;
  return std::exp(-std::pow(u, 2.0 * p.m_dep));
}

inline double temporal_decay(double amplitude, double dt_us, double tau_us) {
  if (!(tau_us > 0.0)) throw DomainError("tau must be > 0");
  if (!(dt_us >= 0.0)) throw DomainError("elapsed time must be >= 0");
  return amplitude * std::exp(-dt_us / tau_us);
}

// On-rail decay when the spin-wave loss is attributed purely to diffusion
// out of the read kernel. Only used for oracle comparisons.
inline double diffusive_decay(double s2_um2, const PhysicsParams& p) {
  const double v = read_variance(p);
  return (p.sigma0 * p.sigma0 + v) / (s2_um2 + v);
}

}  // namespace vapormem::physics
