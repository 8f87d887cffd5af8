#pragma once

// Reproduction harness: cross-talk and lifetime scans, the exponential
// lifetime fit, efficiency extrapolation, random-access criteria and the
// Brownian-walker oracle for the overlap model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "engine.hpp"
#include "physics.hpp"
#include "seqlang.hpp"

namespace vapormem::harness {

// ---------------------------------------------------------------------------
// Scans

struct ScanResult {
  std::string axis_name;  // including unit, e.g. "separation_mhz"
  std::vector<double> axis;
  std::vector<std::pair<std::string, std::vector<double>>> series;

  const std::vector<double>& at(const std::string& name) const {
    for (const auto& [n, v] : series)
      if (n == name) return v;
    throw PreconditionError("no series named " + name);
  }
};

// Inclusive grid min, min+step, ... up to max (with a small tolerance so
// decimal steps land on max).
inline std::vector<double> make_grid(double min, double max, double step) {
  if (!(step > 0.0)) throw PreconditionError("grid step must be > 0");
  if (!(min <= max)) throw PreconditionError("grid min must not exceed max");
  const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = min + static_cast<double>(i) * step;
  return g;
}

inline constexpr double kCrosstalkWriteRail = 190.0;

// 0..25 MHz in 1 MHz steps.
inline std::vector<double> default_separations() { return make_grid(0.0, 25.0, 1.0); }

// 0.4..11.2 us in 400 ns steps.
inline std::vector<double> default_delays() {
  std::vector<double> d;
  for (int k = 1; k <= 28; ++k) d.push_back(k * 400 / 1000.0);
  return d;
}

/// Write on the 190 MHz rail at t=0, read the neighbor at 190+df at 0.4 us
/// (peak1), read 190 MHz again at 0.8 us (peak2). The probe rail carries the
/// write rail's calibration so only the geometry changes along the scan.
inline ScanResult scan_crosstalk(const PhysicsParams& params,
                                 const std::vector<RailCalibration>& rails_cal,
                                 const std::vector<double>& separations) {
  const RailCalibration* home = find_rail(rails_cal, kCrosstalkWriteRail);
  if (!home) throw UnknownRailError("cross-talk scan needs a calibrated 190 MHz rail");
  for (double df : separations) physics::require_in_band(kCrosstalkWriteRail + df, params);

  ScanResult out{"separation_mhz", separations, {{"peak1", {}}, {"peak2", {}}}};
  auto& peak1 = out.series[0].second;
  auto& peak2 = out.series[1].second;
  for (double df : separations) {
    const double probe_f = kCrosstalkWriteRail + df;
    std::vector<RailCalibration> rails{*home};
    std::vector<double> declared{home->f_rail};
    if (probe_f != home->f_rail) {
      RailCalibration probe = *home;
      probe.f_rail = probe_f;
      rails.push_back(probe);
      declared.push_back(probe_f);
    }
    Memory mem(params, rails);
    Sequence seq("crosstalk", declared,
                 {{0.0, OpKind::Write, home->f_rail, 1.0},
                  {400.0, OpKind::Read, probe_f, 1.0},
                  {800.0, OpKind::Read, home->f_rail, 1.0}});
    const Trace tr = run_sequence(mem, seq);
    peak1.push_back(tr[1].out_energy);
    peak2.push_back(tr[2].out_energy);
  }
  return out;
}

/// Fresh memory per delay: pump, write 1.0 at t=0, read the same rail after
/// `delay` us.
inline ScanResult scan_lifetime(const PhysicsParams& params,
                                const std::vector<RailCalibration>& rails_cal, double f_rail,
                                const std::vector<double>& delays_us) {
  for (std::size_t i = 0; i < delays_us.size(); ++i) {
    if (!(delays_us[i] > 0.0)) throw PreconditionError("delays must be > 0");
    if (i > 0 && !(delays_us[i] > delays_us[i - 1]))
      throw PreconditionError("delays must be ascending");
  }
  ScanResult out{"delay_us", delays_us, {{"retrieval", {}}}};
  auto& y = out.series[0].second;
  for (double delay : delays_us) {
    Memory mem(params, rails_cal);
    mem.pump(f_rail, 0.0);
    mem.write(f_rail, 0.0, 1.0);
    y.push_back(mem.read(f_rail, delay * 1000.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

class FitError : public Error {
 public:
  enum class Kind { Precondition, Singular, NonConvergence };
  FitError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Point {
  double t = 0.0;  // us
  double y = 0.0;
};

/// Least-squares fit of y = A0 exp(-t / tau). Starts from a straight-line fit
/// of ln y and refines with Gauss-Newton (step halving when the residual
/// grows) until the relative parameter change drops below 1e-9.
inline FitResult fit_exponential(const std::vector<Point>& pts, int max_iterations = 100) {
  using Kind = FitError::Kind;
  const std::size_t n = pts.size();
  if (n < 3) throw FitError(Kind::Precondition, "exponential fit needs at least 3 points");
  for (const auto& p : pts)
    if (!(p.y > 0.0)) throw FitError(Kind::Precondition, "exponential fit needs y > 0");
  const bool all_same_t = std::all_of(pts.begin(), pts.end(), [&](const Point& p) { return p.t == pts[0].t; });
  if (all_same_t) throw FitError(Kind::Singular, "all sample times are equal");

  double st = 0, sl = 0, stt = 0, stl = 0;
  for (const auto& p : pts) {
    const double l = std::log(p.y);
    st += p.t;
    sl += l;
    stt += p.t * p.t;
    stl += p.t * l;
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * stt - st * st;
  if (!(denom > 0.0)) throw FitError(Kind::Singular, "degenerate sample times");
  const double slope = (dn * stl - st * sl) / denom;
  const double intercept = (sl - slope * st) / dn;
  if (!(slope < 0.0)) throw FitError(Kind::NonConvergence, "data do not decay; no positive lifetime");

  double a0 = std::exp(intercept);
  double tau = -1.0 / slope;

  auto rss_of = [&](double a, double t) {
    double s = 0.0;
    for (const auto& p : pts) {
      const double r = p.y - a * std::exp(-p.t / t);
      s += r * r;
    }
    return s;
  };

  struct Normal {
    double jaa = 0, jat = 0, jtt = 0, ga = 0, gt = 0;
  };
  auto normal_equations = [&](double a, double t) {
    Normal ne;
    for (const auto& p : pts) {
      const double e = std::exp(-p.t / t);
      const double da = e;
      const double dt = a * e * p.t / (t * t);
      const double r = p.y - a * e;
      ne.jaa += da * da;
      ne.jat += da * dt;
      ne.jtt += dt * dt;
      ne.ga += da * r;
      ne.gt += dt * r;
    }
    return ne;
  };

  double rss = rss_of(a0, tau);
  int it = 0;
  bool converged = false;
  for (; it < max_iterations; ++it) {
    const Normal ne = normal_equations(a0, tau);
    const double det = ne.jaa * ne.jtt - ne.jat * ne.jat;
    if (!(std::abs(det) > 1e-300)) throw FitError(Kind::Singular, "singular normal equations");
    double step_a = (ne.jtt * ne.ga - ne.jat * ne.gt) / det;
    double step_t = (ne.jaa * ne.gt - ne.jat * ne.ga) / det;

    double scale = 1.0;
    double a_new = a0 + step_a, t_new = tau + step_t, rss_new = 0.0;
    for (int h = 0; h < 60; ++h) {
      a_new = a0 + scale * step_a;
      t_new = tau + scale * step_t;
      if (t_new > 0.0) {
        rss_new = rss_of(a_new, t_new);
        if (rss_new <= rss) break;
      }
      scale *= 0.5;
    }
    if (!(t_new > 0.0)) throw FitError(Kind::NonConvergence, "lifetime left the positive domain");
    const double change = std::max(std::abs(a_new - a0) / std::abs(a_new), std::abs(t_new - tau) / t_new);
    a0 = a_new;
    tau = t_new;
    rss = std::min(rss, rss_new);
    if (change < 1e-9) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged)
    throw FitError(Kind::NonConvergence,
                   "Gauss-Newton did not converge in " + std::to_string(max_iterations) + " iterations");

  rss = rss_of(a0, tau);
  const Normal ne = normal_equations(a0, tau);
  const double det = ne.jaa * ne.jtt - ne.jat * ne.jat;
  const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
  FitResult fr;
  fr.a0 = a0;
  fr.tau = tau;
  fr.a0_err = std::sqrt(std::max(0.0, s2 * ne.jtt / det));
  fr.tau_err = std::sqrt(std::max(0.0, s2 * ne.jaa / det));
  fr.rss = rss;
  fr.iterations = it;
  return fr;
}

inline std::vector<Point> to_points(const ScanResult& scan, const std::string& series) {
  const auto& y = scan.at(series);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < scan.axis.size(); ++i) pts.push_back({scan.axis[i], y[i]});
  return pts;
}

/// Internal efficiency from a pulse retrieved after t_read us, extrapolated
/// back to zero storage time with the rail lifetime and normalized to the
/// unabsorbed reference pulse.
inline double extrapolate_efficiency(double e_read, double t_read_us, double tau_us, double e_norm) {
  if (!(e_read > 0.0) || !(tau_us > 0.0) || !(e_norm > 0.0) || !(t_read_us >= 0.0))
    throw DomainError("efficiency extrapolation needs positive energies and lifetime");
  return e_read / e_norm * std::exp(t_read_us / tau_us);
}

struct WeightedMean {
  double mean = 0.0;
  double sigma = 0.0;
};

// Inverse-variance weighted mean.
inline WeightedMean weighted_mean(const std::vector<double>& values, const std::vector<double>& sigmas) {
  if (values.size() != sigmas.size()) throw PreconditionError("values and sigmas differ in length");
  if (values.empty()) throw PreconditionError("weighted mean of nothing");
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw DomainError("sigma must be > 0");
    const double w = 1.0 / (sigmas[i] * sigmas[i]);
    sw += w;
    swx += w * values[i];
  }
  return {swx / sw, 1.0 / std::sqrt(sw)};
}

// Multiplies each value by (1 + rel_sigma * z), z standard normal.
inline std::vector<double> add_multiplicative_noise(std::vector<double> values, double rel_sigma,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (auto& v : values) v *= 1.0 + rel_sigma * z(rng);
  return values;
}

/// Relative lifetime errors of fits to noisy synthetic decays, one per seed
/// (seeds 1..n_seeds).
inline std::vector<double> fit_noise_study(double a0, double tau_us, const std::vector<double>& delays_us,
                                           double rel_noise, int n_seeds) {
  std::vector<double> clean;
  for (double t : delays_us) clean.push_back(a0 * std::exp(-t / tau_us));
  std::vector<double> errors;
  for (int s = 1; s <= n_seeds; ++s) {
    const auto noisy = add_multiplicative_noise(clean, rel_noise, static_cast<std::uint64_t>(s));
    std::vector<Point> pts;
    for (std::size_t i = 0; i < delays_us.size(); ++i) pts.push_back({delays_us[i], noisy[i]});
    errors.push_back(std::abs(fit_exponential(pts).tau - tau_us) / tau_us);
  }
  return errors;
}

// Nearest-rank percentile, q in (0, 1].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw PreconditionError("percentile of nothing");
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

// ---------------------------------------------------------------------------
// Lifetime / efficiency table

struct RailReport {
  double f_rail = 0.0;
  double tau_cal = 0.0;
  double tau_err_cal = 0.0;
  double eta_cal = 0.0;
  FitResult fit;
  double eta_fit = 0.0;
};

struct TableTolerances {
  double tau_rel = 1e-4;
  double eta_abs = 1e-3;          // 0.1 percentage points
  double mean_tau_target = 3.2;   // us
  double mean_tau_halfwidth = 0.2;
  double mean_eta_target = 0.36;
  double mean_eta_halfwidth = 0.01;
};

struct TableReport {
  std::vector<RailReport> rows;
  WeightedMean mean_tau;  // weights from the calibrated lifetime uncertainties
  double mean_eta = 0.0;  // unweighted
  bool rails_pass = false;
  bool mean_tau_pass = false;
  bool mean_eta_pass = false;
  bool pass() const { return rails_pass && mean_tau_pass && mean_eta_pass; }
};

/// Simulates the lifetime scan on every rail, fits it, and extrapolates the
/// first retrieval back to zero storage time for the efficiency.
inline TableReport reproduce_table(const PhysicsParams& params, const std::vector<RailCalibration>& rails_cal,
                                   const std::vector<double>& delays_us = default_delays(),
                                   const TableTolerances& tol = {}) {
  TableReport rep;
  std::vector<double> taus, sigmas;
  double eta_sum = 0.0;
  rep.rails_pass = true;
  for (const auto& cal : rails_cal) {
    const ScanResult scan = scan_lifetime(params, rails_cal, cal.f_rail, delays_us);
    RailReport row{cal.f_rail, cal.tau, cal.tau_err, cal.eta_mem, fit_exponential(to_points(scan, "retrieval")), 0.0};
    row.eta_fit = extrapolate_efficiency(scan.at("retrieval").front(), delays_us.front(), row.fit.tau, 1.0);
    rep.rails_pass = rep.rails_pass && std::abs(row.fit.tau - cal.tau) <= tol.tau_rel * cal.tau &&
                     std::abs(row.eta_fit - cal.eta_mem) <= tol.eta_abs;
    taus.push_back(row.fit.tau);
    sigmas.push_back(cal.tau_err);
    eta_sum += row.eta_fit;
    rep.rows.push_back(row);
  }
  rep.mean_tau = weighted_mean(taus, sigmas);
  rep.mean_eta = eta_sum / static_cast<double>(rails_cal.size());
  rep.mean_tau_pass = std::abs(rep.mean_tau.mean - tol.mean_tau_target) <= tol.mean_tau_halfwidth;
  rep.mean_eta_pass = std::abs(rep.mean_eta - tol.mean_eta_target) <= tol.mean_eta_halfwidth;
  return rep;
}

// ---------------------------------------------------------------------------
// Random-access criteria

inline Sequence canonical_random_access_sequence() {
  auto at = [](double t_us, OpKind k, double f) { return Operation{t_us * 1000.0, k, f, 1.0}; };
  const auto W = OpKind::Write;
  const auto R = OpKind::Read;
  return Sequence("random_access", {170.0, 190.0, 210.0, 230.0},
                  {
                      at(0.0, W, 230.0),
                      at(0.4, W, 210.0),
                      at(0.6, R, 210.0),
                      at(0.8, R, 210.0),
                      at(1.2, R, 170.0),
                      at(1.6, W, 190.0),
                      at(2.0, R, 170.0),
                      at(2.4, W, 170.0),
                      at(2.8, R, 170.0),
                      at(3.2, R, 210.0),
                      at(3.6, R, 190.0),
                      at(4.4, R, 230.0),
                  });
}

struct CriterionResult {
  bool pass = true;
  double margin = 0.0;     // worst observed ratio
  double threshold = 0.0;  // ratio at which the criterion fails
  int checked = 0;         // number of reads the criterion applied to
};

struct CriteriaReport {
  CriterionResult interaction_free;
  CriterionResult empty_state;
  CriterionResult full_retrieval;
  bool all_pass() const { return interaction_free.pass && empty_state.pass && full_retrieval.pass; }
};

struct CriteriaTolerances {
  double interaction_free = 0.02;  // relative deviation from the undisturbed prediction
  double empty_state = 0.01;       // fraction of the rail's zero-delay retrieval
  double full_retrieval = 0.01;    // added to the residual 1 - depletion(0)
};

/// Checks a trace against the three random-access requirements:
///  - interaction_free: a write->read pair on one rail with operations on
///    other rails in between retrieves within tolerance of the undisturbed
///    single-rail prediction;
///  - empty_state: reading a rail whose last operation was not a write (or
///    that was never touched) returns at most a small fraction of that rail's
///    zero-delay retrieval of a unit pulse;
///  - full_retrieval: a read that directly follows a read of the same rail
///    returns at most the undepleted residual plus tolerance of it.
inline CriteriaReport check_criteria(const Trace& trace, const Sequence& seq, const PhysicsParams& params,
                                     const std::vector<RailCalibration>& rails_cal,
                                     const CriteriaTolerances& tol = {}) {
  const auto& ops = seq.ops();
  if (trace.size() != ops.size()) throw PreconditionError("trace and sequence differ in length");
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (trace[i].t != ops[i].t || trace[i].kind != ops[i].kind || trace[i].f_rail != ops[i].f_rail)
      throw PreconditionError("trace event " + std::to_string(i) + " does not match the sequence");

  auto cal_of = [&](double f) -> const RailCalibration& {
    if (const auto* r = find_rail(rails_cal, f)) return *r;
    throw UnknownRailError("no calibration for rail " + text::format_number(f) + " MHz");
  };
  const double d_coef = physics::diffusion_coefficient(params);
  auto decay = [&](double dt_us, double tau) {
    if (params.decay_mode == DecayMode::Empirical) return std::exp(-dt_us / tau);
    return physics::diffusive_decay(physics::spread_variance(params.sigma0 * params.sigma0, dt_us, d_coef), params);
  };

  CriteriaReport rep;
  rep.interaction_free.threshold = tol.interaction_free;
  rep.empty_state.threshold = tol.empty_state;
  rep.full_retrieval.threshold = (1.0 - physics::depletion_fraction(0.0, params)) + tol.full_retrieval;

  auto note = [](CriterionResult& c, double ratio) {
    c.margin = std::max(c.margin, ratio);
    c.pass = c.pass && ratio <= c.threshold;
    ++c.checked;
  };

  for (std::size_t j = 0; j < ops.size(); ++j) {
    if (ops[j].kind != OpKind::Read) continue;
    const double f = ops[j].f_rail;
    const RailCalibration& cal = cal_of(f);

    std::optional<std::size_t> prev;  // last earlier op on the same rail
    for (std::size_t i = j; i-- > 0;)
      if (ops[i].f_rail == f) {
        prev = i;
        break;
      }

    if (prev && ops[*prev].kind == OpKind::Write) {
      bool disturbed = false;
      for (std::size_t k = *prev + 1; k < j; ++k) disturbed = disturbed || ops[k].f_rail != f;
      if (disturbed) {
        const double dt_us = (ops[j].t - ops[*prev].t) / 1000.0;
        const double predicted = ops[*prev].energy * cal.eta_write * cal.eta_read * decay(dt_us, cal.tau);
        note(rep.interaction_free, std::abs(trace[j].out_energy - predicted) / predicted);
      }
    } else {
      note(rep.empty_state, trace[j].out_energy / cal.eta_mem);
    }

    if (j > 0 && ops[j - 1].kind == OpKind::Read && ops[j - 1].f_rail == f) {
      const double before = trace[j - 1].out_energy;
      const double ratio = before > 0.0 ? trace[j].out_energy / before
                                        : (trace[j].out_energy > 0.0 ? INFINITY : 0.0);
      note(rep.full_retrieval, ratio);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo diffusion oracle

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Brownian-walker estimate of the read-beam overlap. Atoms start Gaussian
/// (std sigma0 per axis), take one 2D Gaussian step of per-axis variance
/// 2 D t, and are weighted by the control-beam intensity profile centred at
/// lateral offset d. The mean weight is normalized by the coaxial (d = 0)
/// mean over the same walkers, which isolates the displacement dependence.
inline MonteCarloEstimate monte_carlo_overlap(const PhysicsParams& params, std::size_t n_atoms, double d_um,
                                              double t_us, std::uint64_t seed) {
  if (n_atoms < 1000) throw PreconditionError("monte_carlo_overlap needs at least 1000 atoms");
  if (!(t_us >= 0.0)) throw DomainError("elapsed time must be >= 0");
  const double step_sd = std::sqrt(physics::spread_variance(0.0, t_us, physics::diffusion_coefficient(params)));
  const double inv_2v = 1.0 / (2.0 * physics::read_variance(params));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);

  std::vector<double> wd(n_atoms), w0(n_atoms);
  double sum_d = 0.0, sum_0 = 0.0;
  for (std::size_t i = 0; i < n_atoms; ++i) {
    const double x0 = params.sigma0 * z(rng);
    const double y0 = params.sigma0 * z(rng);
    const double x = x0 + step_sd * z(rng);
    const double y = y0 + step_sd * z(rng);
    w0[i] = std::exp(-(x * x + y * y) * inv_2v);
    wd[i] = std::exp(-((x - d_um) * (x - d_um) + y * y) * inv_2v);
    sum_d += wd[i];
    sum_0 += w0[i];
  }
  const double n = static_cast<double>(n_atoms);
  const double ratio = sum_d / sum_0;
  double var = 0.0;
  for (std::size_t i = 0; i < n_atoms; ++i) {
    const double r = wd[i] - ratio * w0[i];
    var += r * r;
  }
  var /= (n - 1.0);
  const double mean0 = sum_0 / n;
  return {ratio, std::sqrt(var / n) / mean0};
}

}  // namespace vapormem::harness
