#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "bae/classical.hpp"
#include "bae/config.hpp"
#include "bae/data_product.hpp"
#include "bae/emit.hpp"
#include "bae/errors.hpp"
#include "bae/floquet.hpp"
#include "bae/model.hpp"
#include "bae/parallel.hpp"

namespace bae {

inline constexpr const char* tool_version = "baesim 1.0.0";

struct Setpoint {
  double phi_m = 0.0;
  double alpha_c = 0.0;  // |alpha_c| at phi_m
  double alpha_max = 0.0;
  double alpha_min = 0.0;
  double phi_max = 0.0;  // where the fringe peaks and bottoms out
  double phi_min = 0.0;

  double contrast() const { return alpha_max > 0.0 ? (alpha_max - alpha_min) / alpha_max : 0.0; }
};

enum class FringeEdge { rising, falling };

namespace detail {

inline double wrap_phase(double phi) {
  double p = std::fmod(phi, two_pi);
  return p < 0.0 ? p + two_pi : p;
}

/// Golden-section search for an extremum of f in [a, b]; returns (x, f(x)).
inline std::pair<double, double> golden_extremum(const std::function<double(double)>& f, double a, double b, bool maximise,
                              double tol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  auto g = [&](double x) { return maximise ? -f(x) : f(x); };
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = g(c), fd = g(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = g(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = g(d);
    }
  }
  const double x = fc < fd ? c : d;
  return {x, maximise ? -std::min(fc, fd) : std::min(fc, fd)};
}

}  // namespace detail

/// Mid-fringe operating phase: |alpha_c| = (max + min)/2 on the chosen edge,
/// taking the first such crossing in [0, 2pi).
inline Setpoint find_setpoint(const ClassicalProblem& base, const IntegratorConfig& cfg, int scan_points = 64,
                              FringeEdge edge = FringeEdge::rising, unsigned threads = 1, double phi_tol = 1e-9) {
  if (scan_points < 8) throw InvalidParameter("setpoint scan needs at least 8 points");
  auto response = [&](double phi) {
    ClassicalProblem p = base;
    p.drive.phi_m = phi;
    return std::abs(steady_state(p, cfg).alpha_c);
  };
  const std::size_t n = std::size_t(scan_points);
  std::vector<double> phi(n), val(n);
  for (std::size_t k = 0; k < n; ++k) phi[k] = two_pi * double(k) / double(n);
  parallel_for(n, threads, [&](std::size_t k) { val[k] = response(phi[k]); });

  const auto imax = std::size_t(std::max_element(val.begin(), val.end()) - val.begin());
  const auto imin = std::size_t(std::min_element(val.begin(), val.end()) - val.begin());
  if (!(val[imax] > 0.0) || (val[imax] - val[imin]) < 1e-3 * val[imax])
    throw NoSetpointError("interference fringe is degenerate (contrast below 1e-3)");
  const double step = two_pi / double(n);
  Setpoint sp;
  std::tie(sp.phi_max, sp.alpha_max) = detail::golden_extremum(response, phi[imax] - step, phi[imax] + step, true, 1e-7);
  std::tie(sp.phi_min, sp.alpha_min) = detail::golden_extremum(response, phi[imin] - step, phi[imin] + step, false, 1e-7);
  if (val[imax] > sp.alpha_max) std::tie(sp.phi_max, sp.alpha_max) = std::pair(phi[imax], val[imax]);
  if (val[imin] < sp.alpha_min) std::tie(sp.phi_min, sp.alpha_min) = std::pair(phi[imin], val[imin]);
  sp.phi_max = detail::wrap_phase(sp.phi_max);
  sp.phi_min = detail::wrap_phase(sp.phi_min);
  const double level = 0.5 * (sp.alpha_max + sp.alpha_min);

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k1 = (k + 1) % n;
    const double a = val[k] - level, b = val[k1] - level;
    const bool crosses = edge == FringeEdge::rising ? (a < 0.0 && b >= 0.0) : (a > 0.0 && b <= 0.0);
    if (!crosses) continue;
    double lo = phi[k], hi = phi[k] + step, flo = a;
    for (int it = 0; it < 200 && hi - lo > phi_tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = response(mid) - level;
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    sp.phi_m = detail::wrap_phase(0.5 * (lo + hi));
    sp.alpha_c = response(sp.phi_m);
    return sp;
  }
  throw NoSetpointError("no mid-fringe crossing on the requested edge");
}

struct MonotonicRegion {
  double lower = 0.0;  // omega_eff - omega_d [rad/s]
  double upper = 0.0;
  double slope = 0.0;  // normalised response per rad/s at the setpoint
  std::vector<double> detuning;
  std::vector<double> response;
};

/// Largest interval around zero detuning on which the normalised response
/// changes with one sign from sample to sample.
inline MonotonicRegion monotonic_region(const ClassicalProblem& base, const IntegratorConfig& cfg, double phi_m,
                                        int points = 81, double half_span = 0.0, double noise_floor = 1e-9,
                                        unsigned threads = 1) {
  if (points < 3) throw InvalidParameter("monotonic cut needs at least 3 points");
  if (points % 2 == 0) ++points;
  if (!(half_span > 0.0)) half_span = base.system.gamma;
  MonotonicRegion r;
  const std::size_t n = std::size_t(points), c = n / 2;
  r.detuning.resize(n);
  for (std::size_t j = 0; j < n; ++j) r.detuning[j] = half_span * (double(j) - double(c)) / double(c);
  r.detuning[c] = 0.0;
  std::vector<double> mag(n);
  parallel_for(n, threads, [&](std::size_t j) {
    ClassicalProblem p = base;
    p.drive.phi_m = phi_m;
    p.derived.omega_eff = base.drive.omega_d + r.detuning[j];
    mag[j] = std::abs(steady_state(p, cfg).alpha_c);
  });
  const double mx = *std::max_element(mag.begin(), mag.end());
  r.response.resize(n);
  for (std::size_t j = 0; j < n; ++j) r.response[j] = mx > 0.0 ? (mag[j] - mag[c]) / mx : 0.0;

  auto sign = [&](std::size_t j) {  // sign of the step from j to j+1
    const double d = r.response[j + 1] - r.response[j];
    return std::abs(d) <= noise_floor ? 0 : (d > 0 ? 1 : -1);
  };
  const int s = sign(c);
  if (s == 0 || sign(c - 1) != s)
    throw SetpointInvalidError("response is not monotonic through zero detuning at phi_m = " + std::to_string(phi_m));
  std::size_t hi = c + 1;
  while (hi + 1 < n && sign(hi) == s) ++hi;
  std::size_t lo = c - 1;
  while (lo > 0 && sign(lo - 1) == s) --lo;
  r.lower = r.detuning[lo];
  r.upper = r.detuning[hi];
  const double h = r.detuning[c + 1] - r.detuning[c];
  r.slope = (r.response[c + 1] - r.response[c - 1]) / (2.0 * h);
  return r;
}

/// Fully resolved inputs for every experiment.
struct Scenario {
  Config config;
  SystemParams system;
  TipSurface tip;
  DerivedQuantities derived;
  DriveConfig drive;
  IntegratorConfig integrator;
  NoiseConfig noise;
  unsigned threads = 1;
  bool dynamic_resolved = false;
  std::optional<Setpoint> setpoint;
  std::optional<HarmonicDecomposition> operating_point;

  ClassicalProblem problem() const { return ClassicalProblem{system, derived, drive}; }
};

namespace detail {

inline IntegratorConfig integrator_from(const Config& c, double omega_d, double gamma) {
  const double per_step = c.number("integrator.dt_periods_per_step");
  const double inv = 1.0 / per_step;
  if (std::abs(inv - std::round(inv)) > 1e-9 * inv)
    throw ConfigError("key 'integrator.dt_periods_per_step': 1/value must be an integer number of steps per period");
  auto cfg = IntegratorConfig::for_drive(omega_d, gamma, int(std::lround(inv)),
                                         c.number("integrator.transient_over_gamma"),
                                         int(c.integer("integrator.window_periods")));
  cfg.convergence_tol = c.number("integrator.tol");
  cfg.max_windows = int(c.integer("integrator.max_windows"));
  cfg.residual_threshold = c.number("integrator.residual_threshold");
  cfg.linearization_limit = c.number("integrator.linearization_limit");
  return cfg;
}

}  // namespace detail

/// Everything that follows from the config without integrating anything.
inline Scenario resolve_static(const Config& c, unsigned threads = 1) {
  Scenario s;
  s.config = c;
  s.threads = std::max(1u, threads);
  s.system.omega_c = two_pi * c.number("system.omega_c_hz");
  s.system.omega_m = two_pi * c.number("system.omega_m_hz");
  s.system.kappa = two_pi * c.number("system.kappa_hz");
  s.system.gamma = two_pi * c.number("system.gamma_hz");
  s.system.m_eff = c.number("system.m_eff_kg");
  s.system.g0 = two_pi * c.number("system.g0_hz");
  s.tip = TipSurface::from_parts(c.number("tip.hamaker_j"), c.number("tip.r_tip_m"), c.number("tip.h_m"));
  s.derived = derive(s.system, s.tip);

  s.drive.a_in_minus = std::polar(c.number("drive.a_in_minus.mag"), c.number("drive.a_in_minus.phase_rad"));
  s.drive.a_in_plus = std::polar(c.number("drive.a_in_plus.mag"), c.number("drive.a_in_plus.phase_rad"));
  s.drive.omega_d = c.is_word("drive.omega_d_hz") ? s.derived.omega_eff : two_pi * c.number("drive.omega_d_hz");
  s.drive.beta_in_mag = c.is_word("drive.beta_in_mag")
                            ? drive_for_amplitude(s.system, s.derived.omega_eff, s.drive.omega_d,
                                                  c.number("drive.beta1_target"))
                            : c.number("drive.beta_in_mag");
  s.drive.phi_m = c.is_word("drive.phi_m_rad") ? 0.86 * std::numbers::pi : c.number("drive.phi_m_rad");
  s.drive.delta_pump = c.is_word("drive.delta_hz") ? 0.0 : two_pi * c.number("drive.delta_hz");

  s.integrator = detail::integrator_from(c, s.drive.omega_d, s.system.gamma);
  s.noise.n_th_cavity = c.number("noise.n_th_cavity");
  s.noise.n_th_mech = c.number("noise.n_th_mech");
  s.noise.floquet_order = int(c.integer("noise.floquet_order"));
  s.noise.theta = c.number("noise.theta_rad");
  s.noise.theta_relative_to_pumps = c.flag("noise.theta_relative_to_pumps");
  return s;
}

/// Resolves 'compensate' and 'mid-fringe'; each needs steady-state solves.
inline void resolve_dynamic(Scenario& s) {
  if (s.dynamic_resolved) return;
  const Config& c = s.config;
  const bool compensate = c.is_word("drive.delta_hz");
  auto settle = [&] {
    if (compensate) {
      auto r = compensated_steady_state(s.problem(), s.integrator);
      s.drive.delta_pump = r.delta_pump;
      s.operating_point = r.harmonics;
    } else {
      s.operating_point = steady_state(s.problem(), s.integrator);
    }
  };
  settle();
  if (c.is_word("drive.phi_m_rad")) {
    const auto edge = c.word("grids.setpoint.edge") == "falling" ? FringeEdge::falling : FringeEdge::rising;
    s.setpoint = find_setpoint(s.problem(), s.integrator, int(c.integer("grids.setpoint.phi_points")), edge,
                               s.threads);
    s.drive.phi_m = s.setpoint->phi_m;
    settle();
  }
  s.derived.delta_tilde = shifted_detuning(s.drive.delta_pump, s.system.g0, s.operating_point->beta_0);
  s.dynamic_resolved = true;
}

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {"derive", "classical", "response-map", "noise-spectrum",
                                               "variance-detuning", "variance-drive"};
  return ids;
}

struct ExperimentSpec {
  std::string id;
  Config config;
  std::vector<std::string> overrides;
  std::string output_path;
  unsigned threads = 1;
  bool timestamp = true;

  void validate() const {
    if (std::find(experiment_ids().begin(), experiment_ids().end(), id) == experiment_ids().end())
      throw ConfigError("unknown experiment '" + id + "'");
  }
};

namespace detail {

inline void add_provenance(DataProduct& dp, const Scenario& s) {
  for (const auto& [k, v] : s.config.flatten()) dp.provenance["config." + k] = v;
  dp.provenance["tool"] = tool_version;
  dp.provenance["resolved.omega_eff_rad_s"] = s.derived.omega_eff;
  dp.provenance["resolved.omega_d_rad_s"] = s.drive.omega_d;
  dp.provenance["resolved.beta_in_mag"] = s.drive.beta_in_mag;
  dp.provenance["resolved.kappa_rad_s"] = s.system.kappa;
  dp.provenance["resolved.gamma_rad_s"] = s.system.gamma;
  dp.provenance["resolved.x_zpf_m"] = s.derived.x_zpf;
  if (s.dynamic_resolved) {
    dp.provenance["resolved.delta_pump_rad_s"] = s.drive.delta_pump;
    dp.provenance["resolved.delta_tilde_rad_s"] = s.derived.delta_tilde;
    dp.provenance["resolved.phi_m_rad"] = s.drive.phi_m;
  }
  if (s.setpoint) {
    dp.provenance["setpoint.phi_m_rad"] = s.setpoint->phi_m;
    dp.provenance["setpoint.abs_alpha_c"] = s.setpoint->alpha_c;
    dp.provenance["setpoint.contrast"] = s.setpoint->contrast();
  }
}

inline Cell cell_or_empty(double v) { return std::isfinite(v) ? Cell(v) : Cell(std::monostate{}); }

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
  return v;
}

}  // namespace detail

/// Uniform background plus dense patches at 0, +-omega_d, +-2 omega_d and +-2 omega_eff.
inline std::vector<double> spectrum_grid(double omega_d, double omega_eff, double gamma, double span_omega_d,
                                         std::size_t points, double halfwidth_gamma, double per_gamma) {
  std::vector<double> g = detail::linspace(-span_omega_d * omega_d, span_omega_d * omega_d, points);
  const double lim = span_omega_d * omega_d;
  const std::size_t nd = std::size_t(std::ceil(2.0 * halfwidth_gamma * per_gamma)) + 1;
  for (double f : {0.0, omega_d, -omega_d, 2 * omega_d, -2 * omega_d, 2 * omega_eff, -2 * omega_eff}) {
    for (double w : detail::linspace(f - halfwidth_gamma * gamma, f + halfwidth_gamma * gamma, nd))
      if (std::abs(w) <= lim) g.push_back(w);
  }
  std::sort(g.begin(), g.end());
  std::vector<double> out;
  const double eps = 1e-9 * gamma;
  for (double w : g)
    if (out.empty() || w - out.back() > eps) out.push_back(w);
  return out;
}

inline DataProduct derive_product(Scenario& s) {
  DataProduct dp;
  dp.experiment = "derive";
  dp.columns = {{"quantity", "-"}, {"value", "see unit column"}, {"unit", "-"}};
  dp.add_row({std::string("x_zpf"), s.derived.x_zpf, std::string("m")});
  dp.add_row({std::string("F1"), s.derived.F1, std::string("N")});
  dp.add_row({std::string("F2"), s.derived.F2, std::string("N/m")});
  dp.add_row({std::string("omega_eff"), s.derived.omega_eff, std::string("rad/s")});
  dp.provenance["result.frequency_shift_hz"] = frequency_shift(s.system, s.derived.F2) / two_pi;
  dp.provenance["result.resolved_sideband"] = s.system.resolved_sideband();
  detail::add_provenance(dp, s);
  return dp;
}

inline DataProduct classical_product(Scenario& s) {
  resolve_dynamic(s);
  const auto& h = *s.operating_point;
  DataProduct dp;
  dp.experiment = "classical";
  dp.columns = {{"component", "-"}, {"re", "see unit column"}, {"im", "see unit column"},
                {"abs", "see unit column"}, {"unit", "-"}};
  auto row = [&](const char* name, complex v, const char* unit) {
    dp.add_row({std::string(name), v.real(), v.imag(), std::abs(v), std::string(unit)});
  };
  row("alpha_minus", h.alpha_minus, "sqrt(photons)");
  row("alpha_c", h.alpha_c, "sqrt(photons)");
  row("alpha_plus", h.alpha_plus, "sqrt(photons)");
  row("beta_0", h.beta_0, "sqrt(phonons)");
  row("beta_1", h.beta_1, "sqrt(phonons)");
  dp.provenance["result.residual"] = h.residual;
  dp.provenance["result.linearization_ratio"] = h.linearization_ratio;
  dp.provenance["result.linearization_ok"] = h.linearization_ok;
  dp.provenance["result.ansatz_ok"] = h.residual < s.integrator.residual_threshold;
  dp.provenance["result.windows"] = h.windows;
  detail::add_provenance(dp, s);
  return dp;
}

inline DataProduct response_map_product(Scenario& s) {
  resolve_dynamic(s);
  const Config& c = s.config;
  const std::size_t nphi = std::size_t(c.integer("grids.response_map.phi_points"));
  const std::size_t nsw = std::size_t(c.integer("grids.response_map.sweep_points"));
  const double span = c.number("grids.response_map.span_gamma") * s.system.gamma;
  const bool by_h = c.word("grids.response_map.axis") == "h";

  std::vector<double> phi(nphi);
  for (std::size_t i = 0; i < nphi; ++i) phi[i] = two_pi * double(i) / double(nphi);
  double upper = s.drive.omega_d + span;
  if (by_h) {
    // omega_eff cannot exceed omega_m; stop at the 1 um retract distance.
    TipSurface far = s.tip;
    far.h = 1e-6;
    upper = std::min(upper, effective_frequency(s.system, vdw_force_terms(far).F2));
  }
  std::vector<double> weff = detail::linspace(s.drive.omega_d - span, upper, nsw);
  std::vector<double> hval(nsw, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < nsw; ++j) {
    try {
      hval[j] = distance_for_shift(s.system, s.tip, s.system.omega_m - weff[j]);
    } catch (const Error&) {
    }
  }
  std::vector<double> sweep = weff;
  if (by_h) {
    // Equal steps in omega_eff mapped to (ascending) distances.
    for (std::size_t j = 0; j < nsw; ++j)
      if (!std::isfinite(hval[j]))
        throw BracketError("omega_eff = " + format_double(weff[j]) + " rad/s has no tip distance");
    sweep = hval;
  }
  const double setpoint = std::abs(s.operating_point->alpha_c);
  const auto map = response_map(s.problem(), s.tip, s.integrator, phi, sweep,
                                by_h ? SweepAxis::distance : SweepAxis::omega_eff, setpoint, s.threads);

  DataProduct dp;
  dp.experiment = "response-map";
  dp.kind = DataProduct::Kind::matrix;
  dp.axes = {{"phi_m", "rad", phi}, {by_h ? "h" : "omega_eff", by_h ? "m" : "rad/s", sweep}};
  dp.columns = {{"phi_m", "rad"},
                {by_h ? "h" : "omega_eff", by_h ? "m" : "rad/s"},
                {by_h ? "omega_eff" : "h", by_h ? "rad/s" : "m"},
                {"detuning_over_gamma", "1"},
                {"abs_alpha_c", "sqrt(photons)"},
                {"delta_alpha_c", "1"},
                {"status", "-"}};
  for (std::size_t i = 0; i < nphi; ++i)
    for (std::size_t j = 0; j < nsw; ++j) {
      const std::size_t k = i * nsw + j;
      const double we = map.omega_eff[j];
      dp.add_row({phi[i], sweep[j], detail::cell_or_empty(by_h ? we : hval[j]),
                  detail::cell_or_empty((we - s.drive.omega_d) / s.system.gamma),
                  detail::cell_or_empty(map.abs_alpha_c[k]), detail::cell_or_empty(map.delta_alpha_c[k]),
                  map.status[k]});
    }
  dp.provenance["result.setpoint_abs_alpha_c"] = setpoint;
  dp.provenance["result.normalization_abs_alpha_c"] = map.normalization;
  detail::add_provenance(dp, s);
  return dp;
}

inline DataProduct noise_spectrum_product(Scenario& s) {
  resolve_dynamic(s);
  const Config& c = s.config;
  const auto grid = spectrum_grid(s.drive.omega_d, s.derived.omega_eff, s.system.gamma,
                                  c.number("grids.noise_spectrum.span_omega_d"),
                                  std::size_t(c.integer("grids.noise_spectrum.points")),
                                  c.number("grids.noise_spectrum.dense_halfwidth_gamma"),
                                  c.number("grids.noise_spectrum.dense_points_per_gamma"));
  DataProduct dp;
  dp.experiment = "noise-spectrum";
  dp.columns = {{"beta1", "1"}, {"omega", "rad/s"}, {"omega_over_omega_d", "1"},
                {"s_full", "1/Hz"}, {"s_reduced", "1/Hz"}};
  const auto targets = c.numbers("grids.noise_spectrum.beta1");
  for (std::size_t b = 0; b < targets.size(); ++b) {
    ClassicalProblem p = s.problem();
    p.drive.beta_in_mag = drive_for_amplitude(s.system, s.derived.omega_eff, s.drive.omega_d, targets[b]);
    const auto h = steady_state(p, s.integrator);
    const auto m = make_fluctuation_model(p, h);
    const auto full = optical_spectrum_full(grid, m, s.noise, s.threads);
    const auto red = optical_spectrum_reduced(grid, m, s.noise, s.threads);
    for (std::size_t i = 0; i < grid.size(); ++i)
      dp.add_row({targets[b], grid[i], grid[i] / s.drive.omega_d, full.values[i], red.values[i]});
    const std::string key = "result.beta1_" + std::to_string(b);
    dp.provenance[key + ".abs_beta1"] = std::abs(h.beta_1);
    dp.provenance[key + ".max_imag_ratio_full"] = full.max_imag_ratio;
    dp.provenance[key + ".max_imag_ratio_reduced"] = red.max_imag_ratio;
  }
  detail::add_provenance(dp, s);
  return dp;
}

inline DataProduct variance_detuning_product(Scenario& s) {
  resolve_dynamic(s);
  const Config& c = s.config;
  const double span = c.number("grids.variance_detuning.span_gamma") * s.system.gamma;
  const auto det = detail::linspace(-span, span, std::size_t(c.integer("grids.variance_detuning.points")));
  const auto pts = variance_vs_detuning(s.problem(), s.integrator, s.noise, det, s.threads);
  DataProduct dp;
  dp.experiment = "variance-detuning";
  dp.columns = {{"detuning", "rad/s"}, {"detuning_over_gamma", "1"}, {"variance", "1"},
                {"abs_beta1", "1"}, {"linearization_ratio", "1"}, {"status", "-"}};
  for (const auto& p : pts)
    dp.add_row({p.x, p.x / s.system.gamma, detail::cell_or_empty(p.variance), detail::cell_or_empty(p.abs_beta_1),
                detail::cell_or_empty(p.linearization_ratio), p.status});
  detail::add_provenance(dp, s);
  return dp;
}

inline DataProduct variance_drive_product(Scenario& s) {
  resolve_dynamic(s);
  const auto targets = s.config.numbers("grids.variance_drive.beta1");
  const auto pts = variance_vs_drive(s.problem(), s.integrator, s.noise, targets, s.threads);
  DataProduct dp;
  dp.experiment = "variance-drive";
  dp.columns = {{"beta1_target", "1"}, {"abs_beta1", "1"}, {"variance", "1"},
                {"linearization_ratio", "1"}, {"linearization_warning", "-"}, {"status", "-"}};
  for (const auto& p : pts)
    dp.add_row({p.x, detail::cell_or_empty(p.abs_beta_1), detail::cell_or_empty(p.variance),
                detail::cell_or_empty(p.linearization_ratio), p.linearization_warning, p.status});
  detail::add_provenance(dp, s);
  return dp;
}

/// Overrides are applied on top of spec.config before resolution.
inline DataProduct run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Config c = spec.config;
  for (const auto& o : spec.overrides) c.apply_override(o);
  Scenario s = resolve_static(c, spec.threads);
  DataProduct dp;
  if (spec.id == "derive")
    dp = derive_product(s);
  else if (spec.id == "classical")
    dp = classical_product(s);
  else if (spec.id == "response-map")
    dp = response_map_product(s);
  else if (spec.id == "noise-spectrum")
    dp = noise_spectrum_product(s);
  else if (spec.id == "variance-detuning")
    dp = variance_detuning_product(s);
  else
    dp = variance_drive_product(s);
  return dp;
}

}  // namespace bae
