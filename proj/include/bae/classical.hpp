#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bae/errors.hpp"
#include "bae/model.hpp"
#include "bae/parallel.hpp"

namespace bae {

/// alpha in the frame rotating at the pump centre, beta in the lab frame.
struct ClassicalState {
  complex alpha{0.0, 0.0};
  complex beta{0.0, 0.0};
  double t = 0.0;
};

struct StateDerivative {
  complex dalpha;
  complex dbeta;
};

struct ClassicalProblem {
  SystemParams system;
  DerivedQuantities derived;
  DriveConfig drive;

  void validate() const {
    system.validate();
    drive.validate();
    if (!(derived.omega_eff > 0.0)) throw InvalidParameter("omega_eff must be positive");
    if (!(derived.x_zpf > 0.0)) throw InvalidParameter("x_zpf must be positive");
  }
};

/// Right-hand side of the classical mean-field equations.
inline StateDerivative classical_rhs(const ClassicalState& s, const SystemParams& sp,
                                     const DerivedQuantities& dq, const DriveConfig& dc) {
  const complex i{0.0, 1.0};
  const complex e = std::polar(1.0, dc.omega_d * s.t);
  const double x = 2.0 * s.beta.real();
  StateDerivative d;
  d.dalpha = i * dc.delta_pump * s.alpha + i * sp.g0 * s.alpha * x - 0.5 * sp.kappa * s.alpha -
             std::sqrt(sp.kappa) * (dc.a_in_minus * e + dc.a_in_plus * std::conj(e));
  d.dbeta = -i * dq.omega_eff * s.beta + i * sp.g0 * std::norm(s.alpha) +
            i * dq.F1 * dq.x_zpf / sp.hbar - 0.5 * sp.gamma * s.beta -
            std::sqrt(sp.gamma) * dc.beta_in_mag * std::polar(1.0, -dc.phi_m) * std::conj(e);
  return d;
}

struct IntegratorConfig {
  double dt = 0.0;
  double t_transient = 0.0;
  double t_window = 0.0;
  std::string method = "rk4";
  double convergence_tol = 1e-8;
  int max_windows = 4000;
  double residual_threshold = 1e-3;
  double linearization_limit = 0.1;

  /// dt = T/steps_per_period, transient in units of 1/gamma, window in drive periods.
  static IntegratorConfig for_drive(double omega_d, double gamma, int steps_per_period = 64,
                                    double transient_over_gamma = 10.0, int window_periods = 32) {
    const double period = two_pi / omega_d;
    IntegratorConfig c;
    c.dt = period / steps_per_period;
    c.t_transient = transient_over_gamma / gamma;
    c.t_window = window_periods * period;
    return c;
  }
};

/// Same steps per period and window length in periods at a new drive frequency.
inline IntegratorConfig retarget(IntegratorConfig cfg, double omega_d_old, double omega_d_new) {
  if (omega_d_old == omega_d_new) return cfg;
  const double r = omega_d_old / omega_d_new;
  cfg.dt *= r;
  cfg.t_window *= r;
  return cfg;
}

namespace detail {

inline long integer_ratio(double value, const char* what) {
  const double r = std::round(value);
  if (!(r >= 1.0) || std::abs(value - r) > 1e-6 * r) {
    std::ostringstream os;
    os << what << " must be an integer (got " << value << ")";
    throw AlignmentError(os.str());
  }
  return static_cast<long>(r);
}

struct Grid {
  long steps_per_period;
  long window_periods;
};

inline Grid check_integrator(const IntegratorConfig& cfg, double omega_d) {
  if (cfg.method != "rk4") throw InvalidParameter("unknown integrator method '" + cfg.method + "'");
  if (!(cfg.dt > 0.0)) throw InvalidParameter("dt must be positive");
  if (cfg.dt > two_pi / (50.0 * omega_d) * (1.0 + 1e-12))
    throw InvalidParameter("dt exceeds 2*pi/(50*omega_d)");
  if (!(cfg.t_transient >= 0.0)) throw InvalidParameter("transient must be non-negative");
  if (!(cfg.convergence_tol > 0.0)) throw InvalidParameter("convergence tolerance must be positive");
  if (cfg.max_windows < 1) throw InvalidParameter("max_windows must be at least 1");
  const double period = two_pi / omega_d;
  Grid g;
  g.steps_per_period = integer_ratio(period / cfg.dt, "drive period / dt");
  g.window_periods = integer_ratio(cfg.t_window / period, "window / drive period");
  if (g.window_periods < 20) throw InvalidParameter("projection window shorter than 20 drive periods");
  return g;
}

/// Fixed-step RK4. The mechanical amplitude is advanced in the frame rotating
/// at omega_d, where it varies on the 1/gamma scale instead of 1/omega_d.
class Stepper {
 public:
  Stepper(const ClassicalProblem& p, const ClassicalState& s0, double dt, long steps_per_period)
      : dt_(dt), t0_(s0.t), m_(steps_per_period), p0_(std::polar(1.0, p.drive.omega_d * s0.t)) {
    const auto& sp = p.system;
    const auto& dq = p.derived;
    const auto& dc = p.drive;
    delta_ = dc.delta_pump;
    g0_ = sp.g0;
    half_kappa_ = 0.5 * sp.kappa;
    pump_m_ = std::sqrt(sp.kappa) * dc.a_in_minus;
    pump_p_ = std::sqrt(sp.kappa) * dc.a_in_plus;
    static_force_ = dq.F1 * dq.x_zpf / sp.hbar;
    mech_rate_ = complex(-0.5 * sp.gamma, -(dq.omega_eff - dc.omega_d));
    mech_drive_ = std::sqrt(sp.gamma) * dc.beta_in_mag * std::polar(1.0, -dc.phi_m);
    table_.resize(2 * m_);
    for (long j = 0; j < 2 * m_; ++j) table_[j] = std::polar(1.0, dc.omega_d * 0.5 * dt * double(j));
    alpha_ = s0.alpha;
    beta_rot_ = s0.beta * p0_;
  }

  /// e^{i omega_d t} at t = t0 + (k + half/2) dt.
  complex phase(long k, int half) const { return p0_ * table_[(2 * k + half) % (2 * m_)]; }

  long step_index() const { return k_; }
  double time() const { return t0_ + double(k_) * dt_; }
  complex alpha() const { return alpha_; }
  complex beta() const { return beta_rot_ * std::conj(phase(k_, 0)); }
  complex beta_rotating() const { return beta_rot_; }
  complex current_phase() const { return phase(k_, 0); }

  void step() {
    const complex e0 = phase(k_, 0), eh = phase(k_, 1), e1 = phase(k_ + 1, 0);
    complex ka1, kb1, ka2, kb2, ka3, kb3, ka4, kb4;
    rhs(alpha_, beta_rot_, e0, ka1, kb1);
    rhs(alpha_ + 0.5 * dt_ * ka1, beta_rot_ + 0.5 * dt_ * kb1, eh, ka2, kb2);
    rhs(alpha_ + 0.5 * dt_ * ka2, beta_rot_ + 0.5 * dt_ * kb2, eh, ka3, kb3);
    rhs(alpha_ + dt_ * ka3, beta_rot_ + dt_ * kb3, e1, ka4, kb4);
    alpha_ += dt_ / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
    beta_rot_ += dt_ / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
    ++k_;
    if (!std::isfinite(alpha_.real()) || !std::isfinite(alpha_.imag()) || !std::isfinite(beta_rot_.real()) ||
        !std::isfinite(beta_rot_.imag())) {
      std::ostringstream os;
      os << "classical state became non-finite at t = " << time() << " s";
      throw DivergenceError(os.str());
    }
  }

 private:
  void rhs(complex a, complex br, complex e, complex& da, complex& db) const {
    const complex b = br * std::conj(e);
    const double x = 2.0 * b.real();
    da = complex(-half_kappa_, delta_ + g0_ * x) * a - (pump_m_ * e + pump_p_ * std::conj(e));
    db = mech_rate_ * br + e * complex(0.0, g0_ * std::norm(a) + static_force_) - mech_drive_;
  }

  double dt_, t0_;
  long m_;
  complex p0_;
  long k_ = 0;
  double delta_ = 0, g0_ = 0, half_kappa_ = 0, static_force_ = 0;
  complex pump_m_, pump_p_, mech_rate_, mech_drive_;
  std::vector<complex> table_;
  complex alpha_, beta_rot_;
};

}  // namespace detail

/// Uniformly sampled trajectory; sample i sits at t0 + i*dt.
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<complex> alpha;
  std::vector<complex> beta;

  std::size_t size() const { return alpha.size(); }
  double time(std::size_t i) const { return t0 + double(i) * dt; }
  ClassicalState state(std::size_t i) const { return ClassicalState{alpha[i], beta[i], time(i)}; }
};

/// Integrates for cfg.t_transient + n_windows * cfg.t_window.
inline Trajectory integrate(const ClassicalState& initial, const ClassicalProblem& p,
                            const IntegratorConfig& cfg, int n_windows = 1) {
  p.validate();
  const auto g = detail::check_integrator(cfg, p.drive.omega_d);
  const long n_tr = static_cast<long>(std::ceil(cfg.t_transient / cfg.dt - 1e-9));
  const long n_steps = n_tr + long(n_windows) * g.window_periods * g.steps_per_period;
  detail::Stepper st(p, initial, cfg.dt, g.steps_per_period);
  Trajectory tr;
  tr.t0 = initial.t;
  tr.dt = cfg.dt;
  tr.alpha.reserve(n_steps + 1);
  tr.beta.reserve(n_steps + 1);
  tr.alpha.push_back(st.alpha());
  tr.beta.push_back(st.beta());
  for (long k = 0; k < n_steps; ++k) {
    st.step();
    tr.alpha.push_back(st.alpha());
    tr.beta.push_back(st.beta());
  }
  return tr;
}

struct HarmonicDecomposition {
  complex alpha_minus{0.0, 0.0};
  complex alpha_c{0.0, 0.0};
  complex alpha_plus{0.0, 0.0};
  complex beta_0{0.0, 0.0};
  complex beta_1{0.0, 0.0};
  double residual = 0.0;
  double linearization_ratio = 0.0;
  bool linearization_ok = true;
  int windows = 0;
};

/// Running lock-in sums over uniformly spaced samples.
class HarmonicAccumulator {
 public:
  /// e = e^{i omega_d t} at the sample time.
  void add(complex e, complex alpha, complex beta) {
    const complex ec = std::conj(e);
    s_am_ += alpha * ec;
    s_ac_ += alpha;
    s_ap_ += alpha * e;
    s_b0_ += beta;
    s_b1_ += beta * e;
    p_a_ += std::norm(alpha);
    p_b_ += std::norm(beta);
    ++n_;
  }

  std::size_t count() const { return n_; }
  void reset() { *this = HarmonicAccumulator{}; }

  HarmonicDecomposition result() const {
    HarmonicDecomposition h;
    if (n_ == 0) return h;
    const double inv = 1.0 / double(n_);
    h.alpha_minus = s_am_ * inv;
    h.alpha_c = s_ac_ * inv;
    h.alpha_plus = s_ap_ * inv;
    h.beta_0 = s_b0_ * inv;
    h.beta_1 = s_b1_ * inv;
    // Parseval: the basis is orthonormal on an integer-period window.
    auto outside = [](double power, double kept) {
      return power > 0.0 ? std::max(0.0, power - kept) / power : 0.0;
    };
    const double ra = outside(p_a_ * inv, std::norm(h.alpha_minus) + std::norm(h.alpha_c) +
                                              std::norm(h.alpha_plus));
    const double rb = outside(p_b_ * inv, std::norm(h.beta_0) + std::norm(h.beta_1));
    h.residual = std::max(ra, rb);
    return h;
  }

 private:
  complex s_am_, s_ac_, s_ap_, s_b0_, s_b1_;
  double p_a_ = 0.0, p_b_ = 0.0;
  std::size_t n_ = 0;
};

/// Lock-in projection of the samples in [t_begin, t_end).
inline HarmonicDecomposition extract_harmonics(const Trajectory& tr, double omega_d, double t_begin,
                                               double t_end) {
  if (!(tr.dt > 0.0)) throw AlignmentError("trajectory has no time step");
  detail::integer_ratio((t_end - t_begin) * omega_d / two_pi, "projection window in drive periods");
  const long per_period = detail::integer_ratio(two_pi / (omega_d * tr.dt), "samples per drive period");
  (void)per_period;
  const double first = (t_begin - tr.t0) / tr.dt;
  const long i0 = std::lround(first);
  const long count = std::lround((t_end - t_begin) / tr.dt);
  if (std::abs(first - double(i0)) > 1e-6 || i0 < 0 || std::size_t(i0 + count) > tr.size())
    throw AlignmentError("projection window does not fall on trajectory samples");
  HarmonicAccumulator acc;
  for (long i = i0; i < i0 + count; ++i)
    acc.add(std::polar(1.0, omega_d * tr.time(std::size_t(i))), tr.alpha[i], tr.beta[i]);
  return acc.result();
}

namespace detail {

inline double max_relative_change(const HarmonicDecomposition& a, const HarmonicDecomposition& b) {
  const double sa = std::max({std::abs(a.alpha_minus), std::abs(a.alpha_c), std::abs(a.alpha_plus)});
  const double sb = std::max(std::abs(a.beta_0), std::abs(a.beta_1));
  auto rel = [](complex x, complex y, double field) {
    const double scale = std::max({std::abs(x), 1e-3 * field, 1e-12});
    return std::abs(x - y) / scale;
  };
  return std::max({rel(a.alpha_minus, b.alpha_minus, sa), rel(a.alpha_c, b.alpha_c, sa),
                   rel(a.alpha_plus, b.alpha_plus, sa), rel(a.beta_0, b.beta_0, sb),
                   rel(a.beta_1, b.beta_1, sb)});
}

}  // namespace detail

/// Integrates from rest, then projects successive windows until the
/// coefficients stop changing.
inline HarmonicDecomposition steady_state(const ClassicalProblem& p, const IntegratorConfig& cfg) {
  p.validate();
  const auto g = detail::check_integrator(cfg, p.drive.omega_d);
  detail::Stepper st(p, ClassicalState{}, cfg.dt, g.steps_per_period);
  const long n_tr = static_cast<long>(std::ceil(cfg.t_transient / cfg.dt - 1e-9));
  for (long k = 0; k < n_tr; ++k) st.step();

  const long per_window = g.window_periods * g.steps_per_period;
  std::optional<HarmonicDecomposition> prev;
  double change = std::numeric_limits<double>::infinity();
  HarmonicAccumulator acc;
  for (int w = 1; w <= cfg.max_windows; ++w) {
    acc.reset();
    for (long k = 0; k < per_window; ++k) {
      acc.add(st.current_phase(), st.alpha(), st.beta());
      st.step();
    }
    auto h = acc.result();
    h.windows = w;
    if (prev) {
      change = detail::max_relative_change(h, *prev);
      if (change < cfg.convergence_tol) {
        h.linearization_ratio = 2.0 * p.system.g0 * std::abs(h.beta_1) / p.system.kappa;
        h.linearization_ok = h.linearization_ratio < cfg.linearization_limit;
        return h;
      }
    }
    prev = h;
  }
  std::ostringstream os;
  os << "steady state not reached after " << cfg.max_windows << " windows (last relative change "
     << change << ", tolerance " << cfg.convergence_tol << ")";
  throw ConvergenceError(os.str());
}

/// Mechanical drive strength that gives |beta_1| = target for the uncoupled oscillator.
inline double drive_for_amplitude(const SystemParams& sp, double omega_eff, double omega_d, double target) {
  return target * std::abs(complex(0.5 * sp.gamma, omega_eff - omega_d)) / std::sqrt(sp.gamma);
}

struct CompensatedSteadyState {
  double delta_pump;
  HarmonicDecomposition harmonics;
  int iterations;
};

/// Chooses the pump-centre detuning so that delta + 2 g0 Re(beta_0) = 0.
inline CompensatedSteadyState compensated_steady_state(ClassicalProblem p, const IntegratorConfig& cfg,
                                                       double tol_over_kappa = 1e-7, int max_iter = 20) {
  const auto& sp = p.system;
  const auto& dq = p.derived;
  // Starting guess: static force only.
  const complex beta0_guess = (dq.F1 * dq.x_zpf / sp.hbar) / complex(dq.omega_eff, -0.5 * sp.gamma);
  p.drive.delta_pump = -2.0 * sp.g0 * beta0_guess.real();
  for (int it = 1; it <= max_iter; ++it) {
    auto h = steady_state(p, cfg);
    const double residual = shifted_detuning(p.drive.delta_pump, sp.g0, h.beta_0);
    if (std::abs(residual) <= tol_over_kappa * sp.kappa) return {p.drive.delta_pump, h, it};
    p.drive.delta_pump -= residual;
  }
  throw ConvergenceError("pump detuning compensation did not converge");
}

enum class SweepAxis { omega_eff, distance };

struct ResponseMap {
  std::vector<double> phi;
  SweepAxis axis = SweepAxis::omega_eff;
  std::vector<double> sweep;      // values of the swept variable (rad/s or m)
  std::vector<double> omega_eff;  // per column
  std::vector<double> abs_alpha_c;  // row-major, phi x sweep
  std::vector<double> delta_alpha_c;
  std::vector<std::string> status;  // "ok" or an error code
  double setpoint = 0.0;
  double normalization = 0.0;

  std::size_t rows() const { return phi.size(); }
  std::size_t cols() const { return sweep.size(); }
};

/// Cell (i, j) holds (|alpha_c| - setpoint) / max|alpha_c| at phi[i], sweep[j].
/// Failed cells are marked and excluded from the normalisation.
inline ResponseMap response_map(const ClassicalProblem& base, const TipSurface& tip, const IntegratorConfig& cfg,
                                const std::vector<double>& phi_grid, const std::vector<double>& sweep_grid,
                                SweepAxis axis, double setpoint, unsigned threads = 1) {
  if (phi_grid.empty() || sweep_grid.empty()) throw InvalidParameter("response map grids must be non-empty");
  ResponseMap map;
  map.phi = phi_grid;
  map.axis = axis;
  map.sweep = sweep_grid;
  map.setpoint = setpoint;
  const std::size_t nr = phi_grid.size(), nc = sweep_grid.size();
  map.omega_eff.assign(nc, std::numeric_limits<double>::quiet_NaN());
  map.abs_alpha_c.assign(nr * nc, std::numeric_limits<double>::quiet_NaN());
  map.delta_alpha_c.assign(nr * nc, std::numeric_limits<double>::quiet_NaN());
  map.status.assign(nr * nc, "ok");

  std::vector<std::optional<DerivedQuantities>> column(nc);
  std::vector<std::string> column_error(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    try {
      DerivedQuantities dq = base.derived;
      if (axis == SweepAxis::omega_eff) {
        dq.omega_eff = sweep_grid[j];
      } else {
        TipSurface t = tip;
        t.h = sweep_grid[j];
        const auto f = vdw_force_terms(t);
        dq.F1 = f.F1;
        dq.F2 = f.F2;
        dq.omega_eff = effective_frequency(base.system, f.F2);
      }
      map.omega_eff[j] = dq.omega_eff;
      column[j] = dq;
    } catch (const Error& e) {
      column_error[j] = e.code();
    }
  }

  parallel_for(nr * nc, threads, [&](std::size_t idx) {
    const std::size_t i = idx / nc, j = idx % nc;
    if (!column[j]) {
      map.status[idx] = column_error[j];
      return;
    }
    ClassicalProblem p = base;
    p.derived = *column[j];
    p.drive.phi_m = phi_grid[i];
    try {
      map.abs_alpha_c[idx] = std::abs(steady_state(p, cfg).alpha_c);
    } catch (const Error& e) {
      map.status[idx] = e.code();
    }
  });

  double mx = 0.0;
  for (std::size_t k = 0; k < nr * nc; ++k)
    if (map.status[k] == "ok") mx = std::max(mx, map.abs_alpha_c[k]);
  map.normalization = mx;
  for (std::size_t k = 0; k < nr * nc; ++k)
    if (map.status[k] == "ok") map.delta_alpha_c[k] = mx > 0.0 ? (map.abs_alpha_c[k] - setpoint) / mx : 0.0;
  return map;
}

}  // namespace bae
