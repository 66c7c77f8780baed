#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>

#include "bae/errors.hpp"

namespace bae {

using complex = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double hbar_si = 1.054571817e-34;

/// Fixed device parameters. Angular frequencies in rad/s, mass in kg.
struct SystemParams {
  double omega_c = two_pi * 4.5e9;
  double omega_m = two_pi * 5.37e6;
  double kappa = two_pi * 1.0e6;
  double gamma = two_pi * 2.3e3;
  double m_eff = 54e-12;
  double g0 = two_pi * 1.0e3;
  double hbar = hbar_si;

  bool resolved_sideband() const { return kappa < omega_m; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidParameter(std::string(name) + " must be positive and finite");
    };
    positive(omega_c, "omega_c");
    positive(omega_m, "omega_m");
    positive(kappa, "kappa");
    positive(gamma, "gamma");
    positive(m_eff, "m_eff");
    if (!(g0 >= 0.0) || !std::isfinite(g0)) throw InvalidParameter("g0 must be non-negative and finite");
    positive(hbar, "hbar");
  }
};

/// Sphere-plane van der Waals interaction; only the product H*R enters.
struct TipSurface {
  double hamaker_radius = 0.071e-18 * 5e-9;
  double h = 0.5e-9;

  static TipSurface from_parts(double hamaker, double r_tip, double h) {
    return TipSurface{hamaker * r_tip, h};
  }

  void validate() const {
    if (!(hamaker_radius >= 0.0) || !std::isfinite(hamaker_radius))
      throw InvalidParameter("hamaker_radius must be non-negative");
    if (!(h > 0.0) || !std::isfinite(h))
      throw InvalidParameter("tip-surface distance h must be positive");
  }
};

/// Two optical pumps at omega_p -/+ omega_d and one mechanical drive at omega_d.
struct DriveConfig {
  complex a_in_minus{1.62e5, 0.0};
  complex a_in_plus{1.62e5, 0.0};
  double delta_pump = 0.0;
  double beta_in_mag = 0.0;
  double phi_m = 0.86 * std::numbers::pi;
  double omega_d = two_pi * 5.37e6;

  void validate() const {
    if (!(omega_d > 0.0) || !std::isfinite(omega_d))
      throw InvalidParameter("omega_d must be positive");
    if (!(beta_in_mag >= 0.0) || !std::isfinite(beta_in_mag))
      throw InvalidParameter("beta_in_mag must be non-negative");
    if (!std::isfinite(delta_pump) || !std::isfinite(phi_m))
      throw InvalidParameter("delta_pump and phi_m must be finite");
    if (!std::isfinite(std::abs(a_in_minus)) || !std::isfinite(std::abs(a_in_plus)))
      throw InvalidParameter("pump amplitudes must be finite");
  }

  bool pumps_off() const { return a_in_minus == 0.0 && a_in_plus == 0.0; }

  /// Pumps centred on the cavity and mechanics driven on resonance.
  bool backaction_evading(double omega_eff, double rel_tol = 1e-9) const {
    return delta_pump == 0.0 && std::abs(omega_d - omega_eff) <= rel_tol * omega_eff;
  }
};

struct DerivedQuantities {
  double x_zpf = 0.0;
  double F1 = 0.0;
  double F2 = 0.0;
  double omega_eff = 0.0;
  double delta_tilde = 0.0;
};

struct ForceTerms {
  double F1;
  double F2;
};

/// Static force and force gradient of U = -HR/(6 h) expanded to second order.
inline ForceTerms vdw_force_terms(const TipSurface& ts) {
  ts.validate();
  const double h = ts.h;
  return ForceTerms{-ts.hamaker_radius / (6.0 * h * h), ts.hamaker_radius / (6.0 * h * h * h)};
}

inline double effective_frequency(const SystemParams& sp, double F2) {
  const double arg = sp.omega_m * sp.omega_m - 2.0 * F2 / sp.m_eff;
  if (!(arg > 0.0)) {
    std::ostringstream os;
    os << "force gradient F2 = " << F2 << " N/m exceeds the mechanical stiffness (omega_m^2 - 2F2/m = "
       << arg << ")";
    throw SnapToContact(os.str());
  }
  return std::sqrt(arg);
}

/// omega_m - omega_eff written without the cancelling subtraction.
inline double frequency_shift(const SystemParams& sp, double F2) {
  const double w = effective_frequency(sp, F2);
  return (2.0 * F2 / sp.m_eff) / (sp.omega_m + w);
}

inline double zero_point_fluctuation(const SystemParams& sp) {
  if (!(sp.m_eff > 0.0) || !(sp.omega_m > 0.0))
    throw InvalidParameter("x_zpf needs positive m_eff and omega_m");
  return std::sqrt(sp.hbar / (2.0 * sp.m_eff * sp.omega_m));
}

inline double shifted_detuning(double delta_pump, double g0, complex beta0) {
  return delta_pump + 2.0 * g0 * beta0.real();
}

/// Distance at which the resonance is pulled down by target_shift (rad/s).
inline double distance_for_shift(const SystemParams& sp, const TipSurface& ts, double target_shift,
                                 double h_max = 1e-6) {
  sp.validate();
  if (!(target_shift > 0.0) || !(target_shift < sp.omega_m))
    throw InvalidParameter("target shift must lie in (0, omega_m)");
  if (!(ts.hamaker_radius > 0.0)) throw BracketError("no interaction: shift is zero at every distance");

  // Below h_snap the oscillator is unstable. shift(h) decreases monotonically above it.
  const double h_snap = std::cbrt(ts.hamaker_radius / (3.0 * sp.m_eff * sp.omega_m * sp.omega_m));
  auto shift_at = [&](double h) {
    return frequency_shift(sp, ts.hamaker_radius / (6.0 * h * h * h));
  };
  double lo = h_snap * (1.0 + 1e-12);
  double hi = h_max;
  if (!(hi > lo)) throw BracketError("upper distance bracket lies below snap-to-contact");
  if (target_shift < shift_at(hi)) {
    std::ostringstream os;
    os << "shift " << target_shift << " rad/s is smaller than the shift at h = " << hi << " m";
    throw BracketError(os.str());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shift_at(mid) > target_shift)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * mid) break;
  }
  return 0.5 * (lo + hi);
}

/// Everything derivable from the device and tip; delta_tilde needs beta0.
inline DerivedQuantities derive(const SystemParams& sp, const TipSurface& ts, double delta_pump = 0.0,
                                complex beta0 = 0.0) {
  sp.validate();
  const auto f = vdw_force_terms(ts);
  DerivedQuantities dq;
  dq.x_zpf = zero_point_fluctuation(sp);
  dq.F1 = f.F1;
  dq.F2 = f.F2;
  dq.omega_eff = effective_frequency(sp, f.F2);
  dq.delta_tilde = shifted_detuning(delta_pump, sp.g0, beta0);
  return dq;
}

}  // namespace bae
