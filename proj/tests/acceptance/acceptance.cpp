// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bae/bae.hpp"

using namespace bae;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string mono_text(bool m) { return m ? "yes" : "no"; }

Scenario settled(Config c = {}) {
  Scenario s = resolve_static(c);
  resolve_dynamic(s);
  return s;
}

// 1. Derived quantities against hand arithmetic.
Verdict derived_quantities() {
  const double hbar = 1.054571817e-34, m = 54e-12, wm = 2 * pi * 5.37e6, hr = 0.071e-18 * 5e-9, h = 0.5e-9;
  const double xzpf = std::sqrt(hbar / (2 * m * wm));
  const double f1 = -hr / (6 * h * h);
  const double f2 = hr / (6 * h * h * h);
  const long double wl = wm;
  const double shift = double(wl - std::sqrt(wl * wl - 2.0L * f2 / m)) / (2 * pi);

  const auto d = derive(SystemParams{}, TipSurface{});
  const double got_shift = frequency_shift(SystemParams{}, d.F2) / (2 * pi);
  const double e = std::max({rel(d.x_zpf, xzpf), rel(d.F1, f1), rel(d.F2, f2), rel(got_shift, shift)});
  Verdict v;
  v.pass = e <= 1e-6 && std::abs(xzpf - 1.7012e-16) < 1e-20 && std::abs(f2 - 0.4733) < 1e-4 &&
           std::abs(f1 + 0.2367e-9) < 1e-13 && std::abs(shift - 41.3) < 0.1;
  v.detail = fmt("x_zpf=%.5e m F2=%.5f N/m shift=%.4f Hz, worst relative error %.1e", d.x_zpf, d.F2, got_shift, e);
  return v;
}

// 2. g0 = 0 Lorentzian over 11 detunings in [-3 gamma, 3 gamma].
Verdict decoupled_lorentzian() {
  Scenario s = resolve_static(Config{});
  auto p = s.problem();
  p.system.g0 = 0.0;
  p.drive.beta_in_mag = 50.0;
  const double g = p.system.gamma, wd = p.drive.omega_d;
  double worst = 0.0;
  for (int j = -5; j <= 5; ++j) {
    auto q = p;
    const double delta = 0.6 * g * j;
    q.derived.omega_eff = wd + delta;
    const double expect = j == 0 ? 2 * 50.0 / std::sqrt(g) : std::sqrt(g) * 50.0 / std::hypot(g / 2, delta);
    worst = std::max(worst, rel(std::abs(steady_state(q, s.integrator).beta_1), expect));
  }
  return {worst <= 1e-6, fmt("worst relative deviation %.2e over 11 detunings", worst)};
}

// 3. Pumps off: vacuum and thermal variance.
Verdict vacuum_thermal() {
  Config c;
  c.set("drive.a_in_minus.mag", 0.0);
  c.set("drive.a_in_plus.mag", 0.0);
  c.set("drive.beta1_target", 0.0);
  const Scenario s = settled(c);
  const auto m = make_fluctuation_model(s.problem(), *s.operating_point);
  NoiseConfig nc = s.noise;
  const double v0 = quadrature_variance(m, nc).variance;
  nc.n_th_mech = 2.0;
  const double v2 = quadrature_variance(m, nc).variance;
  return {std::abs(v0 - 0.5) <= 1e-3 && std::abs(v2 - 2.5) <= 1e-3, fmt("<X^2> = %.6f (vacuum), %.6f (n_m = 2)", v0, v2)};
}

// 4. Balanced pumps, no mechanical drive: near vacuum and pump independent.
Verdict bae_baseline() {
  auto variance_at = [](double pump) {
    Config c;
    c.set("drive.beta1_target", 0.0);
    c.set("drive.a_in_minus.mag", pump);
    c.set("drive.a_in_plus.mag", pump);
    const Scenario s = settled(c);
    return quadrature_variance(make_fluctuation_model(s.problem(), *s.operating_point), s.noise).variance;
  };
  const double v1 = variance_at(1.62e5), v4 = variance_at(4 * 1.62e5);
  const double drift = rel(v4, v1);
  return {std::abs(v1 - 0.5) <= 0.05 * 0.5 && drift <= 0.02,
          fmt("<X^2> = %.5f, x4 pump %.5f (change %.2f%%)", v1, v4, 100 * drift)};
}

struct SpectrumPair {
  std::vector<double> grid;
  SpectrumResult full[2], reduced[2];
  double omega_d = 0, omega_eff = 0, gamma = 0;
};

const SpectrumPair& spectra() {
  static const SpectrumPair sp = [] {
    SpectrumPair r;
    const Scenario s = settled();
    r.omega_d = s.drive.omega_d;
    r.omega_eff = s.derived.omega_eff;
    r.gamma = s.system.gamma;
    r.grid = spectrum_grid(r.omega_d, r.omega_eff, r.gamma, 2.5, 16384, 5.0, 20.0);
    const double target[2] = {0.0, 100.0};
    for (int b = 0; b < 2; ++b) {
      auto p = s.problem();
      p.drive.beta_in_mag = drive_for_amplitude(p.system, p.derived.omega_eff, p.drive.omega_d, target[b]);
      const auto m = make_fluctuation_model(p, steady_state(p, s.integrator));
      r.full[b] = optical_spectrum_full(r.grid, m, s.noise);
      r.reduced[b] = optical_spectrum_reduced(r.grid, m, s.noise);
    }
    return r;
  }();
  return sp;
}

// 5. Driven vs undriven spectra: close away from the features, higher on them.
Verdict spectrum_comparison() {
  const auto& s = spectra();
  const double feats[4] = {s.omega_d, -s.omega_d, 2 * s.omega_eff, -2 * s.omega_eff};
  double worst_out = 0.0, worst_at = 0.0;
  int inside = 0, not_above = 0;
  double not_above_at = 0.0;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const double w = s.grid[i], a = s.full[0].values[i], b = s.full[1].values[i];
    // Gamma-wide: within gamma/2 of the feature.
    const bool near = std::any_of(std::begin(feats), std::end(feats), [&](double f) { return std::abs(w - f) <= 0.5 * s.gamma; });
    if (near) {
      ++inside;
      if (!(b > a)) {
        ++not_above;
        not_above_at = w;
      }
    } else if (rel(b, a) > worst_out) {
      worst_out = rel(b, a);
      worst_at = w;
    }
  }
  Verdict v;
  v.pass = worst_out <= 0.10 && not_above == 0;
  v.detail = fmt("outside: worst deviation %.3g at omega/omega_d = %.6f; ", worst_out, worst_at / s.omega_d) +
             fmt("inside: %.0f of %.0f points not above undriven (e.g. omega/omega_d = %.6f)", not_above, inside,
                 not_above_at / s.omega_d);
  return v;
}

struct DetuningSweep {
  std::vector<VariancePoint> points;
  double gamma = 0;
};

const DetuningSweep& detuning_sweep() {
  static const DetuningSweep d = [] {
    const Scenario s = settled();
    std::vector<double> det(21);
    for (int k = 0; k < 21; ++k) det[k] = 0.2 * s.system.gamma * (k - 10) / 10.0;
    det[10] = 0.0;
    return DetuningSweep{variance_vs_detuning(s.problem(), s.integrator, s.noise, det), s.system.gamma};
  }();
  return d;
}

// 6. Variance against detuning: minimum at zero, even.
Verdict detuning_shape() {
  const auto& pts = detuning_sweep().points;
  for (const auto& p : pts)
    if (p.status != "ok") return {false, "sweep cell failed: " + p.status};
  const auto imin = std::min_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.variance < b.variance; }) - pts.begin();
  double asym = 0.0;
  for (int k = 1; k <= 10; ++k) asym = std::max(asym, rel(pts[10 + k].variance, pts[10 - k].variance));
  return {imin == 10 && asym <= 0.02,
          fmt("minimum at index %.0f (centre 10), <X^2>(0) = %.5f, <X^2>(+-0.2G) = %.5f, asymmetry %.3f%%", double(imin),
              pts[10].variance, pts[20].variance, 100 * asym)};
}

// 7. Variance against drive amplitude: non-decreasing, small excess.
Verdict drive_shape() {
  const Scenario s = settled();
  const auto pts = variance_vs_drive(s.problem(), s.integrator, s.noise, {0.0, 12.5, 25.0, 50.0, 100.0});
  bool mono = true;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].status != "ok") return {false, "sweep cell failed: " + pts[k].status};
    if (k > 0 && pts[k].variance < pts[k - 1].variance) mono = false;
  }
  const auto& det = detuning_sweep().points;
  const double drive_excess = pts.back().variance - pts.front().variance;
  const double detuning_excess = std::min(det[0].variance, det[20].variance) - det[10].variance;
  return {mono && drive_excess < detuning_excess,
          "non-decreasing: " + mono_text(mono) +
              fmt("; excess at |beta_1| = 100: %.3g, at 0.2 gamma detuning: %.3g", drive_excess, detuning_excess)};
}

// 8. Monotonic region around the mid-fringe setpoint.
Verdict monotonic() {
  const Scenario s = settled();
  const auto sp = find_setpoint(s.problem(), s.integrator);
  const auto r = monotonic_region(s.problem(), s.integrator, sp.phi_m, 81, s.system.gamma);
  const double g = s.system.gamma;
  return {r.lower <= -0.2 * g && r.upper >= 0.2 * g,
          fmt("phi_m = %.4f pi, region [%.3f, %.3f] gamma, slope %.3g per rad/s", sp.phi_m / pi, r.lower / g, r.upper / g,
              r.slope)};
}

// 9. Reduced vs full spectra, and Floquet truncation.
Verdict path_equivalence() {
  const auto& s = spectra();
  double worst[2] = {0, 0}, at[2] = {0, 0};
  for (int b = 0; b < 2; ++b) {
    const auto& f = s.full[b].values;
    const double peak = *std::max_element(f.begin(), f.end());
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] < 1e-6 * peak) continue;  // null
      const double e = rel(s.reduced[b].values[i], f[i]);
      if (e > worst[b]) {
        worst[b] = e;
        at[b] = s.grid[i];
      }
    }
  }
  const Scenario sc = settled();
  const auto m = make_fluctuation_model(sc.problem(), *sc.operating_point);
  NoiseConfig n1 = sc.noise, n2 = sc.noise;
  n1.floquet_order = 1;
  n2.floquet_order = 2;
  const double v1 = quadrature_variance(m, n1).variance, v2 = quadrature_variance(m, n2).variance;
  const double dn = rel(v1, v2);
  return {worst[0] <= 0.05 && worst[1] <= 0.05 && dn < 0.01,
          fmt("reduced vs full worst %.3g (undriven), %.3g (|beta_1| = 100, at omega/omega_d = %.6f); ", worst[0], worst[1],
              at[1] / s.omega_d) +
              fmt("N = 1 vs 2 changes <X^2> by %.2e", dn)};
}

// 10. Determinism, config round trip and exit codes through the command line.
struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "baesim");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Verdict determinism_io() {
  std::vector<std::string> problems;
  const std::vector<std::vector<std::string>> specs = {
      {"derive"},
      {"classical"},
      {"response-map", "--set", "grids.response_map.phi_points=4", "--set", "grids.response_map.sweep_points=3"},
      {"noise-spectrum", "--set", "grids.noise_spectrum.points=64", "--set", "grids.noise_spectrum.dense_points_per_gamma=1"},
      {"variance-detuning", "--set", "grids.variance_detuning.points=3"},
      {"variance-drive", "--set", "grids.variance_drive.beta1=[0,50]"},
  };
  for (const auto& base : specs)
    for (const char* f : {"csv", "json"}) {
      auto a = base;
      a.insert(a.end(), {"--no-timestamp", "--format", f});
      const auto r1 = cli(a), r2 = cli(a);
      if (r1.code != 0 || r2.code != 0 || r1.out != r2.out) problems.push_back(base[0] + "/" + f + " not reproducible");
    }

  // Round trip: provenance -> config file -> identical resolved config.
  {
    const auto r = cli({"derive", "--no-timestamp", "--format", "json", "--set", "noise.n_th_mech=0.25", "--set",
                        "drive.phi_m_rad=mid-fringe", "--set", "grids.variance_drive.beta1=[0,7]"});
    const auto doc = nlohmann::json::parse(r.out);
    nlohmann::json nested = nlohmann::json::object();
    for (auto& [k, v] : doc["provenance"].items())
      if (k.rfind("config.", 0) == 0) nested[nlohmann::json::json_pointer("/" + [&] {
                     std::string p = k.substr(7);
                     std::replace(p.begin(), p.end(), '.', '/');
                     return p;
                   }())] = v;
    const auto path = std::filesystem::temp_directory_path() / "bae_roundtrip.json";
    std::ofstream(path) << nested.dump(1);
    Config expect;
    expect.set("noise.n_th_mech", 0.25);
    expect.set("drive.phi_m_rad", "mid-fringe");
    expect.set("grids.variance_drive.beta1", nlohmann::json::array({0, 7}));
    const Config back = load_config(path.string());
    if (!(back == expect)) problems.push_back("config round trip differs");
    const auto r2 = cli({"derive", "--no-timestamp", "--format", "json", "--config", path.string()});
    if (r2.out != r.out) problems.push_back("re-run from provenance differs");
  }

  // Injected failures, one per error class.
  struct Case {
    std::vector<std::string> args;
    int code;
  };
  const std::vector<Case> cases = {
      {{}, 1},
      {{"fig7"}, 1},
      {{"derive", "--bogus"}, 1},
      {{"derive", "--set", "system.kapa_hz=1"}, 1},
      {{"derive", "--set", "system.kappa_hz=-1"}, 1},
      {{"derive", "--format", "xml"}, 1},
      {{"variance-detuning", "--set", "tip.h_m=1e-11"}, 2},
      {{"classical", "--set", "integrator.max_windows=2", "--set", "integrator.transient_over_gamma=0"}, 2},
      {{"classical", "--set", "drive.phi_m_rad=mid-fringe", "--set", "drive.a_in_minus.mag=0", "--set",
        "drive.a_in_plus.mag=0"},
       2},
      {{"derive", "--config", "/nonexistent/cfg.json"}, 3},
      {{"derive", "--out", "/nonexistent/dir/out.csv"}, 3},
  };
  for (const auto& c : cases) {
    const auto r = cli(c.args);
    if (r.code != c.code || (c.code != 0 && r.err.empty())) {
      std::string joined;
      for (const auto& a : c.args) joined += " " + a;
      problems.push_back("exit " + std::to_string(r.code) + " for" + joined);
    }
  }
  Verdict v;
  v.pass = problems.empty();
  v.detail = v.pass ? "12 reproducible products, round trip exact, 11 injected failures mapped" : "";
  for (const auto& p : problems) v.detail += p + "; ";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"derived quantities", derived_quantities},
      {"decoupled Lorentzian", decoupled_lorentzian},
      {"vacuum and thermal variance", vacuum_thermal},
      {"backaction-evading baseline", bae_baseline},
      {"driven vs undriven spectra", spectrum_comparison},
      {"variance vs detuning", detuning_shape},
      {"variance vs drive", drive_shape},
      {"monotonic region", monotonic},
      {"reduced vs full path", path_equivalence},
      {"determinism and IO", determinism_io},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += v.pass ? 0 : 1;
    std::printf("%s %2zu %-28s %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
