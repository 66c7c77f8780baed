#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bae/experiments.hpp"

using namespace bae;

namespace {

constexpr double pi = std::numbers::pi;

// Compensated operating point at the configured phase.
Scenario settled(Config c = {}) {
  Scenario s = resolve_static(c);
  resolve_dynamic(s);
  return s;
}

const Setpoint& rising_setpoint() {
  static const Setpoint sp = [] {
    const Scenario s = settled();
    return find_setpoint(s.problem(), s.integrator);
  }();
  return sp;
}

}  // namespace

TEST(Experiments, SetpointIsMidFringe) {
  const auto& sp = rising_setpoint();
  EXPECT_NEAR(sp.alpha_c, 0.5 * (sp.alpha_max + sp.alpha_min), 1e-6 * sp.alpha_max);
  EXPECT_GT(sp.contrast(), 0.5);
  EXPECT_GE(sp.phi_m, 0.0);
  EXPECT_LT(sp.phi_m, 2 * pi);
}

TEST(Experiments, FallingEdgeNearDisplayPhase) {
  const Scenario s = settled();
  const auto sp = find_setpoint(s.problem(), s.integrator, 64, FringeEdge::falling);
  // The fringe repeats every pi in phi_m.
  const double d = std::remainder(sp.phi_m - 0.86 * pi, pi);
  EXPECT_LT(std::abs(d), 0.02 * pi) << sp.phi_m / pi;
}

TEST(Experiments, PumpsOffHasNoSetpoint) {
  Scenario s = resolve_static(Config{});
  s.drive.a_in_minus = s.drive.a_in_plus = 0.0;
  EXPECT_THROW(find_setpoint(s.problem(), s.integrator), NoSetpointError);
}

TEST(Experiments, MonotonicRegionAtMidFringe) {
  const Scenario s = settled();
  const auto r = monotonic_region(s.problem(), s.integrator, rising_setpoint().phi_m, 41);
  EXPECT_LE(r.lower, -0.2 * s.system.gamma);
  EXPECT_GE(r.upper, 0.2 * s.system.gamma);
  EXPECT_GE(r.lower, r.detuning.front());
  EXPECT_LE(r.upper, r.detuning.back());
  EXPECT_NE(r.slope, 0.0);
}

TEST(Experiments, MonotonicRegionRejectsFringeExtremum) {
  const Scenario s = settled();
  EXPECT_THROW(monotonic_region(s.problem(), s.integrator, rising_setpoint().phi_max, 41), SetpointInvalidError);
}

TEST(Experiments, MonotonicRegionScalesWithLinewidth) {
  const Scenario wide = settled();
  const auto r1 = monotonic_region(wide.problem(), wide.integrator, rising_setpoint().phi_m, 41);
  Config c;
  c.set("system.gamma_hz", 1.15e3);
  Scenario narrow = settled(c);
  const auto sp = find_setpoint(narrow.problem(), narrow.integrator);
  const auto r2 = monotonic_region(narrow.problem(), narrow.integrator, sp.phi_m, 41);
  // Same span in units of gamma, so the bounds halve in rad/s up to one grid step.
  const double step = narrow.system.gamma / 20.0;
  EXPECT_NEAR(r2.upper, 0.5 * r1.upper, step);
  EXPECT_NEAR(r2.lower, 0.5 * r1.lower, step);
}

TEST(Experiments, MidFringeResolution) {
  Config c;
  c.set("drive.phi_m_rad", "mid-fringe");
  const Scenario s = settled(c);
  ASSERT_TRUE(s.setpoint.has_value());
  EXPECT_NEAR(s.drive.phi_m, rising_setpoint().phi_m, 1e-6);
  EXPECT_LE(std::abs(s.derived.delta_tilde), 1e-7 * s.system.kappa);
}

TEST(Experiments, SpectrumGridCoversFeatures) {
  const double wd = 3.37e7, we = 3.37e7, g = 1.4e4;
  const auto grid = spectrum_grid(wd, we, g, 2.5, 1001, 5.0, 20.0);
  ASSERT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(std::adjacent_find(grid.begin(), grid.end()), grid.end());
  EXPECT_GE(grid.front(), -2.5 * wd);
  EXPECT_LE(grid.back(), 2.5 * wd);
  for (double f : {0.0, wd, -wd, 2 * wd, -2 * wd}) {
    const auto n = std::count_if(grid.begin(), grid.end(), [&](double w) { return std::abs(w - f) <= g; });
    EXPECT_GE(n, 40) << f;
  }
}

TEST(Experiments, UnknownExperimentRejected) {
  EXPECT_THROW(run_experiment(ExperimentSpec{"fig4", Config{}}), ConfigError);
  ExperimentSpec spec{"derive", Config{}};
  spec.overrides = {"system.nope=1"};
  EXPECT_THROW(run_experiment(spec), ConfigError);
}

TEST(Experiments, ClassicalProductIsDeterministic) {
  const auto a = run_experiment(ExperimentSpec{"classical", Config{}});
  const auto b = run_experiment(ExperimentSpec{"classical", Config{}});
  ASSERT_EQ(a.rows.size(), 5u);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.provenance, b.provenance);
  EXPECT_EQ(std::get<std::string>(a.rows[4][0]), "beta_1");
  EXPECT_NEAR(std::get<double>(a.rows[4][3]), 100.0, 1e-3);
}

TEST(Experiments, ProvenanceRebuildsConfig) {
  Config c;
  c.set("noise.n_th_mech", 0.5);
  c.set("grids.variance_drive.beta1", nlohmann::json::array({0, 50}));
  const auto dp = run_experiment(ExperimentSpec{"derive", c});
  std::map<std::string, nlohmann::json> flat;
  for (const auto& [k, v] : dp.provenance)
    if (k.rfind("config.", 0) == 0) flat[k.substr(7)] = v;
  EXPECT_EQ(Config::from_flat(flat), c);
}

TEST(Experiments, SweepCellsFailIndividually) {
  const Scenario s = resolve_static(Config{});
  auto cfg = s.integrator;
  cfg.max_windows = 2;
  cfg.t_transient = 0.0;
  const auto pts = variance_vs_detuning(s.problem(), cfg, s.noise, {-100.0, 0.0, 100.0});
  ASSERT_EQ(pts.size(), 3u);
  for (const auto& p : pts) {
    EXPECT_EQ(p.status, "no-convergence");
    EXPECT_TRUE(std::isnan(p.variance));
  }
}

TEST(Experiments, DriveSweepLinearizationFlag) {
  Config c;
  c.set("grids.variance_drive.beta1", nlohmann::json::array({10, 100}));
  const auto dp = run_experiment(ExperimentSpec{"variance-drive", c});
  EXPECT_FALSE(std::get<bool>(dp.rows[0][4]));
  EXPECT_TRUE(std::get<bool>(dp.rows[1][4]));  // 2 g0 |beta_1| / kappa = 0.2
}
