#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bae/config.hpp"
#include "bae/experiments.hpp"

using namespace bae;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST(Config, DefaultsReproduceParameterSet) {
  const Config c;
  EXPECT_EQ(c.number("system.omega_c_hz"), 4.5e9);
  EXPECT_EQ(c.number("system.omega_m_hz"), 5.37e6);
  EXPECT_EQ(c.number("system.kappa_hz"), 1e6);
  EXPECT_EQ(c.number("system.gamma_hz"), 2.3e3);
  EXPECT_EQ(c.number("system.m_eff_kg"), 54e-12);
  EXPECT_EQ(c.number("system.g0_hz"), 1e3);
  EXPECT_NEAR(c.number("tip.hamaker_j") * c.number("tip.r_tip_m"), 3.55e-28, 1e-40);
  EXPECT_EQ(c.number("tip.h_m"), 0.5e-9);
  EXPECT_EQ(c.number("drive.a_in_minus.mag"), 1.62e5);
  EXPECT_EQ(c.number("drive.a_in_plus.mag"), 1.62e5);
  EXPECT_EQ(c.word("drive.omega_d_hz"), "resonant");
}

TEST(Config, EmptyFileGivesDefaults) {
  EXPECT_EQ(load_config(write_temp("bae_empty.json", "")), Config{});
  EXPECT_EQ(load_config(write_temp("bae_blank.json", "  \n")), Config{});
  EXPECT_EQ(load_config("defaults"), Config{});
}

TEST(Config, HertzConvertedAtResolution) {
  Config c;
  c.set("system.kappa_hz", 2.0e6);
  const auto s = resolve_static(c);
  EXPECT_DOUBLE_EQ(s.system.kappa, 2.0 * std::numbers::pi * 2.0e6);
  EXPECT_DOUBLE_EQ(s.drive.omega_d, s.derived.omega_eff);
}

TEST(Config, DistanceOverrideShiftsByOneLinewidth) {
  Config c;
  c.apply_override("tip.h_m=0.131e-9");
  const auto s = resolve_static(c);
  const double shift = frequency_shift(s.system, s.derived.F2);
  EXPECT_NEAR(shift / s.system.gamma, 1.0, 0.01);
}

TEST(Config, UnknownKeyNamed) {
  Config c;
  try {
    c.apply_override("system.kapa_hz=1e6");
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("system.kapa_hz"), std::string::npos);
  }
  const auto path = write_temp("bae_typo.json", R"({"system": {"kapa_hz": 1e6}})");
  EXPECT_THROW(load_config(path), ConfigError);
  EXPECT_THROW(c.set("system", 1.0), ConfigError);
}

TEST(Config, ValueChecksNameThePath) {
  Config c;
  try {
    c.set("system.kappa_hz", -1.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("system.kappa_hz"), std::string::npos);
  }
  EXPECT_THROW(c.set("noise.floquet_order", 1.5), ConfigError);
  EXPECT_THROW(c.set("integrator.window_periods", 10), ConfigError);
  EXPECT_THROW(c.set("drive.omega_d_hz", "fast"), ConfigError);
  EXPECT_THROW(c.set("grids.response_map.axis", "x"), ConfigError);
  EXPECT_THROW(c.set("noise.theta_relative_to_pumps", 1.0), ConfigError);
  EXPECT_NO_THROW(c.set("drive.phi_m_rad", "mid-fringe"));
}

TEST(Config, ParseErrorAndMissingFile) {
  EXPECT_THROW(load_config(write_temp("bae_bad.json", "{ not json")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/bae.json"), IoError);
}

TEST(Config, OverridePrecedencePerKey) {
  const auto path = write_temp("bae_file.json", R"({"system": {"kappa_hz": 2e6, "gamma_hz": 3e3}})");
  Config c = load_config(path);
  c.apply_override("system.kappa_hz=3e6");
  EXPECT_EQ(c.number("system.kappa_hz"), 3e6);      // --set beats file
  EXPECT_EQ(c.number("system.gamma_hz"), 3e3);      // file beats defaults
  EXPECT_EQ(c.number("system.omega_m_hz"), 5.37e6);  // defaults otherwise
}

TEST(Config, OverrideValueParsing) {
  Config c;
  c.apply_override("drive.phi_m_rad=mid-fringe");
  EXPECT_EQ(c.word("drive.phi_m_rad"), "mid-fringe");
  c.apply_override("grids.variance_drive.beta1=[0, 50]");
  EXPECT_EQ(c.numbers("grids.variance_drive.beta1"), (std::vector<double>{0.0, 50.0}));
  c.apply_override("noise.theta_relative_to_pumps=false");
  EXPECT_FALSE(c.flag("noise.theta_relative_to_pumps"));
  EXPECT_THROW(c.apply_override("noise.theta_rad"), ConfigError);
}

TEST(Config, StepMustDividePeriod) {
  Config c;
  c.set("integrator.dt_periods_per_step", 0.013);
  EXPECT_THROW(resolve_static(c), ConfigError);
}

TEST(Config, FlatRoundTrip) {
  Config c;
  c.apply_override("system.kappa_hz=1.25e6");
  c.apply_override("drive.phi_m_rad=mid-fringe");
  c.apply_override("grids.noise_spectrum.beta1=[0, 10, 100]");
  EXPECT_EQ(Config::from_flat(c.flatten()), c);
  EXPECT_EQ(c.flatten().size(), config_schema().size());
}

TEST(Config, SampleConfigsLoad) {
  for (const char* name : {"fig2_map.json", "fig3_thermal.json", "approach_retract.json"})
    EXPECT_NO_THROW(load_config(std::string(BAE_SAMPLES_DIR) + "/" + name)) << name;
}
