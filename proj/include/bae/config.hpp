#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bae/errors.hpp"
#include "json.hpp"

namespace bae {

using json = nlohmann::json;

/// Value kinds accepted at a configuration leaf.
enum class KeyKind {
  positive,       // finite number > 0
  non_negative,   // finite number >= 0
  real,           // any finite number
  integer,        // integer >= minimum
  boolean,
  number_or_word, // finite number or one of `words`
  word,           // one of `words`
  number_list,    // non-empty array of finite numbers
};

struct KeySpec {
  std::string path;
  json default_value;
  KeyKind kind;
  std::vector<std::string> words{};
  long minimum = 0;
  std::string doc{};
};

/// Every recognised key, its default and its admissible values.
inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = {
      {"system.omega_c_hz", 4.5e9, KeyKind::positive, {}, 0, "cavity frequency omega_c/2pi [Hz]"},
      {"system.omega_m_hz", 5.37e6, KeyKind::positive, {}, 0, "bare mechanical frequency omega_m/2pi [Hz]"},
      {"system.kappa_hz", 1.0e6, KeyKind::positive, {}, 0, "cavity decay kappa/2pi [Hz]"},
      {"system.gamma_hz", 2.3e3, KeyKind::positive, {}, 0, "mechanical decay Gamma/2pi [Hz]"},
      {"system.m_eff_kg", 54e-12, KeyKind::positive, {}, 0, "effective mass [kg]"},
      {"system.g0_hz", 1.0e3, KeyKind::non_negative, {}, 0, "single-photon coupling g0/2pi [Hz]"},
      {"tip.hamaker_j", 0.071e-18, KeyKind::non_negative, {}, 0, "Hamaker constant H [J]"},
      {"tip.r_tip_m", 5e-9, KeyKind::non_negative, {}, 0, "tip radius [m]"},
      {"tip.h_m", 0.5e-9, KeyKind::positive, {}, 0, "tip-surface distance [m]"},
      {"drive.a_in_minus.mag", 1.62e5, KeyKind::non_negative, {}, 0, "lower pump amplitude [sqrt(photons/s)]"},
      {"drive.a_in_minus.phase_rad", 0.0, KeyKind::real, {}, 0, "lower pump phase [rad]"},
      {"drive.a_in_plus.mag", 1.62e5, KeyKind::non_negative, {}, 0, "upper pump amplitude [sqrt(photons/s)]"},
      {"drive.a_in_plus.phase_rad", 0.0, KeyKind::real, {}, 0, "upper pump phase [rad]"},
      {"drive.delta_hz", "compensate", KeyKind::number_or_word, {"compensate"}, 0,
       "pump-centre detuning Delta/2pi [Hz]; 'compensate' cancels the static shift"},
      {"drive.beta_in_mag", "auto", KeyKind::number_or_word, {"auto"}, 0,
       "mechanical drive |beta_in| [sqrt(phonons/s)]; 'auto' targets beta1_target"},
      {"drive.beta1_target", 100.0, KeyKind::non_negative, {}, 0, "|beta_1| aimed for by beta_in_mag = 'auto'"},
      {"drive.phi_m_rad", 0.86 * std::numbers::pi, KeyKind::number_or_word, {"mid-fringe"}, 0,
       "mechanical drive phase [rad] or 'mid-fringe'"},
      {"drive.omega_d_hz", "resonant", KeyKind::number_or_word, {"resonant"}, 0,
       "mechanical drive frequency [Hz]; 'resonant' uses omega_eff"},
      {"noise.n_th_cavity", 0.0, KeyKind::non_negative, {}, 0, "thermal photon occupancy"},
      {"noise.n_th_mech", 0.0, KeyKind::non_negative, {}, 0, "thermal phonon occupancy"},
      {"noise.floquet_order", 1, KeyKind::integer, {}, 1, "Fourier truncation N"},
      {"noise.theta_rad", 0.0, KeyKind::real, {}, 0, "quadrature angle [rad]"},
      {"noise.theta_relative_to_pumps", true, KeyKind::boolean, {}, 0,
       "measure theta from the quadrature coupled to the pumps"},
      {"integrator.dt_periods_per_step", 1.0 / 64.0, KeyKind::positive, {}, 0, "time step in drive periods"},
      {"integrator.transient_over_gamma", 10.0, KeyKind::non_negative, {}, 0, "transient length in units of 1/Gamma"},
      {"integrator.window_periods", 32, KeyKind::integer, {}, 20, "projection window in drive periods"},
      {"integrator.tol", 1e-8, KeyKind::positive, {}, 0, "relative change between windows"},
      {"integrator.max_windows", 4000, KeyKind::integer, {}, 1, "window budget before giving up"},
      {"integrator.residual_threshold", 1e-3, KeyKind::positive, {}, 0, "largest admissible ansatz residual"},
      {"integrator.linearization_limit", 0.1, KeyKind::positive, {}, 0, "threshold on 2 g0 |beta_1| / kappa"},
      {"grids.response_map.phi_points", 96, KeyKind::integer, {}, 2, "phi_m samples over [0, 2pi)"},
      {"grids.response_map.sweep_points", 81, KeyKind::integer, {}, 2, "samples of the swept axis"},
      {"grids.response_map.span_gamma", 1.0, KeyKind::positive, {}, 0, "omega_eff half-span in units of Gamma"},
      {"grids.response_map.axis", "omega_eff", KeyKind::word, {"omega_eff", "h"}, 0, "swept variable"},
      {"grids.noise_spectrum.span_omega_d", 2.5, KeyKind::positive, {}, 0, "half-span in units of omega_d"},
      {"grids.noise_spectrum.points", 16384, KeyKind::integer, {}, 2, "uniform background points"},
      {"grids.noise_spectrum.dense_halfwidth_gamma", 5.0, KeyKind::positive, {}, 0,
       "refinement half-width around each feature [Gamma]"},
      {"grids.noise_spectrum.dense_points_per_gamma", 20.0, KeyKind::positive, {}, 0, "refinement density"},
      {"grids.noise_spectrum.beta1", json::array({0.0, 100.0}), KeyKind::number_list, {}, 0,
       "|beta_1| values to compare"},
      {"grids.variance_detuning.points", 21, KeyKind::integer, {}, 1, "detuning samples"},
      {"grids.variance_detuning.span_gamma", 0.2, KeyKind::non_negative, {}, 0, "detuning half-span [Gamma]"},
      {"grids.variance_drive.beta1", json::array({0.0, 12.5, 25.0, 50.0, 100.0}), KeyKind::number_list, {}, 0,
       "|beta_1| targets"},
      {"grids.setpoint.phi_points", 64, KeyKind::integer, {}, 8, "phase scan used to locate the fringe"},
      {"grids.setpoint.edge", "rising", KeyKind::word, {"rising", "falling"}, 0, "fringe edge for mid-fringe"},
      {"grids.monotonic.points", 81, KeyKind::integer, {}, 3, "detuning samples for the monotonic cut"},
      {"grids.monotonic.span_gamma", 1.0, KeyKind::positive, {}, 0, "cut half-span [Gamma]"},
      {"grids.monotonic.noise_floor", 1e-9, KeyKind::non_negative, {}, 0, "smallest significant difference"},
  };
  return schema;
}

namespace detail {

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string item;
  while (std::getline(ss, item, '.')) parts.push_back(item);
  return parts;
}

inline json::json_pointer pointer(const std::string& path) {
  std::string p;
  for (const auto& part : split_path(path)) p += "/" + part;
  return json::json_pointer(p);
}

inline const KeySpec* find_key(const std::string& path) {
  for (const auto& k : config_schema())
    if (k.path == path) return &k;
  return nullptr;
}

inline bool is_section(const std::string& path) {
  const std::string prefix = path + ".";
  for (const auto& k : config_schema())
    if (k.path.compare(0, prefix.size(), prefix) == 0) return true;
  return false;
}

inline bool finite_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

inline void check_value(const KeySpec& k, const json& v) {
  auto fail = [&](const std::string& why) { throw ConfigError("key '" + k.path + "': " + why); };
  auto word_ok = [&](const json& w) {
    return w.is_string() && std::find(k.words.begin(), k.words.end(), w.get<std::string>()) != k.words.end();
  };
  switch (k.kind) {
    case KeyKind::positive:
      if (!finite_number(v) || !(v.get<double>() > 0.0)) fail("expected a positive number");
      break;
    case KeyKind::non_negative:
      if (!finite_number(v) || !(v.get<double>() >= 0.0)) fail("expected a non-negative number");
      break;
    case KeyKind::real:
      if (!finite_number(v)) fail("expected a finite number");
      break;
    case KeyKind::integer:
      if (!v.is_number_integer() && !(finite_number(v) && v.get<double>() == std::floor(v.get<double>())))
        fail("expected an integer");
      if (v.get<double>() < double(k.minimum)) fail("must be at least " + std::to_string(k.minimum));
      break;
    case KeyKind::boolean:
      if (!v.is_boolean()) fail("expected true or false");
      break;
    case KeyKind::number_or_word:
      if (!finite_number(v) && !word_ok(v)) fail("expected a number or '" + k.words.front() + "'");
      break;
    case KeyKind::word:
      if (!word_ok(v)) {
        std::string opts;
        for (const auto& w : k.words) opts += (opts.empty() ? "" : ", ") + w;
        fail("expected one of: " + opts);
      }
      break;
    case KeyKind::number_list:
      if (!v.is_array() || v.empty()) fail("expected a non-empty list of numbers");
      for (const auto& e : v)
        if (!finite_number(e)) fail("list entries must be finite numbers");
      break;
  }
}

inline json normalise(const KeySpec& k, const json& v) {
  if (k.kind == KeyKind::integer) return json(static_cast<long long>(v.get<double>()));
  if (k.kind == KeyKind::number_list) {
    json out = json::array();
    for (const auto& e : v) out.push_back(e.get<double>());
    return out;
  }
  if (v.is_number() && k.kind != KeyKind::boolean) return json(v.get<double>());
  return v;
}

}  // namespace detail

/// Validated configuration document. All keys are always present.
class Config {
 public:
  Config() {
    for (const auto& k : config_schema()) doc_[detail::pointer(k.path)] = k.default_value;
  }

  const json& document() const { return doc_; }
  const json& at(const std::string& path) const {
    if (!detail::find_key(path)) throw ConfigError("unknown key '" + path + "'");
    return doc_.at(detail::pointer(path));
  }
  double number(const std::string& path) const { return at(path).get<double>(); }
  long long integer(const std::string& path) const { return at(path).get<long long>(); }
  bool flag(const std::string& path) const { return at(path).get<bool>(); }
  bool is_word(const std::string& path) const { return at(path).is_string(); }
  std::string word(const std::string& path) const { return at(path).get<std::string>(); }
  std::vector<double> numbers(const std::string& path) const { return at(path).get<std::vector<double>>(); }

  /// Sets one leaf after validating it against the schema.
  void set(const std::string& path, const json& value) {
    const KeySpec* k = detail::find_key(path);
    if (!k) {
      if (detail::is_section(path)) throw ConfigError("key '" + path + "' is a section, not a value");
      throw ConfigError("unknown key '" + path + "'");
    }
    detail::check_value(*k, value);
    doc_[detail::pointer(path)] = detail::normalise(*k, value);
  }

  /// Overlays a (possibly partial) nested document.
  void merge(const json& overlay, const std::string& prefix = "") {
    if (!overlay.is_object()) {
      if (prefix.empty()) throw ConfigError("configuration document must be an object");
      set(prefix, overlay);
      return;
    }
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
      const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (detail::find_key(path)) {
        set(path, it.value());
      } else if (detail::is_section(path)) {
        if (!it.value().is_object()) throw ConfigError("key '" + path + "' is a section and needs an object");
        merge(it.value(), path);
      } else {
        throw ConfigError("unknown key '" + path + "'");
      }
    }
  }

  /// `section.key=value`; the value is read as JSON, else as a bare string.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    set(assignment.substr(0, eq), parse_scalar(assignment.substr(eq + 1)));
  }

  /// Leaf path -> value, sorted by path.
  std::map<std::string, json> flatten() const {
    std::map<std::string, json> out;
    for (const auto& k : config_schema()) out[k.path] = doc_.at(detail::pointer(k.path));
    return out;
  }

  static Config from_flat(const std::map<std::string, json>& flat) {
    Config c;
    for (const auto& [k, v] : flat) c.set(k, v);
    return c;
  }

  static json parse_scalar(const std::string& text) {
    json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) return json(text);
    return v;
  }

  bool operator==(const Config& o) const { return doc_ == o.doc_; }

 private:
  json doc_ = json::object();
};

/// Reads a JSON config file. An empty file or the path "defaults" gives the defaults.
inline Config load_config(const std::string& path) {
  Config c;
  if (path.empty() || path == "defaults") return c;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); })) return c;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  c.merge(doc);
  return c;
}

}  // namespace bae
