#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "bae/data_product.hpp"
#include "bae/errors.hpp"
#include "json.hpp"

namespace bae {

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("unknown output format '" + s + "' (expected csv or json)");
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string cell_text(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
  };
  return std::visit(V{}, c);
}

inline nlohmann::json cell_json(const Cell& c) {
  struct V {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(double v) const { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
    nlohmann::json operator()(long long v) const { return v; }
    nlohmann::json operator()(bool v) const { return v; }
    nlohmann::json operator()(const std::string& v) const { return v; }
  };
  return std::visit(V{}, c);
}

/// Provenance values as bare text: strings unquoted, everything else as JSON.
inline std::string provenance_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

}  // namespace detail

inline void write_csv(const DataProduct& dp, std::ostream& os) {
  os << "# experiment=" << dp.experiment << "\n";
  os << "# kind=" << (dp.kind == DataProduct::Kind::matrix ? "matrix" : "table") << "\n";
  for (const auto& a : dp.axes) os << "# axis=" << a.name << " [" << a.unit << "] n=" << a.values.size() << "\n";
  for (const auto& [k, v] : dp.provenance) os << "# " << k << "=" << detail::provenance_text(v) << "\n";
  for (std::size_t i = 0; i < dp.columns.size(); ++i)
    os << (i ? "," : "") << detail::csv_escape(dp.columns[i].name + " [" + dp.columns[i].unit + "]");
  os << "\n";
  for (const auto& row : dp.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::cell_text(row[i]);
    os << "\n";
  }
}

inline nlohmann::json to_json(const DataProduct& dp) {
  using nlohmann::json;
  json doc;
  doc["experiment"] = dp.experiment;
  doc["kind"] = dp.kind == DataProduct::Kind::matrix ? "matrix" : "table";
  json axes = json::array();
  for (const auto& a : dp.axes) axes.push_back({{"name", a.name}, {"unit", a.unit}, {"values", a.values}});
  doc["axes"] = axes;
  json cols = json::array();
  for (const auto& c : dp.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
  json rows = json::array();
  for (const auto& r : dp.rows) {
    json jr = json::array();
    for (const auto& c : r) jr.push_back(detail::cell_json(c));
    rows.push_back(std::move(jr));
  }
  doc["payload"] = {{"columns", cols}, {"rows", rows}};
  json prov = json::object();
  for (const auto& [k, v] : dp.provenance) prov[k] = v;
  doc["provenance"] = prov;
  return doc;
}

inline void write_json(const DataProduct& dp, std::ostream& os) { os << to_json(dp).dump(1) << "\n"; }

inline void emit(const DataProduct& dp, Format fmt, std::ostream& os) {
  if (fmt == Format::csv)
    write_csv(dp, os);
  else
    write_json(dp, os);
}

inline void emit(const DataProduct& dp, Format fmt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  emit(dp, fmt, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

/// Companion matplotlib script that reads the data file by its base name.
inline std::string plot_script(const DataProduct& dp, Format fmt, const std::string& data_path) {
  const std::string name = std::filesystem::path(data_path).filename().string();
  std::ostringstream s;
  s << "import csv\nimport json\nimport os\n\nimport matplotlib.pyplot as plt\n\n";
  s << "HERE = os.path.dirname(os.path.abspath(__file__))\n";
  s << "DATA = os.path.join(HERE, " << nlohmann::json(name).dump() << ")\n\n\n";
  s << "def load():\n";
  if (fmt == Format::csv) {
    s << "    with open(DATA) as fh:\n";
    s << "        lines = [l for l in fh if not l.startswith('#')]\n";
    s << "    rows = list(csv.reader(lines))\n";
    s << "    header = [h.split(' [')[0] for h in rows[0]]\n";
    s << "    return header, rows[1:]\n\n\n";
  } else {
    s << "    with open(DATA) as fh:\n";
    s << "        doc = json.load(fh)\n";
    s << "    header = [c['name'] for c in doc['payload']['columns']]\n";
    s << "    rows = [['' if v is None else str(v) for v in r] for r in doc['payload']['rows']]\n";
    s << "    return header, rows\n\n\n";
  }
  s << "def column(header, rows, name):\n";
  s << "    i = header.index(name)\n";
  s << "    return [float(r[i]) if r[i] not in ('', 'nan') else float('nan') for r in rows]\n\n\n";
  s << "header, rows = load()\n";
  s << "fig, ax = plt.subplots()\n";
  const std::string exp = dp.experiment;
  if (exp == "response-map") {
    const std::string xname = dp.columns.size() > 1 ? dp.columns[1].name : "";
    s << "phi = sorted(set(column(header, rows, 'phi_m')))\n";
    s << "x = sorted(set(column(header, rows, " << nlohmann::json(xname).dump() << ")))\n";
    s << "z = column(header, rows, 'delta_alpha_c')\n";
    s << "grid = [z[i * len(x):(i + 1) * len(x)] for i in range(len(phi))]\n";
    s << "m = ax.pcolormesh(x, phi, grid, shading='auto', cmap='RdBu_r')\n";
    s << "fig.colorbar(m, ax=ax, label='normalised change of |alpha_c|')\n";
    s << "ax.set_xlabel(" << nlohmann::json(xname).dump() << ")\nax.set_ylabel('phi_m [rad]')\n";
  } else if (exp == "noise-spectrum") {
    s << "beta = column(header, rows, 'beta1')\nw = column(header, rows, 'omega_over_omega_d')\n";
    s << "full = column(header, rows, 's_full')\nred = column(header, rows, 's_reduced')\n";
    s << "for b in sorted(set(beta)):\n";
    s << "    idx = [i for i, v in enumerate(beta) if v == b]\n";
    s << "    ax.semilogy([w[i] for i in idx], [full[i] for i in idx], label=f'full |beta1|={b:g}')\n";
    s << "    ax.semilogy([w[i] for i in idx], [red[i] for i in idx], '--', label=f'reduced |beta1|={b:g}')\n";
    s << "ax.set_xlabel('omega / omega_d')\nax.set_ylabel('S_out')\nax.legend()\n";
  } else if (exp == "variance-detuning") {
    s << "ax.plot(column(header, rows, 'detuning_over_gamma'), column(header, rows, 'variance'), 'o-')\n";
    s << "ax.set_xlabel('(omega_eff - omega_d) / Gamma')\nax.set_ylabel('<X^2>')\n";
  } else if (exp == "variance-drive") {
    s << "ax.plot(column(header, rows, 'abs_beta1'), column(header, rows, 'variance'), 'o-')\n";
    s << "ax.set_xlabel('|beta_1|')\nax.set_ylabel('<X^2>')\n";
  } else {
    s << "k = header.index('abs') if 'abs' in header else 1\n";
    s << "names = [r[0] for r in rows]\nvals = [abs(float(r[k])) for r in rows]\n";
    s << "ax.bar(names, vals)\nax.set_yscale('log')\n";
  }
  s << "ax.set_title(" << nlohmann::json(exp).dump() << ")\n";
  s << "fig.tight_layout()\nplt.show()\n";
  return s.str();
}

}  // namespace bae
