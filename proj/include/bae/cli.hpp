#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bae/config.hpp"
#include "bae/emit.hpp"
#include "bae/errors.hpp"
#include "bae/experiments.hpp"

namespace bae {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_physics = 2, exit_io = 3 };

inline int exit_code_for(const Error& e) {
  switch (e.error_class()) {
    case ErrorClass::usage:
      return exit_usage;
    case ErrorClass::io:
      return exit_io;
    default:
      return exit_physics;
  }
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Companion script path: <stem>_plot.py next to the data file.
inline std::string plot_script_path(const std::string& data_path) {
  std::filesystem::path p(data_path);
  return (p.parent_path() / (p.stem().string() + "_plot.py")).string();
}

struct CliOptions {
  std::string config_path = "defaults";
  std::string out_path;
  std::string format = "csv";
  std::vector<std::string> overrides;
  unsigned threads = 1;
  bool no_timestamp = false;
  bool plot_script = false;
};

/// The whole command line in-process; out/err stand in for stdout/stderr.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Force-gradient sensing with a driven resonator and a two-tone backaction-evading readout",
               "baesim"};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1, 1);
  CliOptions opt;
  std::string chosen;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"derive", "x_zpf, force terms and omega_eff at the configured distance"},
      {"classical", "steady-state harmonics at the operating point"},
      {"response-map", "|alpha_c| change over drive phase and resonance shift"},
      {"noise-spectrum", "full and reduced optical output spectra"},
      {"variance-detuning", "quadrature variance against omega_eff - omega_d"},
      {"variance-drive", "quadrature variance against the mechanical drive amplitude"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "JSON config file, or 'defaults'");
    sub->add_option("--out", opt.out_path, "output file (default: stdout)");
    sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--set", opt.overrides, "section.key=value override (repeatable)")->allow_extra_args(false);
    sub->add_option("--threads", opt.threads, "parallel sweep width")->check(CLI::Range(1u, 1024u));
    sub->add_flag("--no-timestamp", opt.no_timestamp, "omit the timestamp from provenance");
    sub->add_flag("--plot-script", opt.plot_script, "also write <stem>_plot.py next to --out");
  }

  try {
    app.parse(argc, argv);
    chosen = app.get_subcommands().front()->get_name();
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << tool_version << "\n";
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "baesim: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    if (opt.plot_script && opt.out_path.empty()) throw ConfigError("--plot-script needs --out");
    const Format fmt = parse_format(opt.format);
    ExperimentSpec spec;
    spec.id = chosen;
    spec.config = load_config(opt.config_path);
    spec.overrides = opt.overrides;
    spec.output_path = opt.out_path;
    spec.threads = opt.threads;
    spec.timestamp = !opt.no_timestamp;
    DataProduct dp = run_experiment(spec);
    dp.provenance["experiment"] = spec.id;
    if (spec.timestamp) dp.provenance["timestamp"] = utc_timestamp();
    if (opt.out_path.empty()) {
      emit(dp, fmt, out);
    } else {
      emit(dp, fmt, opt.out_path);
      if (opt.plot_script) {
        const std::string script = plot_script_path(opt.out_path);
        std::ofstream ps(script, std::ios::binary | std::ios::trunc);
        if (!ps) throw IoError("cannot open '" + script + "' for writing");
        ps << plot_script(dp, fmt, opt.out_path);
        if (!ps) throw IoError("failed writing '" + script + "'");
      }
    }
    return exit_ok;
  } catch (const Error& e) {
    err << "baesim: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "baesim: internal error: " << e.what() << "\n";
    return exit_physics;
  }
}

}  // namespace bae
