// Command-line front end: single runs, seed sweeps, ledger verification, presets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skytrust/skytrust.hpp"

namespace {

using namespace skytrust;

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

ScenarioConfig base_config(const std::string &file, const std::string &preset_name,
                           const std::vector<std::string> &overrides) {
  ScenarioConfig c = file.empty() ? preset(preset_name.empty() ? "desk-default" : preset_name) : load_config(file);
  if (!file.empty() && !preset_name.empty()) throw ConfigError("preset", "give either --config or --preset, not both");
  if (!overrides.empty()) c = apply_overrides(c, overrides);
  return c;
}

void print_report(const RunResult &r, const std::filesystem::path &dir) {
  const auto &m = r.report;
  std::cout << to_string(m.method) << " seed " << m.seed << ": accuracy " << m.accuracy << ", detection "
            << m.detection_rate << ", overhead " << m.comm_overhead_mb_per_uav << " MB/UAV, energy/tx "
            << m.energy_per_transaction << " J, convergence ";
  if (m.convergence_rounds) std::cout << *m.convergence_rounds;
  else std::cout << "N/A";
  std::cout << "\n  -> " << dir.string() << "\n";
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"skytrust: trust, consensus and federated-learning simulator for UAV networks"};
  app.require_subcommand(1);

  std::string config_file, preset_name, out_dir = "results", trace_file;
  std::vector<std::string> overrides;

  auto *run = app.add_subcommand("run", "run one method on one seed");
  std::string method;
  std::uint64_t seed = 0;
  run->add_option("--config", config_file, "scenario JSON file")->check(CLI::ExistingFile);
  run->add_option("--preset", preset_name, "named scenario (see `presets`)");
  run->add_option("--method", method, "dtsam | cte | sbst");
  run->add_option("--seed", seed, "random seed");
  run->add_option("--out", out_dir, "output root directory");
  run->add_option("--set", overrides, "override a config value, e.g. --set trust.alpha=0.6");
  run->add_option("--trace", trace_file, "write a per-round position/energy/trust CSV here");

  auto *sw = app.add_subcommand("sweep", "run several methods over several seeds");
  std::string seeds_arg = "1,2,3,4,5,6,7,8,9,10", methods_arg = "dtsam,cte,sbst";
  unsigned threads = 0;
  sw->add_option("--config", config_file, "scenario JSON file")->check(CLI::ExistingFile);
  sw->add_option("--preset", preset_name, "named scenario (see `presets`)");
  sw->add_option("--seeds", seeds_arg, "comma-separated seeds");
  sw->add_option("--methods", methods_arg, "comma-separated methods");
  sw->add_option("--out", out_dir, "output directory");
  sw->add_option("--set", overrides, "override a config value");
  sw->add_option("--threads", threads, "concurrent runs (0 = one per core)");

  auto *verify = app.add_subcommand("verify-ledger", "check the hash chain of an exported ledger");
  std::string ledger_file;
  verify->add_option("file", ledger_file, "ledger.ndjson")->required();

  auto *list = app.add_subcommand("presets", "list named scenarios");
  bool show_json = false;
  list->add_flag("--json", show_json, "print each preset's full configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig c = base_config(config_file, preset_name, overrides);
      if (!method.empty()) c.method = method_from_string(method);
      if (run->count("--seed")) c.seed = seed;
      validate(c);
      std::ofstream trace;
      if (!trace_file.empty()) {
        trace.open(trace_file);
        if (!trace) throw Error("cannot write " + trace_file);
      }
      const auto r = run_experiment(c, trace_file.empty() ? nullptr : &trace);
      print_report(r, write_outputs(r, out_dir));
    } else if (*sw) {
      const ScenarioConfig c = base_config(config_file, preset_name, overrides);
      std::vector<std::uint64_t> seeds;
      for (const auto &s : split(seeds_arg, ',')) {
        try {
          seeds.push_back(std::stoull(s));
        } catch (const std::exception &) {
          throw ConfigError("seeds", "not an integer: '" + s + "'");
        }
      }
      std::vector<Method> methods;
      for (const auto &m : split(methods_arg, ',')) methods.push_back(method_from_string(m));
      const auto s = sweep(c, seeds, methods, threads);
      write_sweep_outputs(s, out_dir);
      write_table_csv(std::cout, s);
      std::cout << "-> " << out_dir << "\n";
    } else if (*verify) {
      std::ifstream in(ledger_file);
      if (!in) throw Error("cannot open " + ledger_file);
      const auto ledger = import_ndjson(in);
      const auto status = ledger.verify();
      if (status.valid) {
        std::cout << "Valid (" << ledger.size() << " blocks)\n";
        return 0;
      }
      std::cout << "Corrupt(" << status.corrupt_height << ")\n";
      return 2;
    } else if (*list) {
      for (const auto &p : presets()) {
        if (show_json) std::cout << p.name << " " << to_json(p.config).dump() << "\n";
        else std::cout << p.name << "\t" << p.description << "\n";
      }
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
