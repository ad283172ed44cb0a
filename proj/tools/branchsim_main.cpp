// branchsim: scenario runner for bipartite dissipation/decoherence studies.
//
//   branchsim run <config>
//   branchsim sweep <config> --param K --values 2,4,6,8
//   branchsim check [--filter name] [--out dir]
//
// Exit codes: 0 ok, 2 bad config, 3 numerical failure, 4 capacity exceeded.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "branchsim/errors.hpp"
#include "branchsim/oracles.hpp"
#include "branchsim/scenario.hpp"

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const branchsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const branchsim::CapacityExceeded& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 4;
  } catch (const branchsim::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branchsim: mean-field branch dynamics and dissipation studies"};
  app.require_subcommand(1);

  std::string run_config;
  CLI::App* run_cmd = app.add_subcommand("run", "execute one scenario from a config file");
  run_cmd->add_option("config", run_config, "path to key=value config")->required();

  std::string sweep_config, sweep_param, sweep_values;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a scenario across parameter values");
  sweep_cmd->add_option("config", sweep_config, "path to key=value config")->required();
  sweep_cmd->add_option("--param", sweep_param, "swept parameter (K, gScale, dt, branches)")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();

  std::string check_filter, check_out = "out-check";
  CLI::App* check_cmd = app.add_subcommand("check", "run the oracle cross-check battery");
  check_cmd->add_option("--filter", check_filter, "substring filter on check names");
  check_cmd->add_option("--out", check_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    return guarded([&] {
      const branchsim::ScenarioConfig cfg = branchsim::parse_config_file(run_config);
      const branchsim::ScenarioOutcome out = branchsim::run_scenario(cfg);
      std::cout << "wrote " << out.trajectory_path << "\n";
      std::cout << "wrote " << out.summary_path << "\n";
      return 0;
    });
  }
  if (sweep_cmd->parsed()) {
    return guarded([&] {
      const branchsim::ScenarioConfig cfg = branchsim::parse_config_file(sweep_config);
      const branchsim::ScenarioOutcome out =
          branchsim::run_sweep(cfg, sweep_param, split_csv(sweep_values));
      std::cout << "wrote " << out.summary_path << "\n";
      return 0;
    });
  }
  // check
  return guarded([&] {
    branchsim::ScenarioConfig cfg;
    cfg.scenario = "check";
    cfg.check_filter = check_filter;
    cfg.out_dir = check_out;
    cfg.echo["scenario"] = "check";
    cfg.echo["checkFilter"] = check_filter;
    cfg.echo["outDir"] = check_out;
    int failures = 0;
    const auto reports = branchsim::oracles::run_battery(check_filter);
    for (const auto& r : reports) {
      std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name
                << "  maxAbsError=" << branchsim::format_number(r.max_abs_error)
                << "  threshold=" << branchsim::format_number(r.threshold) << "\n";
      if (!r.passed) ++failures;
    }
    branchsim::write_check_artifacts(cfg, reports);
    std::cout << (failures == 0 ? "all checks passed" : "some checks FAILED") << "\n";
    return failures == 0 ? 0 : 3;
  });
}
