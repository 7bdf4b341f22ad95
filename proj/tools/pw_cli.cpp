#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "pw/acceptance.hpp"
#include "pw/io.hpp"
#include "pw/kernels.hpp"
#include "pw/lab.hpp"

namespace {

int finish(const pw::lab::RunReport& rep) {
  std::cout << pw::lab::render_report(rep);
  std::cout << (rep.all_pass() ? "all checks passed" : "CHECK FAILURES") << " ("
            << pw::io::format_double(rep.wall_seconds) << " s)\n";
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-dimensional pilot-wave trajectories over a computable "
               "infinitesimal-extended state space"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::string dump_name;
  std::string only_spec;
  std::string exec_mode;

  auto* run_cmd = app.add_subcommand("run", "run a scenario config or preset");
  run_cmd->add_option("config", config, "config file path or preset name")
      ->required();
  run_cmd->add_option("--out", out_dir, "override the output directory");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "run the scenario's eps sweep, one row per eps");
  sweep_cmd->add_option("config", config, "config file path or preset name")
      ->required();
  sweep_cmd->add_option("--out", out_dir, "override the output directory");

  auto* verify_cmd =
      app.add_subcommand("verify", "run the acceptance criteria suite");
  verify_cmd->add_option("--only", only_spec,
                         "comma-separated criterion numbers, e.g. 1,4,8");
  verify_cmd->add_option("--out", out_dir, "directory for the results table");
  verify_cmd->add_option("--exec", exec_mode, "kernel execution: omp or serial");

  auto* presets_cmd = app.add_subcommand("presets", "list shipped scenarios");
  presets_cmd->add_option("--dump", dump_name, "print the named preset config");

  auto* export_cmd =
      app.add_subcommand("export", "re-emit CSV artifacts from a stored run");
  export_cmd->add_option("run_dir", config, "run directory with artifacts.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed() || sweep_cmd->parsed()) {
      pw::lab::Scenario sc = pw::lab::load_scenario(config);
      if (!out_dir.empty()) sc.output_dir = out_dir;
      return finish(run_cmd->parsed() ? pw::lab::run_scenario(sc)
                                      : pw::lab::sweep_epsilon(sc));
    }

    if (verify_cmd->parsed()) {
      if (!exec_mode.empty())
        pw::kernels::set_exec_mode(pw::kernels::parse_exec(exec_mode));
      std::vector<int> only;
      std::stringstream ss(only_spec);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) only.push_back(std::stoi(item));
      const auto checks = pw::acceptance::run_all(only);

      bool all = true;
      std::ostringstream table;
      table << "id,pass,measured,tolerance\n";
      for (const auto& c : checks) {
        all = all && c.pass;
        std::cout << (c.pass ? "  [pass] " : "  [FAIL] ") << c.id << " " << c.name
                  << "  measured=" << pw::io::format_double(c.measured)
                  << " tol=" << pw::io::format_double(c.tolerance)
                  << (c.details.empty() ? "" : "  (" + c.details + ")") << "\n";
        table << c.id << ',' << (c.pass ? 1 : 0) << ','
              << pw::io::format_double(c.measured) << ','
              << pw::io::format_double(c.tolerance) << '\n';
      }
      std::cout << pw::acceptance::summary(checks);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        pw::io::write_file((std::filesystem::path(out_dir) / "results.csv").string(),
                           table.str());
      }
      return all ? 0 : 1;
    }

    if (presets_cmd->parsed()) {
      if (!dump_name.empty()) {
        std::cout << pw::lab::preset_config(dump_name);
        return 0;
      }
      for (const auto& [name, summary] : pw::lab::preset_list())
        std::cout << name << "  -  " << summary << "\n";
      return 0;
    }

    if (export_cmd->parsed()) {
      for (const auto& path : pw::lab::export_run(config))
        std::cout << path << "\n";
      return 0;
    }
  } catch (const pw::lab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
