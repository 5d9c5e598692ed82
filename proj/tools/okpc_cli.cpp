// okpc: run / spectrum / bench / cond-table over a JSON configuration.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "okpc/commands.hpp"
#include "okpc/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ohta-Kawasaki convex-splitting solver with block preconditioners"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const okpc::RunConfig&, std::ostream&);
  };
  const Sub subs[] = {
      {"run", "time-step the model; writes energy.csv, snapshots and stats.json", okpc::cmd_run},
      {"spectrum", "dense spectra and spectral checks at the initial state", okpc::cmd_spectrum},
      {"bench", "sweep DOF x (eps, sigma) x preconditioner; writes bench.csv", okpc::cmd_bench},
      {"cond-table", "condition numbers of the block system over 1D sizes", okpc::cmd_cond_table},
  };
  std::vector<CLI::App*> apps;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("config", config_path, "JSON configuration file")->required();
    sub->add_option("--set", overrides, "override a config value, e.g. --set params.eps=0.05")->take_all();
    apps.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return okpc::kExitConfig;
  }

  for (std::size_t i = 0; i < apps.size(); ++i) {
    if (!apps[i]->parsed()) continue;
    try {
      const okpc::RunConfig cfg = okpc::load_config(config_path, overrides);
      return subs[i].fn(cfg, std::cout);
    } catch (const okpc::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return okpc::kExitConfig;
    } catch (const okpc::InvalidMesh& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return okpc::kExitConfig;
    } catch (const okpc::SolverError& e) {
      if (e.kind() == okpc::SolverError::Kind::TooLarge) {
        std::cerr << "config error: " << e.what() << '\n';
        return okpc::kExitConfig;
      }
      std::cerr << "solver failure: " << e.what() << '\n';
      return okpc::kExitSolver;
    } catch (const okpc::Error& e) {
      std::cerr << "solver failure: " << e.what() << '\n';
      return okpc::kExitSolver;
    }
  }
  return okpc::kExitConfig;
}
