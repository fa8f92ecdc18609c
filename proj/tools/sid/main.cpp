#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"

namespace {

using sid::cli::RunOptions;

struct SeedFlag {
  unsigned long long value = 0;
  bool set = false;
};

struct RunsFlag {
  int value = 0;
  bool set = false;
};

void add_common(CLI::App* cmd, RunOptions& opts, SeedFlag& seed,
                RunsFlag& runs) {
  cmd->add_option("--config", opts.config_path, "experiment description file")
      ->required();
  cmd->add_option("--seed", seed.value, "override the master seed")
      ->each([&seed](const std::string&) { seed.set = true; });
  cmd->add_option("--runs", runs.value, "override the Monte Carlo run count")
      ->each([&runs](const std::string&) { runs.set = true; });
  cmd->add_option("--out", opts.out_dir, "output directory (default: out)");
  cmd->add_option("--format", opts.format, "artifact set: csv, json, or svg")
      ->check(CLI::IsMember({"csv", "json", "svg"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gray-box identification workbench"};
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const RunOptions&);
  };
  const std::vector<Entry> entries = {
      {"simulate", "generate the excitation record and sampled plant",
       sid::cli::cmd_simulate},
      {"step", "generate the step-test record", sid::cli::cmd_step},
      {"features", "read transient features off the step record",
       sid::cli::cmd_features},
      {"region", "build the constraint region from the priors",
       sid::cli::cmd_region},
      {"identify", "subspace identification from the excitation record",
       sid::cli::cmd_identify},
      {"constrain", "project the identified spectrum into the region",
       sid::cli::cmd_constrain},
      {"pipeline", "run every stage end to end", sid::cli::cmd_pipeline},
      {"montecarlo", "repeat the pipeline over noise realizations",
       sid::cli::cmd_montecarlo},
      {"gallery", "draw the region constructors over the exact loci",
       sid::cli::cmd_gallery},
  };

  std::vector<RunOptions> opts(entries.size());
  std::vector<SeedFlag> seeds(entries.size());
  std::vector<RunsFlag> runs(entries.size());
  std::vector<std::function<int()>> actions(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(entries[i].name, entries[i].help);
    add_common(cmd, opts[i], seeds[i], runs[i]);
    const Entry& entry = entries[i];
    cmd->callback([&, i] {
      if (seeds[i].set) opts[i].seed = seeds[i].value;
      if (runs[i].set) opts[i].runs = runs[i].value;
      actions[i] = [&entry, &opts, i] { return entry.run(opts[i]); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (auto& action : actions)
      if (action) return action();
    std::cerr << "error: no command selected\n";
    return 2;
  } catch (const sid::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const sid::cli::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 4;
  } catch (const sid::cli::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
