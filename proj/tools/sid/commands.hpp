#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"

namespace sid::cli {

struct RunOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = "out";
  std::optional<unsigned long long> seed;  // overrides monte_carlo.master_seed
  std::optional<int> runs;                 // overrides monte_carlo.runs
  std::string format = "csv";              // csv | json | svg
};

int cmd_simulate(const RunOptions& opts);
int cmd_step(const RunOptions& opts);
int cmd_features(const RunOptions& opts);
int cmd_region(const RunOptions& opts);
int cmd_identify(const RunOptions& opts);
int cmd_constrain(const RunOptions& opts);
int cmd_pipeline(const RunOptions& opts);
int cmd_montecarlo(const RunOptions& opts);
int cmd_gallery(const RunOptions& opts);

}  // namespace sid::cli
