#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sid/features.hpp"
#include "sid/lti.hpp"
#include "sid/sysid.hpp"

namespace sid::cli {

// Problems with the experiment description itself (missing file, bad schema,
// out-of-range values). Mapped to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pipeline stage that failed on valid configuration (numerical trouble,
// missing upstream artifact). Mapped to exit code 3.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& message)
      : std::runtime_error("stage " + stage + ": " + message), stage(stage) {}
  std::string stage;
};

// Constrained solve declared the region empty. Mapped to exit code 4.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExcitationSpec {
  int bits = 16;
  int hold = 1;
  double amplitude = 1.0;
  int samples = 1000;
  unsigned long long seed = 0xACE1ull;
};

struct NoiseSpec {
  std::optional<TransferFunction> filter;  // unset: white output noise
  double sigma = 0.0;                      // driving white-noise deviation
  int warmup = 0;
};

struct StepTestSpec {
  double horizon = 30.0;    // seconds
  double amplitude = 1.0;
  // Either a direct driving sigma, or a target output deviation calibrated
  // through the (stable) noise filter. At most one may be nonzero.
  double noise_sigma = 0.0;
  std::optional<double> output_noise_std;
  int warmup = 67;
};

struct PriorCase {
  std::string label;
  std::vector<int> explicit_extrema;
  PeriodRule period = PeriodRule::half;
};

struct PriorSpec {
  enum class Mode { from_step, explicit_values };
  Mode mode = Mode::from_step;
  std::vector<PriorEstimates> estimates;  // explicit mode
  std::optional<SpreadRule> spread_rule;  // widen by dispersion when set
  double delta_zeta = 0.0;                // fixed widenings otherwise
  double delta_wd = 0.0;
  double delta_zeta_wn = 0.0;
};

struct MonteCarloSpec {
  int runs = 20;
  int workers = 0;  // 0: hardware concurrency
  unsigned long long master_seed = 9000;
};

struct GallerySpec {
  std::vector<double> zeta{0.1, 0.5, 0.9};
  std::vector<double> wd_max;       // cone angles wd ts
  std::vector<double> zeta_wn_min;  // settling radii exp(-z ts)
};

struct ExperimentConfig {
  int schema = 1;
  double ts = 1.0;
  // Plant: continuous transfer function, discretized at ts; or a model file.
  std::optional<TransferFunction> plant_tf;
  std::optional<std::filesystem::path> plant_model;
  ExcitationSpec excitation;
  NoiseSpec noise;
  SubspaceConfig identification;
  FeatureConfig features;
  std::vector<PriorCase> feature_cases;  // marker-selection studies
  StepTestSpec step_test;
  PriorSpec priors;
  RegionFlags region_flags;
  MonteCarloSpec monte_carlo;
  GallerySpec gallery;
  std::filesystem::path base_dir;  // directory of the config file
};

ExperimentConfig load_config(const std::filesystem::path& path);

// The discrete plant named by the config (transfer function discretized at
// ts, or the model file loaded relative to the config location).
DiscreteStateSpace resolve_plant(const ExperimentConfig& cfg);

}  // namespace sid::cli
