#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sid/region.hpp"
#include "sid/signal.hpp"

namespace sid {

using Eigen::VectorXd;

// How the damped-oscillation period is read off the selected extrema.
enum class PeriodRule {
  half,  // 2 * (t_valley - t_peak), first peak / first valley
  full,  // t_peak2 - t_peak1
};

struct FeatureConfig {
  // Moving-average window; 0 selects max(3, samples / 100).
  int smooth_window = 0;
  // Extremum prominence threshold, relative to |y_final - y0|.
  double prominence_rel = 0.02;
  // Settling band, relative to |y_final - y0|.
  double settle_band_rel = 0.01;
  PeriodRule period = PeriodRule::half;
  // When nonempty, bypasses automatic peak picking: indices into the smoothed
  // record, alternating peak/valley as found at those samples.
  std::vector<int> explicit_extrema;
  // Pre-step output level; unset uses the first smoothed sample.
  std::optional<double> baseline;
  // Sub-sample parabolic refinement of extremum time/value.
  bool refine_extrema = true;
};

struct Extremum {
  int index = 0;       // sample index in the smoothed record
  double t = 0.0;      // refined time
  double value = 0.0;  // refined level
  double prominence = 0.0;
  bool is_peak = true;
  bool hand_picked = false;
};

struct StepFeatures {
  double y0 = 0.0;
  double y_final = 0.0;
  std::optional<double> overshoot_pct;    // needs >= 1 peak
  std::optional<double> period_damped;    // needs peak + valley (or 2 peaks)
  double settling_time = 0.0;             // 1%-band entry time
  std::optional<double> rise_time;        // 10% -> 90%, reported only
  std::optional<double> peak_time;        // first selected peak, reported only
  std::vector<Extremum> extrema;
};

// Edge-truncated centered moving average (window w keeps the average over
// [i-h, i+h] clipped to the record, h = w/2).
VectorXd smooth_moving_average(const VectorXd& y, int window);

// Strict local extrema of the smoothed record with at least the given
// absolute prominence, in time order.
std::vector<Extremum> find_extrema(const VectorXd& t, const VectorXd& ysmooth,
                                   double min_prominence, bool refine);

StepFeatures extract_step_features(const VectorXd& t, const VectorXd& y,
                                   const FeatureConfig& cfg = {});
StepFeatures extract_step_features(const SignalRecord& rec,
                                   const FeatureConfig& cfg = {});

struct PriorEstimates {
  std::optional<double> zeta;     // dimensionless, in (0, 1)
  std::optional<double> wd;      // rad/s
  std::optional<double> zeta_wn;  // rad/s
  std::string provenance;
};

// Maps measured features to damping/frequency/settling-rate estimates:
// zeta = 0.6 (1 - Os/100), wd = 2 pi / Td, zeta_wn = 4.6 / ts1. With
// exact_decrement, zeta instead solves the logarithmic-decrement relation
// Os/100 = exp(-pi zeta / sqrt(1 - zeta^2)). Throws std::domain_error when
// Os >= 100.
PriorEstimates priors_from_features(const StepFeatures& f,
                                    bool exact_decrement = false);

struct PriorSpread {
  PriorEstimates mean;
  // Per-field dispersion, by the selected rule.
  std::optional<double> zeta_delta;
  std::optional<double> wd_delta;
  std::optional<double> zeta_wn_delta;
};

enum class SpreadRule {
  sample_std,   // sample standard deviation across estimates
  difference,   // |max - min| across estimates
};

// Field-wise mean and dispersion over the estimates that define each field.
PriorSpread aggregate_priors(const std::vector<PriorEstimates>& estimates,
                             SpreadRule rule = SpreadRule::sample_std);

struct BoundedPriors {
  std::optional<double> zeta_min;      // in (0, 1)
  std::optional<double> wd_max;        // < pi / (2 ts), rad/s
  std::optional<double> zeta_wn_min;   // > 0, rad/s
  double delta_zeta = 0.0;
  double delta_wd = 0.0;
  double delta_zeta_wn = 0.0;
};

// Widens estimates into bounds: zeta_min = zeta - dz, wd_max = wd + dw,
// zeta_wn_min = zeta_wn - dzw. Throws std::domain_error when a produced
// bound leaves its valid range (zeta_min outside (0,1), zeta_wn_min <= 0).
// The wd_max sampling bound is checked against ts in regions_from_priors,
// where ts is known.
BoundedPriors apply_tuning(const PriorEstimates& priors, double delta_zeta,
                           double delta_wd, double delta_zeta_wn);

struct RegionFlags {
  bool damping = false;            // ellipse on zeta_min
  bool conservative = true;        // conservative vs inscribed ellipse
  bool frequency = false;          // cone on wd_max ts
  bool settling = false;           // circle on zeta_wn_min ts
};

// Builds the flagged constructors and intersects them. Throws
// std::invalid_argument when no flag is set, a required bound is missing, or
// wd_max ts >= pi/2 (fewer than four samples per oscillation period).
Region regions_from_priors(const BoundedPriors& bounds, double ts,
                           const RegionFlags& flags);

// Feature report serialization (JSON, includes extrema provenance).
void save_feature_report(const std::filesystem::path& path,
                         const StepFeatures& f, const PriorEstimates& priors);

}  // namespace sid
