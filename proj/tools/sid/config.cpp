#include "config.hpp"

#include <json.hpp>

#include <fstream>

namespace sid::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

const json& need(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    fail(std::string(where) + ": missing required key \"" + key + "\"");
  return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(std::string("key \"") + key + "\": " + e.what());
  }
}

std::vector<double> coeffs(const json& j, const char* where) {
  if (!j.is_array() || j.empty())
    fail(std::string(where) + ": expected a nonempty coefficient array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) fail(std::string(where) + ": non-numeric coefficient");
    v.push_back(x.get<double>());
  }
  return v;
}

TransferFunction parse_tf(const json& j, const char* where) {
  TransferFunction tf;
  tf.num = coeffs(need(j, "num", where), where);
  tf.den = coeffs(need(j, "den", where), where);
  return tf;
}

PeriodRule parse_period(const std::string& s) {
  if (s == "half") return PeriodRule::half;
  if (s == "full") return PeriodRule::full;
  fail("period must be \"half\" or \"full\", got \"" + s + "\"");
}

SpreadRule parse_spread(const std::string& s) {
  if (s == "sample-std") return SpreadRule::sample_std;
  if (s == "difference") return SpreadRule::difference;
  fail("spread_rule must be \"sample-std\" or \"difference\", got \"" + s +
       "\"");
}

void parse_excitation(const json& j, ExcitationSpec& e) {
  e.bits = get_or(j, "bits", e.bits);
  e.hold = get_or(j, "hold", e.hold);
  e.amplitude = get_or(j, "amplitude", e.amplitude);
  e.samples = get_or(j, "samples", e.samples);
  e.seed = get_or(j, "seed", e.seed);
  if (e.bits < 2 || e.bits > 32) fail("excitation.bits must be in [2, 32]");
  if (e.hold < 1) fail("excitation.hold must be >= 1");
  if (e.samples < 1) fail("excitation.samples must be >= 1");
  if (!(e.amplitude > 0.0)) fail("excitation.amplitude must be positive");
}

void parse_noise(const json& j, NoiseSpec& n) {
  if (j.contains("filter") && !j.at("filter").is_null())
    n.filter = parse_tf(j.at("filter"), "noise.filter");
  n.sigma = get_or(j, "sigma", n.sigma);
  n.warmup = get_or(j, "warmup", n.warmup);
  if (n.sigma < 0.0) fail("noise.sigma must be nonnegative");
  if (n.warmup < 0) fail("noise.warmup must be nonnegative");
}

void parse_identification(const json& j, SubspaceConfig& c) {
  c.past_horizon = get_or(j, "past_horizon", c.past_horizon);
  c.future_horizon = get_or(j, "future_horizon", c.future_horizon);
  c.order = get_or(j, "order", c.order);
  c.sv_ratio = get_or(j, "sv_ratio", c.sv_ratio);
  c.detrend = get_or(j, "detrend", c.detrend);
  if (c.past_horizon < 1 || c.future_horizon < 1)
    fail("identification horizons must be >= 1");
  if (c.order < 0) fail("identification.order must be >= 0");
}

void parse_features(const json& j, FeatureConfig& f,
                    std::vector<PriorCase>& cases) {
  f.smooth_window = get_or(j, "smooth_window", f.smooth_window);
  f.prominence_rel = get_or(j, "prominence_rel", f.prominence_rel);
  f.settle_band_rel = get_or(j, "settle_band_rel", f.settle_band_rel);
  if (j.contains("period"))
    f.period = parse_period(j.at("period").get<std::string>());
  if (j.contains("baseline") && !j.at("baseline").is_null())
    f.baseline = j.at("baseline").get<double>();
  f.refine_extrema = get_or(j, "refine", f.refine_extrema);
  if (j.contains("explicit_extrema"))
    f.explicit_extrema = j.at("explicit_extrema").get<std::vector<int>>();
  if (f.smooth_window < 0) fail("features.smooth_window must be >= 0");
  if (!(f.prominence_rel >= 0.0))
    fail("features.prominence_rel must be nonnegative");

  if (!j.contains("cases")) return;
  const json& arr = j.at("cases");
  if (!arr.is_array()) fail("features.cases must be an array");
  for (const auto& c : arr) {
    PriorCase pc;
    pc.label = get_or<std::string>(c, "label", "case");
    pc.explicit_extrema =
        need(c, "explicit_extrema", "features.cases").get<std::vector<int>>();
    if (c.contains("period"))
      pc.period = parse_period(c.at("period").get<std::string>());
    if (pc.explicit_extrema.empty())
      fail("features.cases: explicit_extrema must be nonempty");
    cases.push_back(std::move(pc));
  }
}

void parse_step_test(const json& j, StepTestSpec& s) {
  s.horizon = get_or(j, "horizon", s.horizon);
  s.amplitude = get_or(j, "amplitude", s.amplitude);
  s.noise_sigma = get_or(j, "noise_sigma", s.noise_sigma);
  if (j.contains("output_noise_std") && !j.at("output_noise_std").is_null())
    s.output_noise_std = j.at("output_noise_std").get<double>();
  s.warmup = get_or(j, "warmup", s.warmup);
  if (!(s.horizon > 0.0)) fail("step_test.horizon must be positive");
  if (s.noise_sigma < 0.0) fail("step_test.noise_sigma must be nonnegative");
  if (s.output_noise_std && !(*s.output_noise_std > 0.0))
    fail("step_test.output_noise_std must be positive when set");
  if (s.output_noise_std && s.noise_sigma > 0.0)
    fail("step_test: give either noise_sigma or output_noise_std, not both");
}

void parse_priors(const json& j, PriorSpec& p) {
  const std::string mode = get_or<std::string>(j, "mode", "from-step");
  if (mode == "from-step") {
    p.mode = PriorSpec::Mode::from_step;
  } else if (mode == "explicit") {
    p.mode = PriorSpec::Mode::explicit_values;
  } else {
    fail("priors.mode must be \"from-step\" or \"explicit\"");
  }
  if (j.contains("estimates")) {
    for (const auto& e : j.at("estimates")) {
      PriorEstimates est;
      if (e.contains("zeta") && !e.at("zeta").is_null())
        est.zeta = e.at("zeta").get<double>();
      if (e.contains("wd") && !e.at("wd").is_null())
        est.wd = e.at("wd").get<double>();
      if (e.contains("zeta_wn") && !e.at("zeta_wn").is_null())
        est.zeta_wn = e.at("zeta_wn").get<double>();
      est.provenance = get_or<std::string>(e, "provenance", "config");
      p.estimates.push_back(std::move(est));
    }
  }
  if (p.mode == PriorSpec::Mode::explicit_values && p.estimates.empty())
    fail("priors: explicit mode needs at least one estimate");
  if (j.contains("spread_rule") && !j.at("spread_rule").is_null())
    p.spread_rule = parse_spread(j.at("spread_rule").get<std::string>());
  p.delta_zeta = get_or(j, "delta_zeta", p.delta_zeta);
  p.delta_wd = get_or(j, "delta_wd", p.delta_wd);
  p.delta_zeta_wn = get_or(j, "delta_zeta_wn", p.delta_zeta_wn);
}

void parse_region_flags(const json& j, RegionFlags& f) {
  f.damping = get_or(j, "damping", f.damping);
  f.conservative = get_or(j, "conservative", f.conservative);
  f.frequency = get_or(j, "frequency", f.frequency);
  f.settling = get_or(j, "settling", f.settling);
}

void parse_monte_carlo(const json& j, MonteCarloSpec& m) {
  m.runs = get_or(j, "runs", m.runs);
  m.workers = get_or(j, "workers", m.workers);
  m.master_seed = get_or(j, "master_seed", m.master_seed);
  if (m.runs < 1) fail("monte_carlo.runs must be >= 1");
  if (m.workers < 0) fail("monte_carlo.workers must be >= 0");
}

void parse_gallery(const json& j, GallerySpec& g) {
  if (j.contains("zeta")) g.zeta = j.at("zeta").get<std::vector<double>>();
  if (j.contains("wd_max"))
    g.wd_max = j.at("wd_max").get<std::vector<double>>();
  if (j.contains("zeta_wn_min"))
    g.zeta_wn_min = j.at("zeta_wn_min").get<std::vector<double>>();
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("config parse error in " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) fail("config root must be a JSON object");

  ExperimentConfig cfg;
  cfg.schema = get_or(j, "schema", 0);
  if (cfg.schema != 1) fail("unsupported config schema (expected 1)");
  cfg.ts = need(j, "ts", "config").get<double>();
  if (!(cfg.ts > 0.0)) fail("ts must be positive");

  const json& plant = need(j, "plant", "config");
  if (plant.contains("model")) {
    cfg.plant_model = plant.at("model").get<std::string>();
  } else {
    cfg.plant_tf = parse_tf(plant, "plant");
  }

  if (j.contains("excitation")) parse_excitation(j.at("excitation"), cfg.excitation);
  if (j.contains("noise")) parse_noise(j.at("noise"), cfg.noise);
  if (j.contains("identification"))
    parse_identification(j.at("identification"), cfg.identification);
  if (j.contains("features"))
    parse_features(j.at("features"), cfg.features, cfg.feature_cases);
  if (j.contains("step_test")) parse_step_test(j.at("step_test"), cfg.step_test);
  if (j.contains("priors")) parse_priors(j.at("priors"), cfg.priors);
  if (j.contains("region")) parse_region_flags(j.at("region"), cfg.region_flags);
  if (j.contains("monte_carlo"))
    parse_monte_carlo(j.at("monte_carlo"), cfg.monte_carlo);
  if (j.contains("gallery")) parse_gallery(j.at("gallery"), cfg.gallery);

  cfg.base_dir = path.has_parent_path() ? path.parent_path()
                                        : std::filesystem::path(".");
  if (cfg.plant_model) {
    const auto resolved = cfg.plant_model->is_absolute()
                              ? *cfg.plant_model
                              : cfg.base_dir / *cfg.plant_model;
    if (!std::filesystem::exists(resolved))
      fail("plant model file does not exist: " + resolved.string());
    cfg.plant_model = resolved;
  }
  return cfg;
}

DiscreteStateSpace resolve_plant(const ExperimentConfig& cfg) {
  if (cfg.plant_model) {
    DiscreteStateSpace dz = load_model(*cfg.plant_model);
    if (std::abs(dz.ts - cfg.ts) > 1e-12 * std::max(1.0, cfg.ts))
      throw ConfigError("model file sampling period disagrees with config ts");
    return dz;
  }
  if (!cfg.plant_tf) throw ConfigError("config names no plant");
  try {
    return c2d_zoh(tf_to_ss(*cfg.plant_tf), cfg.ts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("plant: ") + e.what());
  }
}

}  // namespace sid::cli
