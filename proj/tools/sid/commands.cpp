#include "commands.hpp"

#include <json.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "sid/constrain.hpp"
#include "sid/features.hpp"
#include "sid/lti.hpp"
#include "sid/region.hpp"
#include "sid/signal.hpp"
#include "sid/sysid.hpp"
#include "svg.hpp"

namespace sid::cli {

namespace {

using nlohmann::json;

// Seed streams: Monte Carlo run r draws noise from stream r; the step-test
// record uses a reserved stream far above any practical run count.
constexpr unsigned long long kStepNoiseStream = 1000003ull;

struct Workspace {
  ExperimentConfig cfg;
  RunOptions opts;
  std::vector<std::string> artifacts;
};

Workspace open_workspace(const RunOptions& opts) {
  Workspace ws{load_config(opts.config_path), opts, {}};
  if (opts.seed) ws.cfg.monte_carlo.master_seed = *opts.seed;
  if (opts.runs) {
    if (*opts.runs < 1) throw ConfigError("--runs must be >= 1");
    ws.cfg.monte_carlo.runs = *opts.runs;
  }
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " +
                      opts.out_dir.string() + ": " + ec.message());
  return ws;
}

std::filesystem::path artifact(Workspace& ws, const std::string& name) {
  ws.artifacts.push_back(name);
  return ws.opts.out_dir / name;
}

void write_manifest(const Workspace& ws, const std::string& command) {
  if (ws.opts.format != "json") return;
  json j;
  j["command"] = command;
  j["artifacts"] = ws.artifacts;
  std::ofstream out(ws.opts.out_dir / "index.json");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Record builders
// ---------------------------------------------------------------------------

MatrixXd excitation_input(const ExcitationSpec& e) {
  const auto seq = prbs(e.bits, e.hold, e.amplitude, e.samples,
                        static_cast<unsigned>(e.seed));
  MatrixXd u(e.samples, 1);
  for (int k = 0; k < e.samples; ++k) u(k, 0) = seq[static_cast<size_t>(k)];
  return u;
}

// Output-noise sequence for one run: the configured filter driven by unit
// white noise scaled by sigma, or plain white noise when no filter is named.
VectorXd noise_sequence(const NoiseSpec& n, double ts, int samples,
                        unsigned long long stream_seed, double sigma) {
  if (sigma <= 0.0) return VectorXd::Zero(samples);
  if (n.filter)
    return colored_noise(*n.filter, ts, samples, sigma, stream_seed, n.warmup);
  GaussianSource g(stream_seed);
  VectorXd v(samples);
  for (int k = 0; k < samples; ++k) v[k] = sigma * g();
  return v;
}

// Standard deviation of the stationary output of the sampled noise filter
// driven by unit white noise (discrete Lyapunov solve).
double stationary_output_std(const TransferFunction& tf, double ts) {
  const DiscreteStateSpace f = c2d_zoh(tf_to_ss(tf), ts);
  if (spectral_radius(f.a) >= 1.0)
    throw ConfigError(
        "output_noise_std calibration needs a stable noise filter");
  const int n = f.order();
  const MatrixXd bbt = f.b * f.b.transpose();
  const MatrixXd lhs = MatrixXd::Identity(n * n, n * n) -
                       Eigen::kroneckerProduct(f.a, f.a);
  const Eigen::Map<const VectorXd> rhs(bbt.data(), n * n);
  VectorXd xv = lhs.partialPivLu().solve(rhs);
  const Eigen::Map<const MatrixXd> x(xv.data(), n, n);
  const double var =
      (f.c * x * f.c.transpose())(0, 0) + (f.d * f.d.transpose())(0, 0);
  return std::sqrt(std::max(0.0, var));
}

SignalRecord identification_record(const ExperimentConfig& cfg,
                                   const DiscreteStateSpace& plant,
                                   unsigned long long stream) {
  SignalRecord rec;
  rec.u = excitation_input(cfg.excitation);
  const int n = cfg.excitation.samples;
  rec.t.resize(n);
  for (int k = 0; k < n; ++k) rec.t[k] = k * cfg.ts;
  rec.y = simulate(plant, rec.u);
  const VectorXd v =
      noise_sequence(cfg.noise, cfg.ts, n,
                     derive_seed(cfg.monte_carlo.master_seed, stream),
                     cfg.noise.sigma);
  rec.y.col(0) += v;
  return rec;
}

SignalRecord step_record(const ExperimentConfig& cfg,
                         const DiscreteStateSpace& plant) {
  const int n =
      static_cast<int>(std::round(cfg.step_test.horizon / cfg.ts)) + 1;
  SignalRecord rec;
  rec.t.resize(n);
  for (int k = 0; k < n; ++k) rec.t[k] = k * cfg.ts;
  rec.u = MatrixXd::Constant(n, plant.inputs(), cfg.step_test.amplitude);
  rec.y = simulate(plant, rec.u);
  double sigma = cfg.step_test.noise_sigma;
  if (cfg.step_test.output_noise_std) {
    if (cfg.noise.filter) {
      sigma = *cfg.step_test.output_noise_std /
              stationary_output_std(*cfg.noise.filter, cfg.ts);
    } else {
      sigma = *cfg.step_test.output_noise_std;
    }
  }
  if (sigma > 0.0) {
    NoiseSpec spec = cfg.noise;
    spec.warmup = cfg.step_test.warmup;
    const VectorXd v = noise_sequence(
        spec, cfg.ts, n,
        derive_seed(cfg.monte_carlo.master_seed, kStepNoiseStream), sigma);
    rec.y.col(0) += v;
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Feature / prior / region assembly
// ---------------------------------------------------------------------------

FeatureConfig case_config(const FeatureConfig& base, const PriorCase& c) {
  FeatureConfig cfg = base;
  cfg.explicit_extrema = c.explicit_extrema;
  cfg.period = c.period;
  return cfg;
}

std::vector<PriorEstimates> prior_estimates(const ExperimentConfig& cfg,
                                            const DiscreteStateSpace& plant) {
  if (cfg.priors.mode == PriorSpec::Mode::explicit_values)
    return cfg.priors.estimates;
  const SignalRecord rec = step_record(cfg, plant);
  std::vector<PriorEstimates> out;
  if (cfg.feature_cases.empty()) {
    out.push_back(
        priors_from_features(extract_step_features(rec, cfg.features)));
  } else {
    for (const auto& c : cfg.feature_cases) {
      PriorEstimates e = priors_from_features(
          extract_step_features(rec, case_config(cfg.features, c)));
      e.provenance = c.label;
      out.push_back(std::move(e));
    }
  }
  return out;
}

BoundedPriors bounds_from_estimates(const ExperimentConfig& cfg,
                                    const std::vector<PriorEstimates>& est) {
  if (est.empty()) throw StageError("region", "no prior estimates available");
  double dz = cfg.priors.delta_zeta;
  double dw = cfg.priors.delta_wd;
  double dzw = cfg.priors.delta_zeta_wn;
  PriorEstimates center;
  if (est.size() == 1 && !cfg.priors.spread_rule) {
    center = est.front();
  } else {
    const SpreadRule rule =
        cfg.priors.spread_rule.value_or(SpreadRule::sample_std);
    const PriorSpread spread = aggregate_priors(est, rule);
    center = spread.mean;
    if (cfg.priors.spread_rule) {
      dz = spread.zeta_delta.value_or(dz);
      dw = spread.wd_delta.value_or(dw);
      dzw = spread.zeta_wn_delta.value_or(dzw);
    }
  }
  try {
    return apply_tuning(center, dz, dw, dzw);
  } catch (const std::exception& e) {
    throw StageError("region", e.what());
  }
}

Region region_from_config(const ExperimentConfig& cfg,
                          const DiscreteStateSpace& plant) {
  const auto est = prior_estimates(cfg, plant);
  const BoundedPriors bounds = bounds_from_estimates(cfg, est);
  try {
    return regions_from_priors(bounds, cfg.ts, cfg.region_flags);
  } catch (const std::invalid_argument& e) {
    throw StageError("region", e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared writers
// ---------------------------------------------------------------------------

void write_boundary_csv(const std::filesystem::path& path, const Region& r) {
  const MatrixXd pts = boundary_polyline(r, 720);
  std::ofstream out(path);
  if (!out) throw StageError("region", "cannot write " + path.string());
  out << "re,im\n" << std::setprecision(12);
  for (int i = 0; i < pts.rows(); ++i)
    out << pts(i, 0) << ',' << pts(i, 1) << '\n';
}

MatrixXd unit_circle_points(int n = 256) {
  MatrixXd pts(n + 1, 2);
  for (int k = 0; k <= n; ++k) {
    const double th = 2.0 * M_PI * k / n;
    pts(k, 0) = std::cos(th);
    pts(k, 1) = std::sin(th);
  }
  return pts;
}

void write_region_svg(const std::filesystem::path& path, const Region& r,
                      const MatrixXd* constrained_eigs = nullptr,
                      const MatrixXd* unconstrained_eigs = nullptr) {
  SvgCanvas svg(-1.45, 1.45, -1.45, 1.45);
  svg.axes();
  svg.polyline(unit_circle_points(), "#999999", 1.0, true, false);
  svg.polyline(boundary_polyline(r, 720), "#0077bb", 2.0, false, true);
  if (unconstrained_eigs)
    svg.markers(*unconstrained_eigs, "#cc3311", 3.5, false);
  if (constrained_eigs) svg.markers(*constrained_eigs, "#009988", 3.0, true);
  svg.text(-1.4, 1.35, r.label, "#0077bb");
  if (unconstrained_eigs) svg.text(-1.4, -1.32, "hollow: unconstrained", "#cc3311");
  if (constrained_eigs) svg.text(-1.4, -1.42, "filled: constrained", "#009988");
  svg.save(path);
}

MatrixXd eig_points(const MatrixXd& a) {
  const VectorXcd ev = eigenvalues(a);
  MatrixXd pts(ev.size(), 2);
  for (int i = 0; i < ev.size(); ++i) {
    pts(i, 0) = ev[i].real();
    pts(i, 1) = ev[i].imag();
  }
  return pts;
}

json priors_json(const std::vector<PriorEstimates>& est,
                 const BoundedPriors& bounds) {
  json j;
  j["estimates"] = json::array();
  for (const auto& e : est) {
    json row;
    if (e.zeta) row["zeta"] = *e.zeta;
    if (e.wd) row["wd"] = *e.wd;
    if (e.zeta_wn) row["zeta_wn"] = *e.zeta_wn;
    row["provenance"] = e.provenance;
    j["estimates"].push_back(row);
  }
  json b;
  if (bounds.zeta_min) b["zeta_min"] = *bounds.zeta_min;
  if (bounds.wd_max) b["wd_max"] = *bounds.wd_max;
  if (bounds.zeta_wn_min) b["zeta_wn_min"] = *bounds.zeta_wn_min;
  b["delta_zeta"] = bounds.delta_zeta;
  b["delta_wd"] = bounds.delta_wd;
  b["delta_zeta_wn"] = bounds.delta_zeta_wn;
  j["bounds"] = b;
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw StageError("write", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Identification + constraint chain pieces shared by commands
// ---------------------------------------------------------------------------

IdentificationResult identify_from_record(const ExperimentConfig& cfg,
                                          const SignalRecord& rec) {
  try {
    return pi_moesp(rec.u, rec.y, cfg.ts, cfg.identification);
  } catch (const std::exception& e) {
    throw StageError("identify", e.what());
  }
}

SolveResult constrain_model(const MatrixXd& a_star, const Region& region,
                            bool collect_trace) {
  SolveOptions sopts;
  sopts.collect_trace = collect_trace;
  SolveResult sol;
  try {
    sol = constrain_spectrum(a_star, region, sopts);
  } catch (const std::exception& e) {
    throw StageError("constrain", e.what());
  }
  if (sol.status == SolveStatus::infeasible)
    throw InfeasibleError("region \"" + region.label +
                          "\" admits no feasible spectrum");
  if (sol.status == SolveStatus::max_iterations)
    throw StageError("constrain", "solver hit the iteration limit");
  return sol;
}

// Step response of a model normalized by its own zero-frequency gain.
VectorXd normalized_step(const DiscreteStateSpace& sys, int samples) {
  const MatrixXd y = step_response(sys, samples);
  const double dc = frequency_response(sys, 0.0)(0, 0).real();
  if (std::abs(dc) < 1e-12) return y.col(0);
  return y.col(0) / dc;
}

// ---------------------------------------------------------------------------

struct McRunResult {
  bool identified = false;
  std::string status = "pending";
  VectorXcd unconstrained_eigs;
  VectorXcd constrained_eigs;
  double objective = 0.0;
  double min_margin = 0.0;
  bool all_inside = false;
  double sr_unconstrained = 0.0;
  double sr_constrained = 0.0;
  VectorXd step_normalized;
};

McRunResult run_one(const ExperimentConfig& cfg,
                    const DiscreteStateSpace& plant, const Region& region,
                    int run, int step_samples) {
  McRunResult r;
  const SignalRecord rec =
      identification_record(cfg, plant, static_cast<unsigned long long>(run));
  const IdentificationResult ident = identify_from_record(cfg, rec);
  r.identified = true;
  r.unconstrained_eigs = eigenvalues(ident.model.a);
  r.sr_unconstrained = spectral_radius(ident.model.a);

  SolveOptions sopts;
  const SolveResult sol = constrain_spectrum(ident.model.a, region, sopts);
  r.status = to_string(sol.status);
  if (sol.status != SolveStatus::optimal) return r;

  r.constrained_eigs = eigenvalues(sol.a_hat);
  r.objective = sol.objective;
  r.sr_constrained = spectral_radius(sol.a_hat);
  double worst = std::numeric_limits<double>::infinity();
  bool inside = true;
  for (int i = 0; i < r.constrained_eigs.size(); ++i) {
    const double m = member_min_eig(region, r.constrained_eigs[i]);
    worst = std::min(worst, m);
    inside = inside && m >= -1e-6;
  }
  r.min_margin = worst;
  r.all_inside = inside;

  DiscreteStateSpace constrained = ident.model;
  constrained.a = sol.a_hat;
  if (constrained.inputs() == 1 && constrained.outputs() == 1)
    r.step_normalized = normalized_step(constrained, step_samples);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_simulate(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);
  const SignalRecord rec = identification_record(ws.cfg, plant, 0);
  save_signal(artifact(ws, "signal.csv"), rec);
  save_model(artifact(ws, "plant.json"), plant);
  write_manifest(ws, "simulate");
  std::cout << "simulate: " << rec.samples() << " samples at ts=" << ws.cfg.ts
            << " -> " << (opts.out_dir / "signal.csv").string() << '\n';
  return 0;
}

int cmd_step(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);
  const SignalRecord rec = step_record(ws.cfg, plant);
  save_signal(artifact(ws, "step.csv"), rec);
  write_manifest(ws, "step");
  std::cout << "step: " << rec.samples() << " samples over "
            << ws.cfg.step_test.horizon << " s -> "
            << (opts.out_dir / "step.csv").string() << '\n';
  return 0;
}

namespace {

std::string case_slug(const std::string& label) {
  std::string s;
  for (char c : label)
    s += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
  return s;
}

void write_features_svg(const std::filesystem::path& path,
                        const SignalRecord& rec, const StepFeatures& f) {
  const double t_max = rec.t[rec.samples() - 1];
  const double y_lo = rec.y.col(0).minCoeff();
  const double y_hi = rec.y.col(0).maxCoeff();
  const double pad = 0.1 * std::max(1e-9, y_hi - y_lo);
  SvgCanvas svg(0.0, t_max, y_lo - pad, y_hi + pad, 760, 420);
  MatrixXd curve(rec.samples(), 2);
  curve.col(0) = rec.t;
  curve.col(1) = rec.y.col(0);
  svg.polyline(curve, "#0077bb", 1.5);
  svg.line(0.0, f.y_final, t_max, f.y_final, "#888888", 1.0, true);
  if (!f.extrema.empty()) {
    MatrixXd pts(static_cast<int>(f.extrema.size()), 2);
    for (size_t i = 0; i < f.extrema.size(); ++i) {
      pts(static_cast<int>(i), 0) = f.extrema[i].t;
      pts(static_cast<int>(i), 1) = f.extrema[i].value;
    }
    svg.markers(pts, "#cc3311", 4.0, true);
  }
  svg.text(0.02 * t_max, y_hi + 0.5 * pad, "step record with selected extrema");
  svg.save(path);
}

}  // namespace

int cmd_features(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);
  const auto step_path = opts.out_dir / "step.csv";
  SignalRecord rec;
  if (std::filesystem::exists(step_path)) {
    rec = load_signal(step_path);
  } else {
    rec = step_record(ws.cfg, plant);
    save_signal(artifact(ws, "step.csv"), rec);
  }

  try {
    if (ws.cfg.feature_cases.empty()) {
      const StepFeatures f = extract_step_features(rec, ws.cfg.features);
      const PriorEstimates p = priors_from_features(f);
      save_feature_report(artifact(ws, "features.json"), f, p);
      if (opts.format == "svg")
        write_features_svg(artifact(ws, "features.svg"), rec, f);
      std::cout << "features: overshoot "
                << (f.overshoot_pct ? *f.overshoot_pct : 0.0) << "%, period "
                << (f.period_damped ? *f.period_damped : 0.0)
                << " s, settling " << f.settling_time << " s\n";
    } else {
      for (const auto& c : ws.cfg.feature_cases) {
        const StepFeatures f =
            extract_step_features(rec, case_config(ws.cfg.features, c));
        const PriorEstimates p = priors_from_features(f);
        const std::string slug = case_slug(c.label);
        save_feature_report(artifact(ws, "features_" + slug + ".json"), f, p);
        if (opts.format == "svg")
          write_features_svg(artifact(ws, "features_" + slug + ".svg"), rec,
                             f);
        std::cout << "features[" << c.label << "]: zeta "
                  << (p.zeta ? *p.zeta : 0.0) << ", wd "
                  << (p.wd ? *p.wd : 0.0) << " rad/s\n";
      }
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("features", e.what());
  }
  write_manifest(ws, "features");
  return 0;
}

int cmd_region(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);

  const bool per_case = ws.cfg.priors.mode == PriorSpec::Mode::from_step &&
                        !ws.cfg.feature_cases.empty();
  if (per_case) {
    // Marker-selection study: one region per hand-picked case.
    const SignalRecord rec = step_record(ws.cfg, plant);
    for (const auto& c : ws.cfg.feature_cases) {
      PriorEstimates e;
      try {
        e = priors_from_features(
            extract_step_features(rec, case_config(ws.cfg.features, c)));
      } catch (const std::exception& ex) {
        throw StageError("region", std::string(ex.what()) + " (case \"" +
                                       c.label + "\")");
      }
      e.provenance = c.label;
      const BoundedPriors bounds = bounds_from_estimates(ws.cfg, {e});
      Region region;
      try {
        region = regions_from_priors(bounds, ws.cfg.ts, ws.cfg.region_flags);
      } catch (const std::invalid_argument& ex) {
        throw StageError("region", ex.what());
      }
      const std::string slug = case_slug(c.label);
      save_region(artifact(ws, "region_" + slug + ".json"), region);
      write_boundary_csv(artifact(ws, "boundary_" + slug + ".csv"), region);
      if (opts.format == "svg")
        write_region_svg(artifact(ws, "region_" + slug + ".svg"), region);
      json j = priors_json({e}, bounds);
      write_json(artifact(ws, "priors_" + slug + ".json"), j);
      std::cout << "region[" << c.label << "]: " << region.label << '\n';
    }
  } else {
    const auto est = prior_estimates(ws.cfg, plant);
    const BoundedPriors bounds = bounds_from_estimates(ws.cfg, est);
    Region region;
    try {
      region = regions_from_priors(bounds, ws.cfg.ts, ws.cfg.region_flags);
    } catch (const std::invalid_argument& e) {
      throw StageError("region", e.what());
    }
    save_region(artifact(ws, "region.json"), region);
    write_boundary_csv(artifact(ws, "boundary.csv"), region);
    if (opts.format == "svg")
      write_region_svg(artifact(ws, "region.svg"), region);
    write_json(artifact(ws, "priors.json"), priors_json(est, bounds));
    std::cout << "region: " << region.label << " (" << region.size()
              << " block rows)\n";
  }
  write_manifest(ws, "region");
  return 0;
}

int cmd_identify(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);
  const SignalRecord rec = identification_record(ws.cfg, plant, 0);
  save_signal(artifact(ws, "signal.csv"), rec);
  const IdentificationResult ident = identify_from_record(ws.cfg, rec);
  save_model(artifact(ws, "model.json"), ident.model);
  save_singular_values(artifact(ws, "singulars.csv"), ident.singular_values);
  write_manifest(ws, "identify");
  std::cout << "identify: order " << ident.order << ", spectral radius "
            << spectral_radius(ident.model.a) << " -> "
            << (opts.out_dir / "model.json").string() << '\n';
  return 0;
}

int cmd_constrain(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);

  // Upstream artifacts when present, fresh computation otherwise.
  DiscreteStateSpace model;
  const auto model_path = opts.out_dir / "model.json";
  if (std::filesystem::exists(model_path)) {
    model = load_model(model_path);
  } else {
    const SignalRecord rec = identification_record(ws.cfg, plant, 0);
    model = identify_from_record(ws.cfg, rec).model;
    save_model(artifact(ws, "model.json"), model);
  }
  Region region;
  const auto region_path = opts.out_dir / "region.json";
  if (std::filesystem::exists(region_path)) {
    region = load_region(region_path);
  } else {
    region = region_from_config(ws.cfg, plant);
    save_region(artifact(ws, "region.json"), region);
  }

  const SolveResult sol = constrain_model(model.a, region, true);
  save_solution(artifact(ws, "solution.json"), sol);
  save_trace(artifact(ws, "trace.csv"), sol.trace);
  DiscreteStateSpace constrained = model;
  constrained.a = sol.a_hat;
  save_model(artifact(ws, "constrained_model.json"), constrained);

  const VerifyReport rep = verify_solution(model.a, sol, region);
  if (!rep.all_inside)
    throw StageError("constrain",
                     "constrained spectrum escaped the region (tol 1e-6)");
  if (opts.format == "svg") {
    const MatrixXd ce = eig_points(sol.a_hat);
    const MatrixXd ue = eig_points(model.a);
    write_region_svg(artifact(ws, "spectrum.svg"), region, &ce, &ue);
  }
  write_manifest(ws, "constrain");
  std::cout << "constrain: objective " << sol.objective << ", "
            << sol.iterations << " iterations, spectral radius "
            << spectral_radius(sol.a_hat) << '\n';
  return 0;
}

namespace {

void write_bode_csv(const std::filesystem::path& path,
                    const std::vector<const DiscreteStateSpace*>& models,
                    const std::vector<std::string>& names, double ts) {
  // 200 logarithmically spaced points up to the Nyquist rate.
  const int n_pts = 200;
  const double w_lo = 1e-2, w_hi = M_PI / ts;
  std::ofstream out(path);
  if (!out) throw StageError("validate", "cannot write " + path.string());
  out << "w";
  for (const auto& name : names) out << ",mag_" << name << ",phase_" << name;
  out << '\n' << std::setprecision(10);
  for (int k = 0; k < n_pts; ++k) {
    const double w =
        w_lo * std::pow(w_hi / w_lo, static_cast<double>(k) / (n_pts - 1));
    out << w;
    for (const auto* m : models) {
      const std::complex<double> h = frequency_response(*m, w)(0, 0);
      out << ',' << std::abs(h) << ',' << std::arg(h);
    }
    out << '\n';
  }
}

}  // namespace

int cmd_pipeline(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  json report;

  // Stage 1: excitation record.
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);
  const SignalRecord rec = identification_record(ws.cfg, plant, 0);
  save_signal(artifact(ws, "signal.csv"), rec);
  save_model(artifact(ws, "plant.json"), plant);

  // Stage 2: subspace identification.
  const IdentificationResult ident = identify_from_record(ws.cfg, rec);
  save_model(artifact(ws, "model.json"), ident.model);
  save_singular_values(artifact(ws, "singulars.csv"), ident.singular_values);
  report["identify"] = {{"order", ident.order},
                        {"spectral_radius", spectral_radius(ident.model.a)}};

  // Stages 3-4: step test and feature readout.
  const SignalRecord step = step_record(ws.cfg, plant);
  save_signal(artifact(ws, "step.csv"), step);
  std::vector<PriorEstimates> est;
  try {
    if (ws.cfg.priors.mode == PriorSpec::Mode::explicit_values) {
      est = ws.cfg.priors.estimates;
      const StepFeatures f = extract_step_features(step, ws.cfg.features);
      save_feature_report(artifact(ws, "features.json"), f,
                          est.empty() ? PriorEstimates{} : est.front());
    } else if (ws.cfg.feature_cases.empty()) {
      const StepFeatures f = extract_step_features(step, ws.cfg.features);
      const PriorEstimates p = priors_from_features(f);
      save_feature_report(artifact(ws, "features.json"), f, p);
      est.push_back(p);
    } else {
      for (const auto& c : ws.cfg.feature_cases) {
        const StepFeatures f =
            extract_step_features(step, case_config(ws.cfg.features, c));
        PriorEstimates p = priors_from_features(f);
        p.provenance = c.label;
        save_feature_report(
            artifact(ws, "features_" + case_slug(c.label) + ".json"), f, p);
        est.push_back(std::move(p));
      }
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("features", e.what());
  }

  // Stage 5: priors -> region.
  const BoundedPriors bounds = bounds_from_estimates(ws.cfg, est);
  Region region;
  try {
    region = regions_from_priors(bounds, ws.cfg.ts, ws.cfg.region_flags);
  } catch (const std::invalid_argument& e) {
    throw StageError("region", e.what());
  }
  save_region(artifact(ws, "region.json"), region);
  write_boundary_csv(artifact(ws, "boundary.csv"), region);
  write_json(artifact(ws, "priors.json"), priors_json(est, bounds));
  report["region"] = {{"label", region.label},
                      {"block_rows", region.size()}};

  // Stage 6: constrained solve.
  const SolveResult sol = constrain_model(ident.model.a, region, true);
  save_solution(artifact(ws, "solution.json"), sol);
  save_trace(artifact(ws, "trace.csv"), sol.trace);
  DiscreteStateSpace constrained = ident.model;
  constrained.a = sol.a_hat;
  save_model(artifact(ws, "constrained_model.json"), constrained);
  report["constrain"] = {{"objective", sol.objective},
                         {"iterations", sol.iterations},
                         {"status", to_string(sol.status)}};

  // Stage 7: validation.
  const VerifyReport rep = verify_solution(ident.model.a, sol, region);
  if (!rep.all_inside)
    throw StageError("validate",
                     "constrained spectrum escaped the region (tol 1e-6)");
  json eigs = json::array();
  for (int i = 0; i < rep.eigenvalues.size(); ++i)
    eigs.push_back({{"re", rep.eigenvalues[i].real()},
                    {"im", rep.eigenvalues[i].imag()},
                    {"inside", static_cast<bool>(rep.inside[i])}});
  report["validate"] = {{"eigenvalues", eigs},
                        {"all_inside", rep.all_inside},
                        {"residual", rep.residual},
                        {"min_eig_constraint", rep.min_eig_constraint},
                        {"spectral_radius", spectral_radius(sol.a_hat)}};
  write_bode_csv(artifact(ws, "bode.csv"),
                 {&plant, &ident.model, &constrained},
                 {"plant", "identified", "constrained"}, ws.cfg.ts);
  if (opts.format == "svg") {
    const MatrixXd ce = eig_points(sol.a_hat);
    const MatrixXd ue = eig_points(ident.model.a);
    write_region_svg(artifact(ws, "spectrum.svg"), region, &ce, &ue);
  }
  write_json(artifact(ws, "report.json"), report);
  write_manifest(ws, "pipeline");
  std::cout << "pipeline: identified order " << ident.order
            << ", constrained objective " << sol.objective
            << ", all eigenvalues inside \"" << region.label << "\"\n";
  return 0;
}

int cmd_montecarlo(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const DiscreteStateSpace plant = resolve_plant(ws.cfg);
  const Region region = region_from_config(ws.cfg, plant);
  const int runs = ws.cfg.monte_carlo.runs;
  const int step_samples =
      static_cast<int>(std::round(ws.cfg.step_test.horizon / ws.cfg.ts)) + 1;

  std::vector<McRunResult> results(static_cast<size_t>(runs));
  std::atomic<int> next{0};
  int worker_count = ws.cfg.monte_carlo.workers;
  if (worker_count <= 0)
    worker_count = static_cast<int>(std::thread::hardware_concurrency());
  worker_count = std::max(1, std::min(worker_count, runs));

  auto worker = [&] {
    for (;;) {
      const int run = next.fetch_add(1);
      if (run >= runs) return;
      try {
        results[static_cast<size_t>(run)] =
            run_one(ws.cfg, plant, region, run, step_samples);
      } catch (const std::exception& e) {
        std::string msg = std::string("failed: ") + e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        results[static_cast<size_t>(run)].status = std::move(msg);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(worker_count));
  for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  // Scatter CSVs.
  {
    std::ofstream un(ws.opts.out_dir / "mc_unconstrained.csv");
    std::ofstream co(ws.opts.out_dir / "mc_constrained.csv");
    un << "run,re,im\n" << std::setprecision(12);
    co << "run,re,im\n" << std::setprecision(12);
    for (int r = 0; r < runs; ++r) {
      const auto& res = results[static_cast<size_t>(r)];
      for (int i = 0; i < res.unconstrained_eigs.size(); ++i)
        un << r << ',' << res.unconstrained_eigs[i].real() << ','
           << res.unconstrained_eigs[i].imag() << '\n';
      for (int i = 0; i < res.constrained_eigs.size(); ++i)
        co << r << ',' << res.constrained_eigs[i].real() << ','
           << res.constrained_eigs[i].imag() << '\n';
    }
    ws.artifacts.push_back("mc_unconstrained.csv");
    ws.artifacts.push_back("mc_constrained.csv");
  }

  // Membership table.
  {
    std::ofstream mem(ws.opts.out_dir / "mc_membership.csv");
    mem << "run,status,objective,min_margin,all_inside,sr_unconstrained,"
           "sr_constrained\n"
        << std::setprecision(12);
    for (int r = 0; r < runs; ++r) {
      const auto& res = results[static_cast<size_t>(r)];
      mem << r << ',' << res.status << ',' << res.objective << ','
          << res.min_margin << ',' << (res.all_inside ? 1 : 0) << ','
          << res.sr_unconstrained << ',' << res.sr_constrained << '\n';
    }
    ws.artifacts.push_back("mc_membership.csv");
  }

  // Normalized step-response bands over successful runs.
  int band_count = 0;
  VectorXd mean = VectorXd::Zero(step_samples);
  VectorXd m2 = VectorXd::Zero(step_samples);
  for (const auto& res : results) {
    if (res.step_normalized.size() != step_samples) continue;
    ++band_count;
    const VectorXd delta = res.step_normalized - mean;
    mean += delta / band_count;
    m2 += delta.cwiseProduct(res.step_normalized - mean);
  }
  {
    std::ofstream steps(ws.opts.out_dir / "mc_steps.csv");
    steps << "t,mean,std\n" << std::setprecision(12);
    for (int k = 0; k < step_samples; ++k) {
      const double sd =
          band_count > 1 ? std::sqrt(m2[k] / (band_count - 1)) : 0.0;
      steps << k * ws.cfg.ts << ',' << (band_count ? mean[k] : 0.0) << ','
            << sd << '\n';
    }
    ws.artifacts.push_back("mc_steps.csv");
  }

  // Aggregate report.
  int solver_ok = 0, inside_count = 0, unstable_unconstrained = 0,
      failures = 0;
  double max_sr_unconstrained = 0.0;
  for (const auto& res : results) {
    if (!res.identified || res.status.rfind("failed", 0) == 0) {
      ++failures;
      continue;
    }
    max_sr_unconstrained = std::max(max_sr_unconstrained, res.sr_unconstrained);
    if (res.sr_unconstrained > 1.0) ++unstable_unconstrained;
    if (res.status == "optimal") {
      ++solver_ok;
      if (res.all_inside) ++inside_count;
    }
  }
  json report;
  report["runs"] = runs;
  report["workers"] = worker_count;
  report["master_seed"] = ws.cfg.monte_carlo.master_seed;
  report["region"] = region.label;
  report["failures"] = failures;
  report["solver_optimal"] = solver_ok;
  report["constrained_all_inside"] = inside_count;
  report["inside_fraction"] =
      solver_ok > 0 ? static_cast<double>(inside_count) / solver_ok : 0.0;
  report["unconstrained_unstable"] = unstable_unconstrained;
  report["max_spectral_radius_unconstrained"] = max_sr_unconstrained;
  write_json(artifact(ws, "mc_report.json"), report);

  if (opts.format == "svg") {
    MatrixXd all_un(0, 2), all_co(0, 2);
    for (const auto& res : results) {
      const auto append = [](MatrixXd& dst, const VectorXcd& ev) {
        const int base = static_cast<int>(dst.rows());
        dst.conservativeResize(base + ev.size(), 2);
        for (int i = 0; i < ev.size(); ++i) {
          dst(base + i, 0) = ev[i].real();
          dst(base + i, 1) = ev[i].imag();
        }
      };
      append(all_un, res.unconstrained_eigs);
      append(all_co, res.constrained_eigs);
    }
    write_region_svg(artifact(ws, "mc_scatter.svg"), region, &all_co,
                     &all_un);
  }
  write_manifest(ws, "montecarlo");
  std::cout << "montecarlo: " << runs << " runs, " << solver_ok
            << " optimal solves, " << inside_count
            << " fully inside, unconstrained unstable "
            << unstable_unconstrained << ", failures " << failures << '\n';
  return 0;
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void write_points_csv(const std::filesystem::path& path, const MatrixXd& pts) {
  std::ofstream out(path);
  if (!out) throw StageError("gallery", "cannot write " + path.string());
  out << "re,im\n" << std::setprecision(12);
  for (int i = 0; i < pts.rows(); ++i)
    out << pts(i, 0) << ',' << pts(i, 1) << '\n';
}

// Exact constant-damping boundary: r(theta) = exp(-|theta| / tan psi),
// theta in (-pi, pi], sampled on the standard 720-point grid.
MatrixXd cardioid_points(double zeta, int n_theta = 720) {
  const double psi = std::acos(zeta);
  MatrixXd pts(n_theta, 2);
  for (int k = 0; k < n_theta; ++k) {
    const double theta = -M_PI + 2.0 * M_PI * (k + 0.5) / n_theta;
    const double r = std::exp(-std::abs(theta) / std::tan(psi));
    pts(k, 0) = r * std::cos(theta);
    pts(k, 1) = r * std::sin(theta);
  }
  return pts;
}

}  // namespace

int cmd_gallery(const RunOptions& opts) {
  Workspace ws = open_workspace(opts);
  const GallerySpec& g = ws.cfg.gallery;
  if (g.zeta.empty() && g.wd_max.empty() && g.zeta_wn_min.empty())
    throw ConfigError("gallery: no parameters to draw");

  for (double zeta : g.zeta) {
    if (!(zeta > 0.0 && zeta < 1.0))
      throw ConfigError("gallery: damping values must be in (0, 1)");
    const std::string tag = "zeta_" + fmt2(zeta);
    const MatrixXd exact = cardioid_points(zeta);
    const MatrixXd circ = boundary_polyline(damping_circle(zeta), 720);
    const MatrixXd ell = boundary_polyline(damping_ellipse(zeta), 720);
    const MatrixXd cons =
        boundary_polyline(damping_ellipse_conservative(zeta), 720);
    write_points_csv(artifact(ws, "gallery_cardioid_" + tag + ".csv"), exact);
    write_points_csv(artifact(ws, "gallery_circle_" + tag + ".csv"), circ);
    write_points_csv(artifact(ws, "gallery_ellipse_" + tag + ".csv"), ell);
    write_points_csv(artifact(ws, "gallery_conservative_" + tag + ".csv"),
                     cons);
    if (opts.format == "svg") {
      SvgCanvas svg(-1.25, 1.25, -1.25, 1.25);
      svg.axes();
      svg.polyline(unit_circle_points(), "#999999", 1.0, true);
      svg.polyline(exact, "#000000", 2.0, false, true);
      svg.polyline(circ, "#cc3311", 1.5, true, true);
      svg.polyline(ell, "#0077bb", 1.5, true, true);
      svg.polyline(cons, "#009988", 1.5, false, true);
      svg.text(-1.2, 1.15, "exact locus (solid black), damping " + fmt2(zeta));
      svg.text(-1.2, 1.05, "disc (red), ellipse (blue), normalized (teal)");
      svg.save(artifact(ws, "gallery_" + tag + ".svg"));
    }
  }

  for (double wd : g.wd_max) {
    const double theta = wd * ws.cfg.ts;
    const std::string tag = "cone_" + fmt2(wd);
    Region cone;
    try {
      cone = frequency_cone(theta);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("gallery: ") + e.what());
    }
    const MatrixXd pts = boundary_polyline(cone, 720);
    write_points_csv(artifact(ws, "gallery_" + tag + ".csv"), pts);
    if (opts.format == "svg") {
      SvgCanvas svg(-1.45, 1.45, -1.45, 1.45);
      svg.axes();
      svg.polyline(unit_circle_points(), "#999999", 1.0, true);
      svg.polyline(pts, "#0077bb", 2.0, false, true);
      svg.text(-1.4, 1.35, cone.label);
      svg.save(artifact(ws, "gallery_" + tag + ".svg"));
    }
  }

  for (double zwn : g.zeta_wn_min) {
    if (!(zwn > 0.0))
      throw ConfigError("gallery: settling rates must be positive");
    const std::string tag = "settling_" + fmt2(zwn);
    const Region circ = settling_circle(zwn, ws.cfg.ts);
    const MatrixXd pts = boundary_polyline(circ, 720);
    write_points_csv(artifact(ws, "gallery_" + tag + ".csv"), pts);
    if (opts.format == "svg") {
      SvgCanvas svg(-1.45, 1.45, -1.45, 1.45);
      svg.axes();
      svg.polyline(unit_circle_points(), "#999999", 1.0, true);
      svg.polyline(pts, "#009988", 2.0, false, true);
      svg.text(-1.4, 1.35, circ.label);
      svg.save(artifact(ws, "gallery_" + tag + ".svg"));
    }
  }

  // The balanced-axes case: at the critical damping ratio the inscribed
  // ellipse collapses onto the tangent disc.
  {
    const double zc = critical_damping_zeta();
    const MatrixXd circ = boundary_polyline(damping_circle(zc), 720);
    const MatrixXd ell = boundary_polyline(damping_ellipse(zc), 720);
    write_points_csv(artifact(ws, "gallery_critical_circle.csv"), circ);
    write_points_csv(artifact(ws, "gallery_critical_ellipse.csv"), ell);
    if (opts.format == "svg") {
      SvgCanvas svg(-1.0, 1.0, -1.0, 1.0);
      svg.axes();
      svg.polyline(circ, "#cc3311", 2.5, false, true);
      svg.polyline(ell, "#0077bb", 1.2, true, true);
      svg.text(-0.95, 0.9,
               "critical damping " + fmt2(zc) + ": ellipse equals disc");
      svg.save(artifact(ws, "gallery_critical.svg"));
    }
  }
  write_manifest(ws, "gallery");
  std::cout << "gallery: " << ws.artifacts.size() << " artifacts in "
            << opts.out_dir.string() << '\n';
  return 0;
}

}  // namespace sid::cli
