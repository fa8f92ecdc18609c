#include "sid/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json_util.hpp"

namespace sid {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Parabolic sub-sample refinement through three equally spaced values;
// returns the vertex offset in samples, clamped to half a sample.
double parabola_offset(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

double parabola_value(double a, double b, double c, double offset) {
  return b - 0.25 * (a - c) * offset;
}

// Prominence of a strict local extremum, on the sign-adjusted record where
// the extremum is a maximum: lowest level reachable on each side without
// climbing above the extremum, measured against the higher of the two.
double prominence_at(const VectorXd& v, int i) {
  const auto n = static_cast<int>(v.size());
  double left_base = v[i];
  for (int j = i - 1; j >= 0; --j) {
    if (v[j] > v[i]) break;
    left_base = std::min(left_base, v[j]);
  }
  double right_base = v[i];
  for (int j = i + 1; j < n; ++j) {
    if (v[j] > v[i]) break;
    right_base = std::min(right_base, v[j]);
  }
  return v[i] - std::max(left_base, right_base);
}

Extremum make_extremum(const VectorXd& t, const VectorXd& ys, int i,
                       bool is_peak, bool refine, bool hand_picked) {
  Extremum e;
  e.index = i;
  e.is_peak = is_peak;
  e.hand_picked = hand_picked;
  e.t = t[i];
  e.value = ys[i];
  const auto n = static_cast<int>(ys.size());
  if (refine && i > 0 && i + 1 < n) {
    const double a = ys[i - 1], b = ys[i], c = ys[i + 1];
    const double off = parabola_offset(a, b, c);
    const double dt = off >= 0.0 ? t[i + 1] - t[i] : t[i] - t[i - 1];
    e.t = t[i] + off * dt;
    e.value = parabola_value(a, b, c, off);
  }
  return e;
}

}  // namespace

VectorXd smooth_moving_average(const VectorXd& y, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const auto n = static_cast<int>(y.size());
  const int h = window / 2;
  if (h == 0) return y;
  VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - h);
    const int hi = std::min(n - 1, i + h);
    out[i] = y.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

std::vector<Extremum> find_extrema(const VectorXd& t, const VectorXd& ysmooth,
                                   double min_prominence, bool refine) {
  if (t.size() != ysmooth.size())
    throw std::invalid_argument("time/value length mismatch");
  std::vector<Extremum> out;
  const auto n = static_cast<int>(ysmooth.size());
  const VectorXd neg = -ysmooth;
  for (int i = 1; i + 1 < n; ++i) {
    const bool peak =
        ysmooth[i] > ysmooth[i - 1] && ysmooth[i] > ysmooth[i + 1];
    const bool valley =
        ysmooth[i] < ysmooth[i - 1] && ysmooth[i] < ysmooth[i + 1];
    if (!peak && !valley) continue;
    const double prom =
        peak ? prominence_at(ysmooth, i) : prominence_at(neg, i);
    if (prom < min_prominence) continue;
    Extremum e = make_extremum(t, ysmooth, i, peak, refine, false);
    e.prominence = prom;
    out.push_back(e);
  }
  return out;
}

StepFeatures extract_step_features(const VectorXd& t, const VectorXd& y,
                                   const FeatureConfig& cfg) {
  const auto n = static_cast<int>(y.size());
  if (n < 2 || t.size() != y.size())
    throw std::invalid_argument("need at least two samples");

  const int window =
      cfg.smooth_window > 0 ? cfg.smooth_window : std::max(3, n / 100);
  const VectorXd ys = smooth_moving_average(y, window);

  StepFeatures f;
  const int tail = std::max(1, n / 10);
  f.y_final = y.tail(tail).mean();
  f.y0 = cfg.baseline.value_or(ys[0]);
  const double step_size = std::abs(f.y_final - f.y0);

  if (!cfg.explicit_extrema.empty()) {
    for (int idx : cfg.explicit_extrema) {
      if (idx < 0 || idx >= n)
        throw std::invalid_argument("explicit extremum index out of range");
      // Classify by neighborhood; on monotone stretches fall back to the
      // side of the steady state the sample lies on.
      bool is_peak;
      if (idx > 0 && idx + 1 < n && ys[idx] >= ys[idx - 1] &&
          ys[idx] >= ys[idx + 1])
        is_peak = true;
      else if (idx > 0 && idx + 1 < n && ys[idx] <= ys[idx - 1] &&
               ys[idx] <= ys[idx + 1])
        is_peak = false;
      else
        is_peak = ys[idx] >= f.y_final;
      f.extrema.push_back(
          make_extremum(t, ys, idx, is_peak, cfg.refine_extrema, true));
    }
    std::sort(f.extrema.begin(), f.extrema.end(),
              [](const Extremum& a, const Extremum& b) { return a.t < b.t; });
  } else {
    f.extrema =
        find_extrema(t, ys, cfg.prominence_rel * step_size, cfg.refine_extrema);
  }

  const Extremum* peak1 = nullptr;
  const Extremum* peak2 = nullptr;
  const Extremum* valley_after = nullptr;
  for (const Extremum& e : f.extrema) {
    if (e.is_peak) {
      if (!peak1)
        peak1 = &e;
      else if (!peak2)
        peak2 = &e;
    } else if (peak1 && !valley_after) {
      valley_after = &e;
    }
  }

  if (peak1 && f.y_final != f.y0) {
    f.overshoot_pct = 100.0 * (peak1->value - f.y_final) / (f.y_final - f.y0);
    f.peak_time = peak1->t;
  }
  if (cfg.period == PeriodRule::half && peak1 && valley_after)
    f.period_damped = 2.0 * (valley_after->t - peak1->t);
  else if (cfg.period == PeriodRule::full && peak2)
    f.period_damped = peak2->t - peak1->t;

  // Settling: last excursion outside the band, then the next sample.
  const double band = cfg.settle_band_rel * step_size;
  int last_out = -1;
  for (int i = 0; i < n; ++i)
    if (std::abs(y[i] - f.y_final) > band) last_out = i;
  if (last_out < 0)
    f.settling_time = t[0];
  else if (last_out + 1 < n)
    f.settling_time = t[last_out + 1];
  else
    f.settling_time = t[n - 1] + (t[n - 1] - t[n - 2]);

  // Rise time 10% -> 90% of the step, sub-sample by linear interpolation.
  if (step_size > 0.0) {
    const double dir = f.y_final - f.y0;
    auto crossing = [&](double frac) -> std::optional<double> {
      const double target = f.y0 + frac * dir;
      for (int i = 0; i < n; ++i) {
        const bool reached = dir > 0.0 ? ys[i] >= target : ys[i] <= target;
        if (!reached) continue;
        if (i == 0) return t[0];
        const double span = ys[i] - ys[i - 1];
        const double w = span == 0.0 ? 0.0 : (target - ys[i - 1]) / span;
        return t[i - 1] + w * (t[i] - t[i - 1]);
      }
      return std::nullopt;
    };
    const auto t10 = crossing(0.1);
    const auto t90 = crossing(0.9);
    if (t10 && t90 && *t90 >= *t10) f.rise_time = *t90 - *t10;
  }
  return f;
}

StepFeatures extract_step_features(const SignalRecord& rec,
                                   const FeatureConfig& cfg) {
  if (rec.outputs() < 1) throw std::invalid_argument("record has no outputs");
  return extract_step_features(rec.t, rec.y.col(0), cfg);
}

PriorEstimates priors_from_features(const StepFeatures& f,
                                    bool exact_decrement) {
  PriorEstimates p;
  std::string prov;
  if (f.overshoot_pct) {
    const double os = *f.overshoot_pct;
    if (os >= 100.0)
      throw std::domain_error("overshoot >= 100% leaves no damping estimate");
    if (exact_decrement && os > 0.0) {
      const double l = std::log(os / 100.0);
      p.zeta = -l / std::sqrt(kPi * kPi + l * l);
      prov += "zeta from log-decrement of first peak; ";
    } else {
      p.zeta = 0.6 * (1.0 - os / 100.0);
      prov += "zeta from linearized overshoot of first peak; ";
    }
  }
  if (f.period_damped && *f.period_damped > 0.0) {
    p.wd = 2.0 * kPi / *f.period_damped;
    prov += "wd from extremum spacing; ";
  }
  if (f.settling_time > 0.0) {
    p.zeta_wn = 4.6 / f.settling_time;
    prov += "zeta_wn from 1% settling time";
  }
  p.provenance = std::move(prov);
  return p;
}

namespace {

struct FieldStats {
  std::optional<double> mean;
  std::optional<double> delta;
};

FieldStats field_stats(const std::vector<double>& vals, SpreadRule rule) {
  FieldStats s;
  if (vals.empty()) return s;
  const double mean =
      std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  s.mean = mean;
  if (vals.size() < 2) {
    s.delta = 0.0;
    return s;
  }
  if (rule == SpreadRule::difference) {
    const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
    s.delta = *hi - *lo;
  } else {
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    s.delta = std::sqrt(ss / (vals.size() - 1));
  }
  return s;
}

}  // namespace

PriorSpread aggregate_priors(const std::vector<PriorEstimates>& estimates,
                             SpreadRule rule) {
  if (estimates.empty()) throw std::invalid_argument("no estimates");
  std::vector<double> zeta, wd, zeta_wn;
  for (const auto& e : estimates) {
    if (e.zeta) zeta.push_back(*e.zeta);
    if (e.wd) wd.push_back(*e.wd);
    if (e.zeta_wn) zeta_wn.push_back(*e.zeta_wn);
  }
  PriorSpread out;
  const FieldStats sz = field_stats(zeta, rule);
  const FieldStats sw = field_stats(wd, rule);
  const FieldStats sr = field_stats(zeta_wn, rule);
  out.mean.zeta = sz.mean;
  out.mean.wd = sw.mean;
  out.mean.zeta_wn = sr.mean;
  out.mean.provenance = "aggregate of " + std::to_string(estimates.size()) +
                        " estimates";
  out.zeta_delta = sz.delta;
  out.wd_delta = sw.delta;
  out.zeta_wn_delta = sr.delta;
  return out;
}

BoundedPriors apply_tuning(const PriorEstimates& priors, double delta_zeta,
                           double delta_wd, double delta_zeta_wn) {
  if (delta_zeta < 0.0 || delta_wd < 0.0 || delta_zeta_wn < 0.0)
    throw std::invalid_argument("tuning margins must be nonnegative");
  BoundedPriors b;
  b.delta_zeta = delta_zeta;
  b.delta_wd = delta_wd;
  b.delta_zeta_wn = delta_zeta_wn;
  if (priors.zeta) {
    const double z = *priors.zeta - delta_zeta;
    if (!(z > 0.0 && z < 1.0))
      throw std::domain_error("widened damping bound left (0, 1)");
    b.zeta_min = z;
  }
  if (priors.wd) {
    const double w = *priors.wd + delta_wd;
    if (!(w > 0.0)) throw std::domain_error("frequency bound must be positive");
    b.wd_max = w;
  }
  if (priors.zeta_wn) {
    const double r = *priors.zeta_wn - delta_zeta_wn;
    if (!(r > 0.0))
      throw std::domain_error("widened settling-rate bound must be positive");
    b.zeta_wn_min = r;
  }
  return b;
}

Region regions_from_priors(const BoundedPriors& bounds, double ts,
                           const RegionFlags& flags) {
  if (!(ts > 0.0)) throw std::invalid_argument("sampling period must be positive");
  std::vector<Region> parts;
  if (flags.damping) {
    if (!bounds.zeta_min)
      throw std::invalid_argument("damping flag set without a damping bound");
    parts.push_back(flags.conservative
                        ? damping_ellipse_conservative(*bounds.zeta_min)
                        : damping_ellipse(*bounds.zeta_min));
  }
  if (flags.frequency) {
    if (!bounds.wd_max)
      throw std::invalid_argument("frequency flag set without a frequency bound");
    const double theta = *bounds.wd_max * ts;
    if (!(theta < kPi / 2.0))
      throw std::invalid_argument(
          "frequency bound too high for the sampling period: the oscillation "
          "must span more than four samples");
    parts.push_back(frequency_cone(theta));
  }
  if (flags.settling) {
    if (!bounds.zeta_wn_min)
      throw std::invalid_argument("settling flag set without a rate bound");
    parts.push_back(settling_circle(*bounds.zeta_wn_min, ts));
  }
  if (parts.empty()) throw std::invalid_argument("no region selected");
  Region out = parts.front();
  for (size_t i = 1; i < parts.size(); ++i) out = intersect(out, parts[i]);
  return out;
}

void save_feature_report(const std::filesystem::path& path,
                         const StepFeatures& f, const PriorEstimates& priors) {
  nlohmann::json j;
  j["y0"] = f.y0;
  j["y_final"] = f.y_final;
  j["overshoot_pct"] =
      f.overshoot_pct ? nlohmann::json(*f.overshoot_pct) : nlohmann::json();
  j["period_damped"] =
      f.period_damped ? nlohmann::json(*f.period_damped) : nlohmann::json();
  j["settling_time"] = f.settling_time;
  j["rise_time"] = f.rise_time ? nlohmann::json(*f.rise_time) : nlohmann::json();
  j["peak_time"] = f.peak_time ? nlohmann::json(*f.peak_time) : nlohmann::json();
  nlohmann::json ext = nlohmann::json::array();
  for (const auto& e : f.extrema) {
    ext.push_back({{"index", e.index},
                   {"t", e.t},
                   {"value", e.value},
                   {"kind", e.is_peak ? "peak" : "valley"},
                   {"prominence", e.prominence},
                   {"hand_picked", e.hand_picked}});
  }
  j["extrema"] = std::move(ext);
  nlohmann::json pj;
  pj["zeta"] = priors.zeta ? nlohmann::json(*priors.zeta) : nlohmann::json();
  pj["wd"] = priors.wd ? nlohmann::json(*priors.wd) : nlohmann::json();
  pj["zeta_wn"] =
      priors.zeta_wn ? nlohmann::json(*priors.zeta_wn) : nlohmann::json();
  pj["provenance"] = priors.provenance;
  j["priors"] = std::move(pj);
  detail::save_json_file(path, j);
}

}  // namespace sid
