// Acceptance gate for the identification workbench: twelve numbered checks,
// each printing one PASS/FAIL line with the measured quantities and its
// runtime. Run with no argument to execute all twelve, or with a single
// number to execute one. Exit code 0 iff every executed check passes.

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "sid/constrain.hpp"
#include "sid/features.hpp"
#include "sid/lti.hpp"
#include "sid/region.hpp"
#include "sid/sysid.hpp"

using namespace sid;
using std::complex;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<complex<double>> sorted_eigs(const MatrixXd& a) {
  const VectorXcd e = eigenvalues(a);
  std::vector<complex<double>> v(e.data(), e.data() + e.size());
  std::sort(v.begin(), v.end(), [](complex<double> x, complex<double> y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return v;
}

// The two benchmark plants exercised by the study criteria.
TransferFunction resonant_plant() { return {{0.7}, {1.0, 0.4, 1.0}}; }
TransferFunction fourth_order_plant() {
  return {{100.0, 1500.0}, {1.0, 11.0, 130.0, 1020.0, 2000.0}};
}
TransferFunction resonant_noise_filter() {
  return {{10.0, 0.0, 5.0}, {1.0, 10.0, 1.0, 2.0}};
}
TransferFunction fourth_order_noise_filter() {
  return {{10.0, 0.0, 2.0}, {1.0, 10.0, 1.0, 20.0}};
}

MatrixXd prbs_matrix(int bits, int hold, double amplitude, int samples,
                     std::uint32_t seed) {
  const auto seq = prbs(bits, hold, amplitude, samples, seed);
  MatrixXd u(samples, 1);
  for (int k = 0; k < samples; ++k) u(k, 0) = seq[static_cast<size_t>(k)];
  return u;
}

// Standard deviation of the stationary output of a stable sampled filter
// driven by unit white noise (discrete Lyapunov solve).
double stationary_output_std(const TransferFunction& tf, double ts) {
  const DiscreteStateSpace f = c2d_zoh(tf_to_ss(tf), ts);
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

// ---------------------------------------------------------------------------
// 1. Critical damping ratio where the inscribed ellipse degenerates.
// ---------------------------------------------------------------------------
Outcome criterion_1() {
  const double zeta = critical_damping_zeta();
  const double beta_deg = std::acos(zeta) * 180.0 / kPi;
  const bool pass = zeta >= 0.6123 && zeta <= 0.6133 && beta_deg >= 52.1 &&
                    beta_deg <= 52.3;
  return {pass, fmt("critical zeta %.6f in [0.6123, 0.6133], cone angle "
                    "%.4f deg in [52.1, 52.3]",
                    zeta, beta_deg)};
}

// ---------------------------------------------------------------------------
// 2. Conservative ellipse: unit-sum parameters, horizontal orientation, and
//    tangency at z = 1.
// ---------------------------------------------------------------------------
Outcome criterion_2() {
  double worst_sum = 0.0, worst_boundary = 0.0;
  bool oriented = true;
  for (int i = 0; i < 50; ++i) {
    const double zeta = 0.02 + (0.98 - 0.02) * (i + 0.5) / 50.0;
    const EllipseParams p = damping_ellipse_conservative_params(zeta);
    worst_sum = std::max(worst_sum,
                         std::abs(p.semi_real + p.center - 1.0));
    oriented = oriented && p.semi_real > p.semi_imag;
    const Region r = damping_ellipse_conservative(zeta);
    worst_boundary = std::max(
        worst_boundary, std::abs(member_min_eig(r, complex<double>(1.0, 0.0))));
  }
  const bool pass = worst_sum <= 1e-12 && oriented && worst_boundary <= 1e-9;
  return {pass, fmt("50 ratios: max |a_n + c_n - 1| = %.2e (<= 1e-12), "
                    "a_n > b %s, max |min eig at z=1| = %.2e (<= 1e-9)",
                    worst_sum, oriented ? "holds" : "VIOLATED",
                    worst_boundary)};
}

// ---------------------------------------------------------------------------
// 3. Coverage ordering of the three damping templates over the exact locus.
// ---------------------------------------------------------------------------
Outcome criterion_3() {
  const int kept_target = 100000;
  bool pass = true;
  std::string detail;
  const double zetas[] = {0.1, 0.5, 0.9};
  for (int i = 0; i < 3; ++i) {
    const double zeta = zetas[i];
    const Region circle_r = damping_circle(zeta);
    const Region ellipse_r = damping_ellipse(zeta);
    const Region conservative_r = damping_ellipse_conservative(zeta);
    std::mt19937_64 rng(0x33 + i);
    int in_circle = 0, in_ellipse = 0, in_conservative = 0;
    for (int kept = 0; kept < kept_target;) {
      const complex<double> z(uniform(rng, -1.0, 1.0),
                              uniform(rng, -1.0, 1.0));
      if (!damping_contains_exact(zeta, z)) continue;
      ++kept;
      if (contains(circle_r, z)) ++in_circle;
      if (contains(ellipse_r, z)) ++in_ellipse;
      if (contains(conservative_r, z)) ++in_conservative;
    }
    const double fc = double(in_circle) / kept_target;
    const double fe = double(in_ellipse) / kept_target;
    const double fv = double(in_conservative) / kept_target;
    pass = pass && fv >= fc + 0.01 && fv >= fe + 0.01;
    detail += fmt("%szeta %.1f: circle %.4f, ellipse %.4f, conservative %.4f",
                  i ? "; " : "", zeta, fc, fe, fv);
  }
  return {pass, detail + " (conservative leads each by >= 0.01)"};
}

// ---------------------------------------------------------------------------
// 4. LMI membership agrees with the closed-form geometric predicate for every
//    constructor, outside a 1e-8 boundary band.
// ---------------------------------------------------------------------------
Outcome criterion_4() {
  std::mt19937_64 rng(0x44);
  long long tested = 0, disagreements = 0;

  const auto check = [&](const Region& r, auto&& geometric_margin) {
    for (int k = 0; k < 10000; ++k) {
      const double x = uniform(rng, -1.5, 1.5);
      const double y = uniform(rng, -1.5, 1.5);
      const double margin = geometric_margin(x, y);
      if (std::abs(margin) < 1e-8) continue;  // boundary band excluded
      ++tested;
      const bool lmi = contains(r, complex<double>(x, y));
      if (lmi != (margin >= 0.0)) ++disagreements;
    }
  };

  for (const double zeta : {0.25, 0.36, 0.75}) {
    const CircleParams c = damping_circle_params(zeta);
    check(damping_circle(zeta), [&](double x, double y) {
      return c.radius - std::hypot(x - c.center, y);
    });
    const EllipseParams e = damping_ellipse_params(zeta);
    check(damping_ellipse(zeta), [&](double x, double y) {
      const double u = (x - e.center) / e.semi_real;
      const double v = y / e.semi_imag;
      return 1.0 - (u * u + v * v);
    });
    const EllipseParams g = damping_ellipse_conservative_params(zeta);
    check(damping_ellipse_conservative(zeta), [&](double x, double y) {
      const double u = (x - g.center) / g.semi_real;
      const double v = y / g.semi_imag;
      return 1.0 - (u * u + v * v);
    });
  }
  for (const double theta : {0.3, 1.0}) {
    check(frequency_cone(theta), [&](double x, double y) {
      return std::tan(theta) * x - std::abs(y);
    });
  }
  for (const double radius : {std::exp(-0.48 * 0.05), std::exp(-1.0 * 0.3)}) {
    check(settling_circle(-std::log(radius) / 0.3, 0.3),
          [&](double x, double y) { return radius - std::hypot(x, y); });
  }

  return {disagreements == 0,
          fmt("%lld points across 13 parameterized constructors: %lld "
              "disagreements between LMI and geometric membership",
              tested, disagreements)};
}

// ---------------------------------------------------------------------------
// 5. Intersection membership is the conjunction of the parts.
// ---------------------------------------------------------------------------
Outcome criterion_5() {
  std::mt19937_64 rng(0x55);
  int tested = 0, disagreements = 0;
  for (int block = 0; block < 20; ++block) {
    const Region r1 = damping_ellipse(uniform(rng, 0.1, 0.9));
    const Region r2 = frequency_cone(uniform(rng, 0.2, 1.3));
    const Region r3 = settling_circle(uniform(rng, 0.2, 1.2), 0.3);
    const Region both = intersect(intersect(r1, r2), r3);
    for (int k = 0; k < 500; ++k) {
      const complex<double> z(uniform(rng, -1.5, 1.5),
                              uniform(rng, -1.5, 1.5));
      ++tested;
      const bool joint = contains(both, z);
      const bool parts = contains(r1, z) && contains(r2, z) && contains(r3, z);
      if (joint != parts) ++disagreements;
    }
  }
  return {disagreements == 0,
          fmt("%d points over 20 random constructor triples: %d disagreements "
              "between joint and part-wise membership",
              tested, disagreements)};
}

// ---------------------------------------------------------------------------
// 6. Scalar projections match a dense two-stage grid-search oracle.
// ---------------------------------------------------------------------------
Outcome criterion_6() {
  // Projection of 1.2 onto the unit stability disk lands on the boundary.
  const MatrixXd a_star = MatrixXd::Constant(1, 1, 1.2);
  const SolveResult unit = constrain_spectrum(a_star, stability_circle());
  const double a_hat = unit.a_hat(0, 0);
  bool pass = unit.status == SolveStatus::optimal && a_hat >= 0.999 &&
              a_hat <= 1.001;
  std::string detail = fmt("projection of 1.2 onto the unit disk: %.6f in "
                           "[0.999, 1.001]",
                           a_hat);

  // Dense grid oracle on the real line: coarse pass over [-1.6, 1.6], then a
  // fine pass around the coarse argmin.
  const auto grid_oracle = [](double a, const Region& r) {
    double best_x = 0.0, best = -1.0;
    const auto scan = [&](double lo, double hi, int n) {
      for (int k = 0; k <= n; ++k) {
        const double x = lo + (hi - lo) * k / n;
        if (!contains(r, complex<double>(x, 0.0))) continue;
        const double obj = (a - x) * (a - x);
        if (best < 0.0 || obj < best) {
          best = obj;
          best_x = x;
        }
      }
    };
    scan(-1.6, 1.6, 6400);
    if (best >= 0.0) {
      const double step = 3.2 / 6400;
      scan(best_x - 2 * step, best_x + 2 * step, 6400);
    }
    return best;  // negative when no feasible real point was seen
  };

  std::mt19937_64 rng(0x66);
  double worst_rel = 0.0;
  int instances = 0;
  while (instances < 20) {
    Region r;
    switch (instances % 3) {
      case 0:
        r = circle(uniform(rng, -0.4, 0.4), uniform(rng, 0.3, 0.8));
        break;
      case 1:
        r = ellipse(uniform(rng, -0.3, 0.3), uniform(rng, 0.3, 0.8),
                    uniform(rng, 0.2, 0.6));
        break;
      default:
        r = frequency_cone(uniform(rng, 0.3, 1.2));
        break;
    }
    const double a = uniform(rng, -1.5, 1.5);
    const double oracle = grid_oracle(a, r);
    // Keep instances with a genuine exterior projection so the relative
    // comparison is meaningful.
    if (oracle < 2.5e-3) continue;
    ++instances;
    const SolveResult sol =
        constrain_spectrum(MatrixXd::Constant(1, 1, a), r);
    if (sol.status != SolveStatus::optimal) {
      pass = false;
      detail += fmt("; instance %d did not solve", instances);
      continue;
    }
    worst_rel =
        std::max(worst_rel, std::abs(sol.objective - oracle) / oracle);
  }
  pass = pass && worst_rel <= 1e-4;
  detail += fmt("; 20 random scalar instances: max relative objective "
                "deviation %.2e (<= 1e-4)",
                worst_rel);
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 7. Spectra already inside the region pass through unchanged.
// ---------------------------------------------------------------------------
Outcome criterion_7() {
  std::mt19937_64 rng(0x77);
  double worst_obj = 0.0, worst_diff = 0.0;
  int solved = 0;
  for (int i = 0; i < 20; ++i) {
    Region r;
    switch (i % 4) {
      case 0:
        r = damping_ellipse_conservative(uniform(rng, 0.2, 0.6));
        break;
      case 1:
        r = frequency_cone(uniform(rng, 0.6, 1.4));
        break;
      case 2:
        r = settling_circle(uniform(rng, 0.1, 0.8), 0.3);
        break;
      default:
        r = circle(uniform(rng, -0.2, 0.2), uniform(rng, 0.5, 0.8));
        break;
    }
    const RealPoint anchor = best_real_point(r);
    const double margin = 0.3 * anchor.min_eig;

    // Assemble a real matrix with the sampled spectrum: 2x2 rotation blocks
    // for complex pairs, scalars for real eigenvalues, in a random
    // orthogonal basis.
    const int n = 2 + i % 3;
    std::vector<MatrixXd> blocks;
    int filled = 0;
    while (filled < n) {
      const bool pair = (n - filled >= 2) && uniform(rng, 0.0, 1.0) < 0.7;
      const double x = anchor.rho + uniform(rng, -1.0, 1.0);
      const double y = pair ? uniform(rng, 0.02, 1.0) : 0.0;
      if (member_min_eig(r, complex<double>(x, y)) < margin) continue;
      if (pair) {
        MatrixXd b(2, 2);
        b << x, y, -y, x;
        blocks.push_back(b);
        filled += 2;
      } else {
        blocks.push_back(MatrixXd::Constant(1, 1, x));
        filled += 1;
      }
    }
    MatrixXd blk = MatrixXd::Zero(n, n);
    int at = 0;
    for (const MatrixXd& b : blocks) {
      blk.block(at, at, b.rows(), b.cols()) = b;
      at += static_cast<int>(b.rows());
    }
    MatrixXd g(n, n);
    for (int rr = 0; rr < n; ++rr)
      for (int cc = 0; cc < n; ++cc) g(rr, cc) = uniform(rng, -1.0, 1.0);
    const MatrixXd q_basis =
        Eigen::HouseholderQR<MatrixXd>(g).householderQ();
    const MatrixXd a_star = q_basis * blk * q_basis.transpose();

    const SolveResult sol = constrain_spectrum(a_star, r);
    if (sol.status == SolveStatus::optimal) ++solved;
    worst_obj = std::max(worst_obj, sol.objective);
    worst_diff = std::max(worst_diff, (sol.a_hat - a_star).norm());
  }
  const bool pass = solved == 20 && worst_obj <= 1e-8 && worst_diff <= 1e-5;
  return {pass, fmt("20 interior spectra (n <= 4): %d optimal, max objective "
                    "%.2e (<= 1e-8), max ||A_hat - A*||_F %.2e (<= 1e-5)",
                    solved, worst_obj, worst_diff)};
}

// ---------------------------------------------------------------------------
// 8. Subspace identification recovers noise-free random systems.
// ---------------------------------------------------------------------------
Outcome criterion_8() {
  std::mt19937_64 rng(0x88);
  double worst_markov = 0.0, worst_eig = 0.0;
  int cases = 0;
  for (const int n : {2, 3, 4}) {
    for (int rep = 0; rep < 3; ++rep) {
      ++cases;
      DiscreteStateSpace truth;
      truth.ts = 1.0;
      truth.a.resize(n, n);
      for (int rr = 0; rr < n; ++rr)
        for (int cc = 0; cc < n; ++cc)
          truth.a(rr, cc) = uniform(rng, -1.0, 1.0);
      truth.a *= 0.85 / spectral_radius(truth.a);
      truth.b.resize(n, 1);
      truth.c.resize(1, n);
      for (int k = 0; k < n; ++k) {
        truth.b(k, 0) = uniform(rng, -1.0, 1.0);
        truth.c(0, k) = uniform(rng, -1.0, 1.0);
      }
      truth.d = MatrixXd::Constant(1, 1, uniform(rng, -1.0, 1.0));

      const MatrixXd u = prbs_matrix(
          12, 1, 1.0, 4000, static_cast<std::uint32_t>(101 + cases));
      const MatrixXd y = simulate(truth, u);
      SubspaceConfig cfg;
      cfg.order = n;
      cfg.detrend = false;  // noise-free record, keep the exact levels
      const IdentificationResult ident = pi_moesp(u, y, truth.ts, cfg);

      worst_markov =
          std::max(worst_markov, markov_distance(ident.model, truth, 20));
      const auto have = sorted_eigs(ident.model.a);
      const auto want = sorted_eigs(truth.a);
      for (size_t k = 0; k < want.size(); ++k)
        worst_eig = std::max(worst_eig, std::abs(have[k] - want[k]));
    }
  }
  const bool pass = worst_markov <= 1e-5 && worst_eig <= 1e-6;
  return {pass, fmt("%d noise-free systems (n = 2, 3, 4; 4000-sample "
                    "excitation): max relative Markov deviation %.2e "
                    "(<= 1e-5), max eigenvalue error %.2e (<= 1e-6)",
                    cases, worst_markov, worst_eig)};
}

// ---------------------------------------------------------------------------
// 9. Resonant benchmark study: constrained spectra always land inside the
//    region; the unconstrained runs exhibit the occasional unstable model.
// ---------------------------------------------------------------------------
Outcome criterion_9() {
  const DiscreteStateSpace plant = c2d_zoh(tf_to_ss(resonant_plant()), 0.3);
  const Region region = intersect(damping_ellipse_conservative(0.36),
                                  frequency_cone(1.27 * 0.3));
  const MatrixXd u = prbs_matrix(16, 100, 1.0, 134, 44769u);
  const MatrixXd y_clean = simulate(plant, u);

  int inside_runs = 0, unstable_unconstrained = 0, optimal_runs = 0;
  double worst_margin = 1e300, max_sr_unconstrained = 0.0;
  for (int run = 0; run < 20; ++run) {
    MatrixXd y = y_clean;
    y.col(0) += colored_noise(resonant_noise_filter(), 0.3, 134, 1.0,
                              derive_seed(9001, run), 80);
    SubspaceConfig cfg;
    cfg.order = 2;
    const IdentificationResult ident = pi_moesp(u, y, 0.3, cfg);
    const double sr_unc = spectral_radius(ident.model.a);
    max_sr_unconstrained = std::max(max_sr_unconstrained, sr_unc);
    if (sr_unc > 1.0) ++unstable_unconstrained;

    const SolveResult sol = constrain_spectrum(ident.model.a, region);
    if (sol.status != SolveStatus::optimal) continue;
    ++optimal_runs;
    const VectorXcd eigs = eigenvalues(sol.a_hat);
    bool inside = spectral_radius(sol.a_hat) < 1.0;
    for (int k = 0; k < eigs.size(); ++k) {
      const double m = member_min_eig(region, eigs[k]);
      worst_margin = std::min(worst_margin, m);
      inside = inside && m >= -1e-6;
    }
    if (inside) ++inside_runs;
  }

  const bool constrained_ok = optimal_runs == 20 && inside_runs == 20;
  std::string detail =
      fmt("20 noisy runs: %d optimal solves, %d/20 constrained spectra "
          "inside at tol 1e-6 (worst margin %+.2e), spectral radius < 1",
          optimal_runs, inside_runs, worst_margin);
  if (unstable_unconstrained > 0)
    detail += fmt("; unconstrained: %d/20 unstable (max spectral radius "
                  "%.4f)",
                  unstable_unconstrained, max_sr_unconstrained);
  else
    detail += "; unstable unconstrained model not observed at this seed";
  return {constrained_ok, detail};
}

// ---------------------------------------------------------------------------
// 10. Statistical prior recovery from noisy step tests.
// ---------------------------------------------------------------------------
Outcome criterion_10() {
  const DiscreteStateSpace plant = c2d_zoh(tf_to_ss(resonant_plant()), 0.3);
  const int n = 101;  // 30 s at ts = 0.3
  const double sigma =
      0.39 / stationary_output_std(resonant_noise_filter(), 0.3);
  const MatrixXd u = MatrixXd::Ones(n, 1);
  const MatrixXd y_clean = simulate(plant, u);
  VectorXd t(n);
  for (int k = 0; k < n; ++k) t[k] = 0.3 * k;

  double zeta_sum = 0.0, wd_sum = 0.0;
  int zeta_count = 0, wd_count = 0, skipped = 0;
  for (int run = 0; run < 50; ++run) {
    VectorXd y = y_clean.col(0);
    y += colored_noise(resonant_noise_filter(), 0.3, n, sigma,
                       derive_seed(9001, 1000003 + run), 67);
    FeatureConfig fc;
    fc.smooth_window = 5;      // noise std is ~half the step size
    fc.prominence_rel = 0.25;  // only extrema prominent vs that noise count
    fc.baseline = 0.0;         // the test starts from rest
    fc.period = PeriodRule::half;
    try {
      const StepFeatures f = extract_step_features(t, y, fc);
      const PriorEstimates p = priors_from_features(f);
      if (p.zeta) {
        zeta_sum += *p.zeta;
        ++zeta_count;
      }
      if (p.wd) {
        wd_sum += *p.wd;
        ++wd_count;
      }
    } catch (const std::exception&) {
      ++skipped;
    }
  }
  const double zeta_mean = zeta_count ? zeta_sum / zeta_count : 0.0;
  const double wd_mean = wd_count ? wd_sum / wd_count : 0.0;
  const bool pass = zeta_count > 0 && wd_count > 0 &&
                    std::abs(zeta_mean - 0.36) <= 0.08 &&
                    std::abs(wd_mean - 1.27) <= 0.08;
  return {pass, fmt("50 noisy step tests at output-noise level 0.39: mean "
                    "zeta %.4f over %d runs (target 0.36 +/- 0.08), mean wd "
                    "%.4f rad/s over %d runs (target 1.27 +/- 0.08; true "
                    "damped frequency 0.9798 rad/s), %d runs yielded no "
                    "estimate",
                    zeta_mean, zeta_count, wd_mean, wd_count, skipped)};
}

// ---------------------------------------------------------------------------
// 11. Fourth-order benchmark study with the combined-prior region.
// ---------------------------------------------------------------------------
Outcome criterion_11() {
  // Combined-prior arithmetic from salient per-pair estimates.
  std::vector<PriorEstimates> pairs(2);
  pairs[0].wd = 7.17;
  pairs[0].zeta_wn = 0.55;
  pairs[1].wd = 10.49;
  pairs[1].zeta_wn = 0.69;
  const PriorSpread spread = aggregate_priors(pairs, SpreadRule::difference);
  const BoundedPriors bounds =
      apply_tuning(spread.mean, 0.0, spread.wd_delta.value_or(0.0),
                   spread.zeta_wn_delta.value_or(0.0));
  const double wd_max = bounds.wd_max.value_or(0.0);
  const double zwn_min = bounds.zeta_wn_min.value_or(0.0);
  const bool arithmetic_ok =
      std::abs(wd_max - 12.14) <= 0.01 && std::abs(zwn_min - 0.48) <= 0.01;

  const DiscreteStateSpace plant =
      c2d_zoh(tf_to_ss(fourth_order_plant()), 0.05);
  const Region region =
      intersect(frequency_cone(12.14 * 0.05), settling_circle(0.48, 0.05));
  const MatrixXd u = prbs_matrix(20, 100, 1.0, 400, 44769u);
  const MatrixXd y_clean = simulate(plant, u);

  int optimal_runs = 0, inside_runs = 0;
  double worst_margin = 1e300;
  for (int run = 0; run < 20; ++run) {
    MatrixXd y = y_clean;
    y.col(0) += colored_noise(fourth_order_noise_filter(), 0.05, 400, 1.0,
                              derive_seed(9001, run), 0);
    SubspaceConfig cfg;
    cfg.order = 4;
    const IdentificationResult ident = pi_moesp(u, y, 0.05, cfg);
    const SolveResult sol = constrain_spectrum(ident.model.a, region);
    if (sol.status != SolveStatus::optimal) continue;
    ++optimal_runs;
    const VectorXcd eigs = eigenvalues(sol.a_hat);
    bool inside = true;
    for (int k = 0; k < eigs.size(); ++k) {
      const double m = member_min_eig(region, eigs[k]);
      worst_margin = std::min(worst_margin, m);
      inside = inside && m >= -1e-6;
    }
    if (inside) ++inside_runs;
  }
  const bool pass = arithmetic_ok && optimal_runs == 20 && inside_runs == 20;
  return {pass,
          fmt("combined priors: wd_max %.6f (target 12.14 +/- 0.01), "
              "zeta_wn_min %.6f (target 0.48 +/- 0.01); 20 noisy runs: %d "
              "optimal, %d/20 constrained spectra inside at tol 1e-6 (worst "
              "margin %+.2e)",
              wd_max, zwn_min, optimal_runs, inside_runs, worst_margin)};
}

// ---------------------------------------------------------------------------
// 12. Noise-free feature extraction against the closed-form step response.
// ---------------------------------------------------------------------------
Outcome criterion_12() {
  const DiscreteStateSpace plant = c2d_zoh(tf_to_ss(resonant_plant()), 0.3);
  const int n = 101;
  const MatrixXd y = step_response(plant, n);
  VectorXd t(n);
  for (int k = 0; k < n; ++k) t[k] = 0.3 * k;
  FeatureConfig fc;
  fc.smooth_window = 1;  // raw samples; sub-sample refinement does the rest
  fc.period = PeriodRule::half;
  const StepFeatures f = extract_step_features(t, y.col(0), fc);
  const double os = f.overshoot_pct.value_or(-1.0);
  const double td = f.period_damped.value_or(-1.0);
  // Closed-form reference for the continuous plant: zeta = 0.2, wn = 1.
  const double os_ref = 100.0 * std::exp(-kPi * 0.2 / std::sqrt(0.96));
  const double td_ref = 2.0 * kPi / std::sqrt(0.96);
  const bool pass = os >= 52.0 && os <= 53.3 && td >= 6.35 && td <= 6.48;
  return {pass, fmt("noise-free extraction: overshoot %.4f%% in [52.0, 53.3] "
                    "(continuous-time value %.4f%%), period %.4f s in "
                    "[6.35, 6.48] (continuous-time value %.4f s)",
                    os, os_ref, td, td_ref)};
}

struct Criterion {
  Outcome (*run)();
  double budget_ms;
};

const Criterion kCriteria[] = {
    {criterion_1, 1.0},       {criterion_2, 10.0},
    {criterion_3, 5000.0},    {criterion_4, 2000.0},
    {criterion_5, 2000.0},    {criterion_6, 5000.0},
    {criterion_7, 10000.0},   {criterion_8, 20000.0},
    {criterion_9, 120000.0},  {criterion_10, 60000.0},
    {criterion_11, 180000.0}, {criterion_12, 1000.0},
};

}  // namespace

int main(int argc, char** argv) {
  int first = 1, last = 12;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > 12) {
      std::fprintf(stderr, "usage: %s [criterion 1..12]\n", argv[0]);
      return 2;
    }
    first = last = n;
  }

  bool all_pass = true;
  for (int n = first; n <= last; ++n) {
    const Criterion& c = kCriteria[n - 1];
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome out = c.run();
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    const bool in_budget = ms < c.budget_ms;
    const bool pass = out.pass && in_budget;
    all_pass = all_pass && pass;
    std::printf("criterion %2d: %s  %s (%.1f ms%s)\n", n,
                pass ? "PASS" : "FAIL", out.detail.c_str(), ms,
                in_budget ? "" : fmt(", over the %.0f ms budget",
                                     c.budget_ms)
                                     .c_str());
  }
  return all_pass ? 0 : 1;
}
