#include "sid/region.hpp"

#include <cmath>
#include <stdexcept>

#include "json_util.hpp"

namespace sid {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_region(const Region& r) {
  if (r.lambda.rows() != r.lambda.cols() || r.beta.rows() != r.beta.cols() ||
      r.lambda.rows() != r.beta.rows() || r.lambda.rows() < 1)
    throw std::invalid_argument("region matrices must be square, same size");
  if ((r.lambda - r.lambda.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("lambda must be symmetric");
}

std::string format_label(const char* kind, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s %.6g", kind, value);
  return buf;
}

// Shared geometry of the sampled-damping approximations: the locus of the
// pole pair exp((-zeta +- i sqrt(1-zeta^2)) wn ts) at fixed zeta sweeps a
// cardioid-like curve as wn ts grows; psi is its half-opening angle at the
// origin-side lobe and rho scales the tangent disk.
struct DampingGeometry {
  double psi = 0.0;     // acos(zeta)
  double center = 0.0;  // disk/ellipse center on the real axis
  double radius = 0.0;  // disk radius = vertical semi-axis of the ellipses
};

DampingGeometry damping_geometry(double zeta_min) {
  if (!(zeta_min > 0.0 && zeta_min < 1.0))
    throw std::invalid_argument("damping ratio must be in (0, 1)");
  DampingGeometry g;
  g.psi = std::acos(zeta_min);
  const double rho = std::exp(-g.psi / std::tan(g.psi));
  g.center = rho * std::cos(g.psi);
  g.radius = rho * std::sin(g.psi);
  return g;
}

}  // namespace

Eigen::MatrixXcd characteristic_value(const Region& r, std::complex<double> z) {
  check_region(r);
  const Eigen::MatrixXcd bz = r.beta.cast<std::complex<double>>() * z;
  return r.lambda.cast<std::complex<double>>() + bz + bz.adjoint();
}

double member_min_eig(const Region& r, std::complex<double> z) {
  check_region(r);
  const int m = r.size();
  // f(z) = H + iS with H symmetric, S antisymmetric; the real embedding
  // [[H, -S], [S, H]] carries each eigenvalue of f(z) twice.
  const MatrixXd h =
      r.lambda + r.beta * z.real() + r.beta.transpose() * z.real();
  const MatrixXd s = r.beta * z.imag() - r.beta.transpose() * z.imag();
  MatrixXd embed(2 * m, 2 * m);
  embed.topLeftCorner(m, m) = h;
  embed.topRightCorner(m, m) = -s;
  embed.bottomLeftCorner(m, m) = s;
  embed.bottomRightCorner(m, m) = h;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(embed,
                                              Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool contains(const Region& r, std::complex<double> z, double tol) {
  return member_min_eig(r, z) >= -tol;
}

Region circle(double center, double radius, std::string label) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  Region r;
  r.label = label.empty() ? format_label("circle", radius) : std::move(label);
  r.lambda.resize(2, 2);
  r.lambda << radius, -center, -center, radius;
  r.beta.resize(2, 2);
  r.beta << 0, 1, 0, 0;
  return r;
}

Region stability_circle() { return circle(0.0, 1.0, "stability circle"); }

Region ellipse(double center, double semi_real, double semi_imag,
               std::string label) {
  if (!(semi_real > 0.0 && semi_imag > 0.0))
    throw std::invalid_argument("semi-axes must be positive");
  const double e = 1.0 / semi_real;
  const double f = 1.0 / semi_imag;
  Region r;
  r.label = label.empty() ? format_label("ellipse", semi_real) : std::move(label);
  r.lambda.resize(2, 2);
  r.lambda << 1.0, -e * center, -e * center, 1.0;
  r.beta.resize(2, 2);
  r.beta << 0.0, (e - f) / 2.0, (e + f) / 2.0, 0.0;
  return r;
}

CircleParams damping_circle_params(double zeta_min) {
  const DampingGeometry g = damping_geometry(zeta_min);
  return {g.center, g.radius};
}

Region damping_circle(double zeta_min) {
  const CircleParams p = damping_circle_params(zeta_min);
  return circle(p.center, p.radius, format_label("damping circle", zeta_min));
}

EllipseParams damping_ellipse_params(double zeta_min) {
  const DampingGeometry g = damping_geometry(zeta_min);
  // The horizontal semi-axis ends where the locus crosses the real axis
  // (oscillation angle pi), keeping the ellipse inside the exact region.
  const double semi_real = g.center + std::exp(-kPi / std::tan(g.psi));
  return {g.center, semi_real, g.radius};
}

Region damping_ellipse(double zeta_min) {
  const EllipseParams p = damping_ellipse_params(zeta_min);
  return ellipse(p.center, p.semi_real, p.semi_imag,
                 format_label("damping ellipse", zeta_min));
}

EllipseParams damping_ellipse_conservative_params(double zeta_min) {
  const EllipseParams p = damping_ellipse_params(zeta_min);
  // Rescale center and horizontal semi-axis so the ellipse touches z = 1,
  // trading tightness near the origin for coverage of slow poles.
  const double scale = 1.0 / (p.semi_real + p.center);
  return {p.center * scale, p.semi_real * scale, p.semi_imag};
}

Region damping_ellipse_conservative(double zeta_min) {
  const EllipseParams p = damping_ellipse_conservative_params(zeta_min);
  return ellipse(p.center, p.semi_real, p.semi_imag,
                 format_label("conservative ellipse", zeta_min));
}

Region frequency_cone(double theta_max) {
  if (!(theta_max > 0.0 && theta_max <= kPi / 2.0))
    throw std::invalid_argument(
        "cone half-angle must be in (0, pi/2]: the oscillation period must "
        "span at least four samples");
  Region r;
  r.label = format_label("frequency cone", theta_max);
  r.lambda = MatrixXd::Zero(2, 2);
  r.beta.resize(2, 2);
  const double s = std::sin(theta_max), c = std::cos(theta_max);
  r.beta << s, -c, c, s;
  return r;
}

Region settling_circle(double zeta_wn_min, double ts) {
  if (!(zeta_wn_min > 0.0)) throw std::invalid_argument("rate must be positive");
  if (!(ts > 0.0)) throw std::invalid_argument("sampling period must be positive");
  return circle(0.0, std::exp(-zeta_wn_min * ts),
                format_label("settling circle", zeta_wn_min));
}

Region intersect(const Region& a, const Region& b, std::string label) {
  check_region(a);
  check_region(b);
  const int ma = a.size(), mb = b.size();
  Region r;
  r.label = label.empty() ? a.label + " & " + b.label : std::move(label);
  r.lambda = MatrixXd::Zero(ma + mb, ma + mb);
  r.lambda.topLeftCorner(ma, ma) = a.lambda;
  r.lambda.bottomRightCorner(mb, mb) = b.lambda;
  r.beta = MatrixXd::Zero(ma + mb, ma + mb);
  r.beta.topLeftCorner(ma, ma) = a.beta;
  r.beta.bottomRightCorner(mb, mb) = b.beta;
  return r;
}

bool damping_contains_exact(double zeta_min, std::complex<double> z) {
  const double mag = std::abs(z);
  if (mag == 0.0) return true;
  if (mag > 1.0) return false;
  const double psi = damping_geometry(zeta_min).psi;
  return -std::log(mag) >= std::abs(std::arg(z)) / std::tan(psi);
}

double critical_damping_zeta() {
  // Damping ratio where the inscribed ellipse's semi-axes coincide.
  auto gap = [](double zeta) {
    const EllipseParams p = damping_ellipse_params(zeta);
    return p.semi_real - p.semi_imag;
  };
  double lo = 0.05, hi = 0.95;
  if (gap(lo) >= 0.0 || gap(hi) <= 0.0)
    throw std::runtime_error("bracketing failed");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::complex<double> interior_anchor(const Region& r, double bound, int grid) {
  check_region(r);
  double best = -1.0;
  std::complex<double> at(0.0, 0.0);
  for (int i = 0; i < grid; ++i) {
    const double x = -bound + 2.0 * bound * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double y = -bound + 2.0 * bound * j / (grid - 1);
      const double m = member_min_eig(r, {x, y});
      if (m > best) {
        best = m;
        at = {x, y};
      }
    }
  }
  if (best <= 0.0)
    throw std::runtime_error("no interior point found on the search grid");
  return at;
}

RealPoint best_real_point(const Region& r, double lo, double hi, int grid) {
  check_region(r);
  RealPoint best{lo, -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * i / (grid - 1);
    const double m = member_min_eig(r, {x, 0.0});
    if (m > best.min_eig) best = {x, m};
  }
  return best;
}

MatrixXd boundary_polyline(const Region& r, int n_theta, double r_max) {
  if (n_theta < 8) throw std::invalid_argument("need at least 8 rays");
  const std::complex<double> anchor = interior_anchor(r, r_max, 201);

  MatrixXd pts(n_theta, 2);
  for (int k = 0; k < n_theta; ++k) {
    const double theta = 2.0 * kPi * k / n_theta;
    const std::complex<double> u(std::cos(theta), std::sin(theta));
    // Ray leaves the clip circle |z| = r_max at t_clip (anchor is inside it).
    const double proj = anchor.real() * u.real() + anchor.imag() * u.imag();
    const double t_clip =
        -proj + std::sqrt(proj * proj + r_max * r_max - std::norm(anchor));
    std::complex<double> edge = anchor + t_clip * u;
    if (member_min_eig(r, edge) < 0.0) {
      double lo = 0.0, hi = t_clip;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (member_min_eig(r, anchor + mid * u) >= 0.0 ? lo : hi) = mid;
      }
      edge = anchor + 0.5 * (lo + hi) * u;
    }
    pts(k, 0) = edge.real();
    pts(k, 1) = edge.imag();
  }
  return pts;
}

Region load_region(const std::filesystem::path& path) {
  const nlohmann::json j = detail::load_json_file(path);
  for (const char* key : {"label", "lambda", "beta"})
    if (!j.contains(key))
      throw std::runtime_error(path.string() + ": missing field " + key);
  Region r;
  r.label = j.at("label").get<std::string>();
  r.lambda = detail::matrix_from_json(j.at("lambda"), "lambda");
  r.beta = detail::matrix_from_json(j.at("beta"), "beta");
  check_region(r);
  return r;
}

void save_region(const std::filesystem::path& path, const Region& r) {
  check_region(r);
  nlohmann::json j;
  j["label"] = r.label;
  j["lambda"] = detail::matrix_to_json(r.lambda);
  j["beta"] = detail::matrix_to_json(r.beta);
  detail::save_json_file(path, j);
}

}  // namespace sid
