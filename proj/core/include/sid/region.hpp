#pragma once

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <string>

namespace sid {

using Eigen::MatrixXd;

// Convex z-plane region {z : lambda + beta z + beta^T conj(z) >= 0} described
// by a symmetric m x m matrix lambda and a real m x m matrix beta.
struct Region {
  std::string label;
  MatrixXd lambda;
  MatrixXd beta;

  int size() const { return static_cast<int>(lambda.rows()); }
};

struct CircleParams {
  double center = 0.0;  // on the real axis
  double radius = 0.0;
};

struct EllipseParams {
  double center = 0.0;  // on the real axis
  double semi_real = 0.0;
  double semi_imag = 0.0;
};

// Characteristic value f(z) = lambda + beta z + beta^T conj(z), Hermitian by
// construction.
Eigen::MatrixXcd characteristic_value(const Region& r, std::complex<double> z);

// Smallest eigenvalue of the characteristic value, computed on the real
// symmetric embedding [[Re, -Im], [Im, Re]]. Positive strictly inside,
// zero on the boundary, negative outside.
double member_min_eig(const Region& r, std::complex<double> z);

bool contains(const Region& r, std::complex<double> z, double tol = 0.0);

// Open unit disk.
Region stability_circle();

// Disk of given radius centered on the real axis.
Region circle(double center, double radius, std::string label = "");

// Axis-aligned ellipse centered on the real axis.
Region ellipse(double center, double semi_real, double semi_imag,
               std::string label = "");

// Disk approximation of the sampled-damping (cardioid-shaped) locus for a
// minimum damping ratio: tangent to the cardioid on the real axis and sized
// to track it for small angles.
Region damping_circle(double zeta_min);
CircleParams damping_circle_params(double zeta_min);

// Ellipse inscribed in the sampled-damping locus: same real-axis tangency as
// the disk, horizontal semi-axis shrunk so the ellipse stays inside the
// cardioid's left lobe.
Region damping_ellipse(double zeta_min);
EllipseParams damping_ellipse_params(double zeta_min);

// Conservative rescaling of the inscribed ellipse that touches z = 1, for
// use when the damping estimate is too uncertain to trust the tight fit.
Region damping_ellipse_conservative(double zeta_min);
EllipseParams damping_ellipse_conservative_params(double zeta_min);

// Symmetric cone about the positive real axis with half-angle theta_max,
// bounding the damped-oscillation frequency. Throws std::invalid_argument
// unless 0 < theta_max <= pi/2.
Region frequency_cone(double theta_max);

// Disk |z| <= exp(-zeta_wn_min ts) bounding the settling rate.
Region settling_circle(double zeta_wn_min, double ts);

// Block-diagonal conjunction: z belongs to the result iff it belongs to both.
Region intersect(const Region& a, const Region& b, std::string label = "");

// Exact sampled-damping membership (the cardioid itself, not an
// approximation): -ln|z| >= cot(acos(zeta_min)) |arg z|, with real
// z in (0, 1] included by convention.
bool damping_contains_exact(double zeta_min, std::complex<double> z);

// Damping ratio at which the inscribed ellipse degenerates to a circle
// (equal semi-axes); above it the disk approximation is preferred.
double critical_damping_zeta();

// A point well inside the region: grid argmax of member_min_eig over
// [-bound, bound]^2. Throws std::runtime_error when the grid sees no
// feasible point.
std::complex<double> interior_anchor(const Region& r, double bound = 1.6,
                                     int grid = 301);

// Best real-axis point: argmax of member_min_eig over rho in [lo, hi].
struct RealPoint {
  double rho = 0.0;
  double min_eig = 0.0;
};
RealPoint best_real_point(const Region& r, double lo = -1.5, double hi = 1.5,
                          int grid = 3001);

// Boundary polyline on a polar grid of n_theta rays from the interior
// anchor, radially bisected to the zero level of member_min_eig and clipped
// at r_max; returns an n_theta x 2 matrix of (x, y) samples.
MatrixXd boundary_polyline(const Region& r, int n_theta = 720,
                           double r_max = 1.6);

// Region file I/O: JSON {"label", "lambda", "beta"}, matrices nested
// row-major.
Region load_region(const std::filesystem::path& path);
void save_region(const std::filesystem::path& path, const Region& r);

}  // namespace sid
