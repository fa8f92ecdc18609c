#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace sid {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Continuous-time rational transfer function, coefficients in descending
// powers of s. den.front() must be nonzero; deg(num) <= deg(den).
struct TransferFunction {
  std::vector<double> num;
  std::vector<double> den;
};

// Continuous-time state-space model dx = A x + B u, y = C x + D u.
struct StateSpace {
  MatrixXd a, b, c, d;
  int order() const { return static_cast<int>(a.rows()); }
  int inputs() const { return static_cast<int>(b.cols()); }
  int outputs() const { return static_cast<int>(c.rows()); }
};

// Discrete-time state-space model x+ = A x + B u, y = C x + D u at period ts.
struct DiscreteStateSpace {
  MatrixXd a, b, c, d;
  double ts = 0.0;
  int order() const { return static_cast<int>(a.rows()); }
  int inputs() const { return static_cast<int>(b.cols()); }
  int outputs() const { return static_cast<int>(c.rows()); }
};

// Controllable-canonical realization. Throws std::invalid_argument on an
// improper or degenerate fraction.
StateSpace tf_to_ss(const TransferFunction& tf);

// Zero-order-hold discretization via the block matrix exponential
// exp([[A, B], [0, 0]] ts).
DiscreteStateSpace c2d_zoh(const StateSpace& sys, double ts);

// Eigenvalues of a real square matrix.
VectorXcd eigenvalues(const MatrixXd& a);

// Spectral radius of a real square matrix.
double spectral_radius(const MatrixXd& a);

// Frequency response H(e^{i w ts}) (or H(i w) when ts == 0), ny x nu.
Eigen::MatrixXcd frequency_response(const DiscreteStateSpace& sys, double w);

// Simulate with one input row per sample; returns one output row per sample.
// x0 defaults to zero when empty.
MatrixXd simulate(const DiscreteStateSpace& sys, const MatrixXd& u,
                  VectorXd x0 = VectorXd());

// Unit step applied to every input channel.
MatrixXd step_response(const DiscreteStateSpace& sys, int samples);

// Pseudo-random binary sequence from a Fibonacci linear-feedback shift
// register with maximal-length taps, bits in [2, 32]. Each register step is
// held for `hold` samples; levels are +/- amplitude. A zero seed is promoted
// to 1 so the register never sticks.
std::vector<double> prbs(int bits, int hold, double amplitude, int samples,
                         std::uint32_t seed);

// Standard normal deviates via Box-Muller over explicit 53-bit uniforms, so
// streams are reproducible across standard libraries.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
  double operator()();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Unit-variance white noise scaled by sigma and shaped by the given
// continuous-time filter discretized at ts. The first `warmup` output samples
// are discarded to reduce the transient of the zero initial state.
VectorXd colored_noise(const TransferFunction& shaping, double ts, int samples,
                       double sigma, std::uint64_t seed, int warmup = 0);

// Deterministic per-stream seed derivation (splitmix64 sequence member).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Model file I/O: JSON object {"ts", "a", "b", "c", "d"}, matrices as nested
// row-major arrays. Throws std::runtime_error on malformed files.
DiscreteStateSpace load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path,
                const DiscreteStateSpace& sys);

}  // namespace sid
