#include "sid/lti.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <stdexcept>

#include "json_util.hpp"

namespace sid {

namespace {

void check_system(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c,
                  const MatrixXd& d) {
  if (a.rows() != a.cols()) throw std::invalid_argument("A must be square");
  if (b.rows() != a.rows()) throw std::invalid_argument("B row count");
  if (c.cols() != a.rows()) throw std::invalid_argument("C column count");
  if (d.rows() != c.rows() || d.cols() != b.cols())
    throw std::invalid_argument("D shape");
}

}  // namespace

StateSpace tf_to_ss(const TransferFunction& tf) {
  if (tf.den.empty() || tf.den.front() == 0.0)
    throw std::invalid_argument("denominator leading coefficient must be nonzero");
  if (tf.num.empty()) throw std::invalid_argument("empty numerator");
  if (tf.num.size() > tf.den.size())
    throw std::invalid_argument("improper transfer function");

  const double a0 = tf.den.front();
  const int n = static_cast<int>(tf.den.size()) - 1;

  std::vector<double> den(tf.den.size());
  for (size_t i = 0; i < tf.den.size(); ++i) den[i] = tf.den[i] / a0;
  // Pad the numerator to denominator length.
  std::vector<double> num(tf.den.size(), 0.0);
  const size_t off = tf.den.size() - tf.num.size();
  for (size_t i = 0; i < tf.num.size(); ++i) num[off + i] = tf.num[i] / a0;

  StateSpace ss;
  if (n == 0) {
    ss.a = MatrixXd::Zero(0, 0);
    ss.b = MatrixXd::Zero(0, 1);
    ss.c = MatrixXd::Zero(1, 0);
    ss.d = MatrixXd::Constant(1, 1, num[0]);
    return ss;
  }

  ss.a = MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) ss.a(0, j) = -den[j + 1];
  for (int i = 1; i < n; ++i) ss.a(i, i - 1) = 1.0;
  ss.b = MatrixXd::Zero(n, 1);
  ss.b(0, 0) = 1.0;
  ss.c = MatrixXd::Zero(1, n);
  const double d0 = num[0];
  for (int j = 0; j < n; ++j) ss.c(0, j) = num[j + 1] - d0 * den[j + 1];
  ss.d = MatrixXd::Constant(1, 1, d0);
  return ss;
}

DiscreteStateSpace c2d_zoh(const StateSpace& sys, double ts) {
  check_system(sys.a, sys.b, sys.c, sys.d);
  if (!(ts > 0.0)) throw std::invalid_argument("sampling period must be positive");
  const int n = sys.order();
  const int nu = sys.inputs();
  MatrixXd block = MatrixXd::Zero(n + nu, n + nu);
  block.topLeftCorner(n, n) = sys.a * ts;
  block.topRightCorner(n, nu) = sys.b * ts;
  const MatrixXd e = block.exp();
  DiscreteStateSpace out;
  out.a = e.topLeftCorner(n, n);
  out.b = e.topRightCorner(n, nu);
  out.c = sys.c;
  out.d = sys.d;
  out.ts = ts;
  return out;
}

VectorXcd eigenvalues(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("A must be square");
  if (a.rows() == 0) return VectorXcd();
  return Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues();
}

double spectral_radius(const MatrixXd& a) {
  const VectorXcd ev = eigenvalues(a);
  double r = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) r = std::max(r, std::abs(ev[i]));
  return r;
}

Eigen::MatrixXcd frequency_response(const DiscreteStateSpace& sys, double w) {
  check_system(sys.a, sys.b, sys.c, sys.d);
  const int n = sys.order();
  const std::complex<double> point =
      sys.ts > 0.0 ? std::exp(std::complex<double>(0.0, w * sys.ts))
                   : std::complex<double>(0.0, w);
  Eigen::MatrixXcd resolvent =
      (point * Eigen::MatrixXcd::Identity(n, n) - sys.a.cast<std::complex<double>>())
          .partialPivLu()
          .solve(sys.b.cast<std::complex<double>>());
  return sys.c.cast<std::complex<double>>() * resolvent +
         sys.d.cast<std::complex<double>>();
}

MatrixXd simulate(const DiscreteStateSpace& sys, const MatrixXd& u,
                  VectorXd x0) {
  check_system(sys.a, sys.b, sys.c, sys.d);
  if (u.cols() != sys.inputs())
    throw std::invalid_argument("input channel count mismatch");
  const int n = sys.order();
  if (x0.size() == 0) x0 = VectorXd::Zero(n);
  if (x0.size() != n) throw std::invalid_argument("initial state size");

  const Eigen::Index samples = u.rows();
  MatrixXd y(samples, sys.outputs());
  VectorXd x = x0;
  for (Eigen::Index k = 0; k < samples; ++k) {
    y.row(k) = (sys.c * x + sys.d * u.row(k).transpose()).transpose();
    x = sys.a * x + sys.b * u.row(k).transpose();
  }
  return y;
}

MatrixXd step_response(const DiscreteStateSpace& sys, int samples) {
  if (samples <= 0) throw std::invalid_argument("sample count must be positive");
  return simulate(sys, MatrixXd::Ones(samples, sys.inputs()));
}

namespace {

const std::array<int, 4>& lfsr_taps(int bits) {
  // Maximal-length feedback taps, 1-indexed from the least significant bit.
  static const std::array<std::array<int, 4>, 33> table = [] {
    std::array<std::array<int, 4>, 33> t{};
    auto set = [&t](int b, std::array<int, 4> taps) { t[b] = taps; };
    set(2, {2, 1, 0, 0});
    set(3, {3, 2, 0, 0});
    set(4, {4, 3, 0, 0});
    set(5, {5, 3, 0, 0});
    set(6, {6, 5, 0, 0});
    set(7, {7, 6, 0, 0});
    set(8, {8, 6, 5, 4});
    set(9, {9, 5, 0, 0});
    set(10, {10, 7, 0, 0});
    set(11, {11, 9, 0, 0});
    set(12, {12, 6, 4, 1});
    set(13, {13, 4, 3, 1});
    set(14, {14, 5, 3, 1});
    set(15, {15, 14, 0, 0});
    set(16, {16, 15, 13, 4});
    set(17, {17, 14, 0, 0});
    set(18, {18, 11, 0, 0});
    set(19, {19, 6, 2, 1});
    set(20, {20, 17, 0, 0});
    set(21, {21, 19, 0, 0});
    set(22, {22, 21, 0, 0});
    set(23, {23, 18, 0, 0});
    set(24, {24, 23, 22, 17});
    set(25, {25, 22, 0, 0});
    set(26, {26, 6, 2, 1});
    set(27, {27, 5, 2, 1});
    set(28, {28, 25, 0, 0});
    set(29, {29, 27, 0, 0});
    set(30, {30, 6, 4, 1});
    set(31, {31, 28, 0, 0});
    set(32, {32, 22, 2, 1});
    return t;
  }();
  if (bits < 2 || bits > 32)
    throw std::invalid_argument("register width must be in [2, 32]");
  return table[bits];
}

}  // namespace

std::vector<double> prbs(int bits, int hold, double amplitude, int samples,
                         std::uint32_t seed) {
  const auto& taps = lfsr_taps(bits);
  if (hold < 1) throw std::invalid_argument("hold must be >= 1");
  if (samples < 0) throw std::invalid_argument("negative sample count");

  const std::uint64_t mask = (bits == 32) ? 0xFFFFFFFFull : ((1ull << bits) - 1);
  std::uint64_t state = seed & mask;
  if (state == 0) state = 1;

  std::vector<double> out(static_cast<size_t>(samples));
  double level = 0.0;
  for (int k = 0; k < samples; ++k) {
    if (k % hold == 0) {
      std::uint64_t bit = 0;
      for (int tap : taps)
        if (tap > 0) bit ^= (state >> (tap - 1)) & 1ull;
      state = ((state << 1) | bit) & mask;
      level = (state & 1ull) ? amplitude : -amplitude;
    }
    out[static_cast<size_t>(k)] = level;
  }
  return out;
}

double GaussianSource::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double kScale = 0x1.0p-53;  // 2^-53
  double u1 = 0.0;
  do {
    u1 = static_cast<double>(engine_() >> 11) * kScale;
  } while (u1 <= 0.0);
  const double u2 = static_cast<double>(engine_() >> 11) * kScale;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

VectorXd colored_noise(const TransferFunction& shaping, double ts, int samples,
                       double sigma, std::uint64_t seed, int warmup) {
  if (samples < 0 || warmup < 0)
    throw std::invalid_argument("negative sample count");
  const DiscreteStateSpace filter = c2d_zoh(tf_to_ss(shaping), ts);
  GaussianSource gauss(seed);
  MatrixXd w(samples + warmup, 1);
  for (Eigen::Index k = 0; k < w.rows(); ++k) w(k, 0) = sigma * gauss();
  const MatrixXd shaped = simulate(filter, w);
  return shaped.col(0).tail(samples);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t state = master;
  std::uint64_t z = 0;
  for (std::uint64_t i = 0; i <= stream; ++i) {
    state += 0x9E3779B97F4A7C15ull;
    z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
  }
  return z;
}

DiscreteStateSpace load_model(const std::filesystem::path& path) {
  const nlohmann::json j = detail::load_json_file(path);
  for (const char* key : {"a", "b", "c", "d"})
    if (!j.contains(key))
      throw std::runtime_error(path.string() + ": missing field " + key);
  DiscreteStateSpace sys;
  sys.a = detail::matrix_from_json(j.at("a"), "a");
  sys.b = detail::matrix_from_json(j.at("b"), "b");
  sys.c = detail::matrix_from_json(j.at("c"), "c");
  sys.d = detail::matrix_from_json(j.at("d"), "d");
  sys.ts = (j.contains("ts") && !j.at("ts").is_null()) ? j.at("ts").get<double>()
                                                       : 0.0;
  check_system(sys.a, sys.b, sys.c, sys.d);
  return sys;
}

void save_model(const std::filesystem::path& path,
                const DiscreteStateSpace& sys) {
  nlohmann::json j;
  if (sys.ts > 0.0)
    j["ts"] = sys.ts;
  else
    j["ts"] = nullptr;
  j["a"] = detail::matrix_to_json(sys.a);
  j["b"] = detail::matrix_to_json(sys.b);
  j["c"] = detail::matrix_to_json(sys.c);
  j["d"] = detail::matrix_to_json(sys.d);
  detail::save_json_file(path, j);
}

}  // namespace sid
