#include "sid/sysid.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <fstream>
#include <stdexcept>

namespace sid {

MatrixXd block_hankel(const MatrixXd& z, int start, int rows, int cols) {
  const auto channels = z.cols();
  if (rows < 1 || cols < 1) throw std::invalid_argument("empty Hankel block");
  if (start < 0 || start + rows + cols - 1 > z.rows())
    throw std::invalid_argument("record too short for the requested Hankel block");
  MatrixXd h(rows * channels, cols);
  for (int i = 0; i < rows; ++i)
    h.middleRows(i * channels, channels) =
        z.middleRows(start + i, cols).transpose();
  return h;
}

namespace {

MatrixXd hankel_rowslice(const MatrixXd& z, int start, int rows, int cols) {
  // Row block i of the Hankel holds samples start+i .. start+i+cols-1.
  return block_hankel(z, start, rows, cols);
}

}  // namespace

int select_order(const VectorXd& singular_values, double ratio) {
  if (singular_values.size() == 0)
    throw std::invalid_argument("empty singular-value sequence");
  const double top = singular_values[0];
  if (!(top > 0.0))
    throw std::runtime_error("rank-deficient data: leading singular value is zero");
  int order = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i)
    if (singular_values[i] / top >= ratio) ++order;
  return std::max(1, order);
}

IdentificationResult pi_moesp(const MatrixXd& u, const MatrixXd& y, double ts,
                              const SubspaceConfig& cfg) {
  const auto samples = u.rows();
  if (y.rows() != samples) throw std::invalid_argument("u/y length mismatch");
  const int nu = static_cast<int>(u.cols());
  const int ny = static_cast<int>(y.cols());
  if (nu < 1 || ny < 1) throw std::invalid_argument("empty channel set");
  const int p = cfg.past_horizon, f = cfg.future_horizon;
  if (p < 1 || f < 1) throw std::invalid_argument("horizons must be >= 1");

  const int cols = static_cast<int>(samples) - p - f + 1;
  const int r1 = f * nu, r2 = p * nu, r3 = f * ny;
  if (cols < r1 + r2 + r3)
    throw std::invalid_argument("data too short for the chosen horizons");

  MatrixXd uw = u, yw = y;
  if (cfg.detrend) {
    uw.rowwise() -= u.colwise().mean();
    yw.rowwise() -= y.colwise().mean();
  }

  // Stack future inputs / past inputs / future outputs; the past inputs act
  // as instruments that are uncorrelated with future noise.
  MatrixXd w(r1 + r2 + r3, cols);
  w.topRows(r1) = hankel_rowslice(uw, p, f, cols);
  w.middleRows(r1, r2) = hankel_rowslice(uw, 0, p, cols);
  w.bottomRows(r3) = hankel_rowslice(yw, p, f, cols);

  // RQ factorization via QR of the transpose: W = L Q with L lower
  // triangular; only L is needed.
  Eigen::HouseholderQR<MatrixXd> qr(w.transpose());
  const int rt = r1 + r2 + r3;
  const MatrixXd l = MatrixXd(qr.matrixQR()
                                  .topRows(rt)
                                  .triangularView<Eigen::Upper>())
                         .transpose();

  // The block of future outputs explained by the instruments.
  const MatrixXd l32 = l.block(r1 + r2, r1, r3, r2);
  Eigen::JacobiSVD<MatrixXd> svd(l32, Eigen::ComputeThinU);
  const VectorXd sv = svd.singularValues();

  int n = cfg.order > 0 ? cfg.order : select_order(sv, cfg.sv_ratio);
  if (n > std::min<int>(r3, r2))
    throw std::invalid_argument("order exceeds the identifiable range");
  if (!(sv[0] > 0.0))
    throw std::runtime_error("rank-deficient data: no signal in the outputs");

  const MatrixXd un = svd.matrixU().leftCols(n);
  const MatrixXd c = un.topRows(ny);
  // Shift invariance: the observability matrix advanced by one block row
  // equals itself times A.
  const MatrixXd a = un.topRows((f - 1) * ny)
                         .colPivHouseholderQr()
                         .solve(un.bottomRows((f - 1) * ny));

  // B, D from the output equation with zero initial state: simulate the
  // response of each (state, input) unit pair and regress.
  const auto big_n = samples;
  MatrixXd phi = MatrixXd::Zero(big_n * ny, n * nu + ny * nu);
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < nu; ++j) {
      VectorXd zst = VectorXd::Zero(n);
      for (Eigen::Index k = 0; k < big_n; ++k) {
        phi.block(k * ny, m * nu + j, ny, 1) = c * zst;
        zst = a * zst;
        zst[m] += uw(k, j);
      }
    }
  }
  for (int i = 0; i < ny; ++i)
    for (int j = 0; j < nu; ++j)
      for (Eigen::Index k = 0; k < big_n; ++k)
        phi(k * ny + i, n * nu + i * nu + j) = uw(k, j);

  VectorXd rhs(big_n * ny);
  for (Eigen::Index k = 0; k < big_n; ++k)
    rhs.segment(k * ny, ny) = yw.row(k).transpose();
  const VectorXd theta = phi.colPivHouseholderQr().solve(rhs);

  IdentificationResult out;
  out.order = n;
  out.singular_values = sv;
  out.model.a = a;
  out.model.b = Eigen::Map<const MatrixXd>(theta.data(), nu, n).transpose();
  out.model.c = c;
  out.model.d =
      Eigen::Map<const MatrixXd>(theta.data() + n * nu, nu, ny).transpose();
  out.model.ts = ts;
  return out;
}

std::vector<MatrixXd> markov_parameters(const DiscreteStateSpace& sys,
                                        int count) {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  std::vector<MatrixXd> out;
  out.reserve(static_cast<size_t>(count));
  out.push_back(sys.d);
  MatrixXd ak = MatrixXd::Identity(sys.order(), sys.order());
  for (int k = 1; k < count; ++k) {
    out.push_back(sys.c * ak * sys.b);
    ak = sys.a * ak;
  }
  return out;
}

double markov_distance(const DiscreteStateSpace& a, const DiscreteStateSpace& b,
                       int count) {
  const auto ma = markov_parameters(a, count);
  const auto mb = markov_parameters(b, count);
  double diff = 0.0, ref = 0.0;
  for (int k = 0; k < count; ++k) {
    diff += (ma[static_cast<size_t>(k)] - mb[static_cast<size_t>(k)])
                .squaredNorm();
    ref += ma[static_cast<size_t>(k)].squaredNorm();
  }
  if (ref == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / ref);
}

void save_singular_values(const std::filesystem::path& path,
                          const VectorXd& sv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "index,value\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    out << (i + 1) << ',' << sv[i] << '\n';
}

}  // namespace sid
