#pragma once

#include <Eigen/Dense>

#include <filesystem>

namespace sid {

// Sampled multichannel input/output record. u is samples x nu, y is
// samples x ny; t carries the sample instants.
struct SignalRecord {
  Eigen::VectorXd t;
  Eigen::MatrixXd u;
  Eigen::MatrixXd y;

  int samples() const { return static_cast<int>(t.size()); }
  int inputs() const { return static_cast<int>(u.cols()); }
  int outputs() const { return static_cast<int>(y.cols()); }
};

// CSV with header t,u1,...,y1,... and one row per sample.
SignalRecord load_signal(const std::filesystem::path& path);
void save_signal(const std::filesystem::path& path, const SignalRecord& rec);

}  // namespace sid
