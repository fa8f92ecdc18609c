#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

#include "sid/lti.hpp"

namespace sid {

struct SubspaceConfig {
  int past_horizon = 10;
  int future_horizon = 10;
  // 0 selects the order from the singular-value gap rule.
  int order = 0;
  double sv_ratio = 1e-3;
  // Remove channel means from u and y before identification.
  bool detrend = true;
};

struct IdentificationResult {
  DiscreteStateSpace model;
  VectorXd singular_values;
  int order = 0;
};

// (rows * channels) x cols block-Hankel matrix; column j stacks samples
// z[start + j] ... z[start + j + rows - 1]. Throws std::invalid_argument when
// the record is too short.
MatrixXd block_hankel(const MatrixXd& z, int start, int rows, int cols);

// Largest k with sv[k-1] / sv[0] >= ratio. Throws std::invalid_argument on an
// empty sequence.
int select_order(const VectorXd& singular_values, double ratio);

// Past-input instrumental-variable subspace identification. Recovers a state
// space model from input/output data: an orthogonal factorization of the
// stacked future-input / past-input / future-output block Hankels isolates
// the part of the future outputs explained by the past inputs, the SVD of
// that factor yields the extended observability matrix, C is its first block
// row, A the least-squares shift-invariance solution, and B, D follow from a
// linear regression over the full record with A, C fixed (zero initial
// state). Throws std::invalid_argument on short data and std::runtime_error
// on rank-deficient excitation.
IdentificationResult pi_moesp(const MatrixXd& u, const MatrixXd& y, double ts,
                              const SubspaceConfig& cfg = {});

// Markov parameters D, CB, CAB, ..., CA^(count-1)B.
std::vector<MatrixXd> markov_parameters(const DiscreteStateSpace& sys,
                                        int count);

// Largest relative deviation between the leading `count` Markov parameters
// of two models (similarity-invariant comparison).
double markov_distance(const DiscreteStateSpace& a, const DiscreteStateSpace& b,
                       int count);

// Singular-value CSV (index, value).
void save_singular_values(const std::filesystem::path& path,
                          const VectorXd& sv);

}  // namespace sid
