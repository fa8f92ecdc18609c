#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "sid/region.hpp"

namespace sid {

enum class SolveStatus {
  optimal,
  infeasible,
  max_iterations,
};

std::string to_string(SolveStatus s);

struct SolveOptions {
  // Scale normalization: P >= p_floor * I (the problem is homogeneous in
  // (P, Q), so a floor fixes the scale without restricting A_hat).
  double p_floor = 1.0;
  // Interior-point schedule.
  double mu_reduction = 0.2;
  double mu_min = 1e-9;
  double newton_tol = 1e-10;  // on half the squared Newton decrement
  int max_inner = 60;
  int max_outer = 200;
  double armijo_slope = 0.25;
  // Try the exact fixed point first when the spectrum is already inside.
  bool polish = true;
  bool collect_trace = false;
};

struct TraceRow {
  int iteration = 0;
  double mu = 0.0;
  double objective = 0.0;
  double gap_estimate = 0.0;   // barrier duality-gap bound at current mu
  double grad_norm = 0.0;      // stationarity residual
  double step = 0.0;
  double min_eig_constraint = 0.0;
  double min_eig_p = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::infeasible;
  MatrixXd p;
  MatrixXd q;
  MatrixXd a_hat;
  double objective = 0.0;
  int iterations = 0;
  double p_condition = 0.0;
  std::vector<TraceRow> trace;
};

// Constraint block: lambda (x) P + beta (x) Q + beta^T (x) Q^T, exactly
// symmetric. Throws std::invalid_argument on dimension mismatch.
MatrixXd build_constraint(const Region& r, const MatrixXd& p,
                          const MatrixXd& q);

// Nearest region-constrained spectrum to a_star: minimize ||A P - Q||_F^2
// over the constraint block PSD and P >= p_floor I, then A_hat = Q P^{-1}
// (computed by solving against P, never by forming the inverse). Returns
// status infeasible when the region admits no feasible pair.
SolveResult constrain_spectrum(const MatrixXd& a_star, const Region& r,
                               const SolveOptions& opts = {});

struct VerifyReport {
  Eigen::VectorXcd eigenvalues;
  std::vector<bool> inside;
  double min_eig_constraint = 0.0;
  double min_eig_p = 0.0;
  double residual = 0.0;  // ||A* P - Q||_F
  bool all_inside = false;
};

VerifyReport verify_solution(const MatrixXd& a_star, const SolveResult& sol,
                             const Region& r, double tol = 1e-6);

// Solver trace CSV (iteration, mu, objective, gap, residual, step,
// constraint margin, P margin).
void save_trace(const std::filesystem::path& path,
                const std::vector<TraceRow>& trace);

// Solution JSON (p, q, a_hat row-major, objective, status, iterations,
// p_condition).
void save_solution(const std::filesystem::path& path, const SolveResult& sol);

}  // namespace sid
