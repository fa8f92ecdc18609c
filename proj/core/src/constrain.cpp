#include "sid/constrain.hpp"

#include <Eigen/Cholesky>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>

#include "json_util.hpp"
#include "sid/lti.hpp"

namespace sid {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

MatrixXd build_constraint(const Region& r, const MatrixXd& p,
                          const MatrixXd& q) {
  if (p.rows() != p.cols() || q.rows() != q.cols() || p.rows() != q.rows())
    throw std::invalid_argument("P and Q must be square and equally sized");
  MatrixXd m = Eigen::kroneckerProduct(r.lambda, p) +
               Eigen::kroneckerProduct(r.beta, q) +
               Eigen::kroneckerProduct(r.beta.transpose(), q.transpose());
  // Symmetrize away representation round-off.
  return 0.5 * (m + m.transpose());
}

namespace {

// Symmetric coordinate basis for P: diagonal units and two-entry symmetric
// units for each off-diagonal pair.
std::vector<MatrixXd> sym_basis(int n) {
  std::vector<MatrixXd> out;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      MatrixXd e = MatrixXd::Zero(n, n);
      e(i, j) = 1.0;
      e(j, i) = 1.0;
      out.push_back(std::move(e));
    }
  return out;
}

double logdet_from_llt(const Eigen::LLT<MatrixXd>& llt) {
  const auto& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

struct BarrierState {
  double phi = 0.0;        // J - mu (logdet M + logdet(P - floor I))
  double objective = 0.0;  // J = ||A P - Q||_F^2
  Eigen::LLT<MatrixXd> llt_m;
  Eigen::LLT<MatrixXd> llt_p;
  MatrixXd residual;
};

std::optional<BarrierState> evaluate(const MatrixXd& a, const Region& r,
                                     const MatrixXd& p, const MatrixXd& q,
                                     double p_floor, double mu) {
  const int n = static_cast<int>(a.rows());
  BarrierState st;
  st.llt_m.compute(build_constraint(r, p, q));
  if (st.llt_m.info() != Eigen::Success) return std::nullopt;
  st.llt_p.compute(p - p_floor * MatrixXd::Identity(n, n));
  if (st.llt_p.info() != Eigen::Success) return std::nullopt;
  st.residual = a * p - q;
  st.objective = st.residual.squaredNorm();
  st.phi = st.objective -
           mu * (logdet_from_llt(st.llt_m) + logdet_from_llt(st.llt_p));
  return st;
}

// lambda- and beta-weighted sums of the n x n blocks of the inverse
// constraint matrix; these contract the barrier gradient onto P and Q.
void weighted_block_sums(const Region& r, const MatrixXd& s_inv, int n,
                         MatrixXd& t_lambda, MatrixXd& t_beta) {
  const int m = r.size();
  t_lambda.setZero(n, n);
  t_beta.setZero(n, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const auto block = s_inv.block(i * n, j * n, n, n);
      if (r.lambda(i, j) != 0.0) t_lambda += r.lambda(i, j) * block;
      if (r.beta(i, j) != 0.0) t_beta += r.beta(i, j) * block;
    }
}

MatrixXd lower_inverse(const Eigen::LLT<MatrixXd>& llt) {
  const Eigen::Index n = llt.matrixLLT().rows();
  return llt.matrixL().solve(MatrixXd::Identity(n, n));
}

// Analytic centering of {P : M(P, A P) > 0, P > floor I}. When it converges,
// (P, A P) is strictly feasible, certifying that the spectrum of A is already
// inside the region, and the zero-residual solution is exact.
std::optional<MatrixXd> center_fixed_point(const MatrixXd& a, const Region& r,
                                           MatrixXd p, double p_floor,
                                           int max_iters, double tol) {
  const int n = static_cast<int>(a.rows());
  const MatrixXd eye = MatrixXd::Identity(n, n);
  const auto basis = sym_basis(n);
  const int k = static_cast<int>(basis.size());

  auto feasible = [&](const MatrixXd& cand)
      -> std::optional<std::pair<double, std::pair<Eigen::LLT<MatrixXd>,
                                                   Eigen::LLT<MatrixXd>>>> {
    Eigen::LLT<MatrixXd> lm(build_constraint(r, cand, a * cand));
    if (lm.info() != Eigen::Success) return std::nullopt;
    Eigen::LLT<MatrixXd> lp(cand - p_floor * eye);
    if (lp.info() != Eigen::Success) return std::nullopt;
    const double psi = -logdet_from_llt(lm) - logdet_from_llt(lp);
    return std::make_pair(psi, std::make_pair(std::move(lm), std::move(lp)));
  };

  // The path endpoint may sit just outside the fixed-point set; retry from a
  // deeper, scaled-up interior candidate before giving up.
  if (!feasible(p)) {
    p = 2.0 * p + p_floor * eye;
    if (!feasible(p)) return std::nullopt;
  }

  for (int it = 0; it < max_iters; ++it) {
    auto fs = feasible(p);
    if (!fs) return std::nullopt;
    const double psi0 = fs->first;
    const auto& llt_m = fs->second.first;
    const auto& llt_p = fs->second.second;

    const MatrixXd linv_m = lower_inverse(llt_m);
    const MatrixXd s_inv = linv_m.transpose() * linv_m;
    const MatrixXd linv_p = lower_inverse(llt_p);
    const MatrixXd pi_inv = linv_p.transpose() * linv_p;

    MatrixXd t_lambda, t_beta;
    weighted_block_sums(r, s_inv, n, t_lambda, t_beta);
    const MatrixXd tba = t_beta * a;
    const MatrixXd grad_mat = -(t_lambda + tba + tba.transpose()) - pi_inv;

    VectorXd g(k);
    for (int i = 0; i < k; ++i)
      g[i] = grad_mat.cwiseProduct(basis[static_cast<size_t>(i)]).sum();

    std::vector<MatrixXd> gm(basis.size()), gp(basis.size());
    for (size_t i = 0; i < basis.size(); ++i) {
      const MatrixXd ae = a * basis[i];
      const MatrixXd dm =
          Eigen::kroneckerProduct(r.lambda, basis[i]) +
          Eigen::kroneckerProduct(r.beta, ae) +
          Eigen::kroneckerProduct(r.beta.transpose(), ae.transpose());
      gm[i] = linv_m * dm * linv_m.transpose();
      gp[i] = linv_p * basis[i] * linv_p.transpose();
    }
    MatrixXd h(k, k);
    for (int ia = 0; ia < k; ++ia)
      for (int ib = ia; ib < k; ++ib) {
        const double v =
            gm[static_cast<size_t>(ia)]
                .cwiseProduct(gm[static_cast<size_t>(ib)])
                .sum() +
            gp[static_cast<size_t>(ia)]
                .cwiseProduct(gp[static_cast<size_t>(ib)])
                .sum();
        h(ia, ib) = v;
        h(ib, ia) = v;
      }
    h.diagonal().array() += 1e-12;

    const VectorXd d = Eigen::LDLT<MatrixXd>(h).solve(-g);
    const double decrement = -g.dot(d);
    if (decrement / 2.0 < tol) break;

    MatrixXd dp = MatrixXd::Zero(n, n);
    for (int i = 0; i < k; ++i) dp += d[i] * basis[static_cast<size_t>(i)];
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-12) {
      auto trial = feasible(p + t * dp);
      if (trial && trial->first <= psi0 + 0.25 * t * g.dot(d)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    p += t * dp;
  }

  auto final_check = feasible(p);
  if (!final_check) return std::nullopt;
  return p;
}

}  // namespace

SolveResult constrain_spectrum(const MatrixXd& a_star, const Region& r,
                               const SolveOptions& opts) {
  if (a_star.rows() != a_star.cols() || a_star.rows() < 1)
    throw std::invalid_argument("A must be square and nonempty");
  if (!(opts.p_floor > 0.0))
    throw std::invalid_argument("the P floor must be positive");
  const int n = static_cast<int>(a_star.rows());
  const MatrixXd eye = MatrixXd::Identity(n, n);

  SolveResult sol;

  // Feasibility: the region must meet the real axis (any feasible pair forces
  // a real spectrum point for n = 1, and the constructors are all symmetric
  // about and anchored to the real axis).
  const RealPoint anchor = best_real_point(r);
  if (anchor.min_eig <= 1e-9) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }

  // A spectrum already strictly inside admits the exact fixed point Q = A P
  // with zero residual; certify it by centering. When the identity start is
  // not a feasibility witness, the barrier path below still finds one and the
  // centering is retried from its endpoint.
  bool spectrum_inside = false;
  if (opts.polish) {
    const VectorXcd ev = eigenvalues(a_star);
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      worst = std::min(worst, member_min_eig(r, ev[i]));
    spectrum_inside = worst > 1e-12;
  }
  auto exact_solution = [&](const MatrixXd& centered) {
    sol.status = SolveStatus::optimal;
    sol.p = centered;
    sol.q = a_star * sol.p;
    sol.a_hat = a_star;
    sol.objective = 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sol.p, Eigen::EigenvaluesOnly);
    sol.p_condition =
        es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    return sol;
  };
  if (spectrum_inside) {
    auto centered = center_fixed_point(a_star, r, 2.0 * opts.p_floor * eye,
                                       opts.p_floor, 80, 1e-9);
    if (centered) return exact_solution(*centered);
  }

  const auto basis_p = sym_basis(n);
  std::vector<MatrixXd> basis_q;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MatrixXd e = MatrixXd::Zero(n, n);
      e(i, j) = 1.0;
      basis_q.push_back(std::move(e));
    }
  const int kp = static_cast<int>(basis_p.size());
  const int kq = static_cast<int>(basis_q.size());
  const int k = kp + kq;

  // Constant per solve: residual directions, their Gram matrix (the exact
  // Hessian of the quadratic objective), and the constraint differentials.
  std::vector<MatrixXd> dr(static_cast<size_t>(k));
  std::vector<MatrixXd> dm(static_cast<size_t>(k));
  for (int i = 0; i < kp; ++i) {
    dr[static_cast<size_t>(i)] = a_star * basis_p[static_cast<size_t>(i)];
    dm[static_cast<size_t>(i)] =
        Eigen::kroneckerProduct(r.lambda, basis_p[static_cast<size_t>(i)]);
  }
  for (int i = 0; i < kq; ++i) {
    dr[static_cast<size_t>(kp + i)] = -basis_q[static_cast<size_t>(i)];
    dm[static_cast<size_t>(kp + i)] =
        Eigen::kroneckerProduct(r.beta, basis_q[static_cast<size_t>(i)]) +
        Eigen::kroneckerProduct(r.beta.transpose(),
                                basis_q[static_cast<size_t>(i)].transpose());
  }
  MatrixXd h_obj(k, k);
  for (int ia = 0; ia < k; ++ia)
    for (int ib = ia; ib < k; ++ib) {
      const double v = 2.0 * dr[static_cast<size_t>(ia)]
                                 .cwiseProduct(dr[static_cast<size_t>(ib)])
                                 .sum();
      h_obj(ia, ib) = v;
      h_obj(ib, ia) = v;
    }

  MatrixXd p = 2.0 * opts.p_floor * eye;
  MatrixXd q = anchor.rho * p;

  double mu = std::max(1.0, (a_star * p - q).cwiseAbs().maxCoeff());
  const double gap_dim = static_cast<double>(r.size() * n + n);
  int total_iters = 0;
  bool reached_mu_min = false;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    for (int inner = 0; inner < opts.max_inner; ++inner) {
      auto st = evaluate(a_star, r, p, q, opts.p_floor, mu);
      if (!st) break;  // should not happen at an accepted iterate
      ++total_iters;

      const MatrixXd linv_m = lower_inverse(st->llt_m);
      const MatrixXd s_inv = linv_m.transpose() * linv_m;
      const MatrixXd linv_p = lower_inverse(st->llt_p);
      const MatrixXd pi_inv = linv_p.transpose() * linv_p;

      MatrixXd t_lambda, t_beta;
      weighted_block_sums(r, s_inv, n, t_lambda, t_beta);

      const MatrixXd gp_mat = a_star.transpose() * st->residual +
                              st->residual.transpose() * a_star -
                              mu * (t_lambda + pi_inv);
      const MatrixXd gq_mat = -2.0 * st->residual - 2.0 * mu * t_beta;

      VectorXd g(k);
      for (int i = 0; i < kp; ++i)
        g[i] = gp_mat.cwiseProduct(basis_p[static_cast<size_t>(i)]).sum();
      for (int i = 0; i < kq; ++i)
        g[kp + i] = gq_mat.cwiseProduct(basis_q[static_cast<size_t>(i)]).sum();

      std::vector<MatrixXd> gm(static_cast<size_t>(k));
      for (int i = 0; i < k; ++i)
        gm[static_cast<size_t>(i)] =
            linv_m * dm[static_cast<size_t>(i)] * linv_m.transpose();
      std::vector<MatrixXd> gp(static_cast<size_t>(kp));
      for (int i = 0; i < kp; ++i)
        gp[static_cast<size_t>(i)] =
            linv_p * basis_p[static_cast<size_t>(i)] * linv_p.transpose();

      MatrixXd h = h_obj;
      for (int ia = 0; ia < k; ++ia)
        for (int ib = ia; ib < k; ++ib) {
          double v = mu * gm[static_cast<size_t>(ia)]
                              .cwiseProduct(gm[static_cast<size_t>(ib)])
                              .sum();
          if (ia < kp && ib < kp)
            v += mu * gp[static_cast<size_t>(ia)]
                          .cwiseProduct(gp[static_cast<size_t>(ib)])
                          .sum();
          h(ia, ib) += v;
          if (ia != ib) h(ib, ia) += v;
        }
      h.diagonal().array() += 1e-12;

      const VectorXd d = Eigen::LDLT<MatrixXd>(h).solve(-g);
      const double decrement = -g.dot(d);

      if (opts.collect_trace) {
        TraceRow row;
        row.iteration = total_iters;
        row.mu = mu;
        row.objective = st->objective;
        row.gap_estimate = mu * gap_dim;
        row.grad_norm = g.norm();
        row.min_eig_constraint =
            Eigen::SelfAdjointEigenSolver<MatrixXd>(
                build_constraint(r, p, q), Eigen::EigenvaluesOnly)
                .eigenvalues()
                .minCoeff();
        row.min_eig_p = Eigen::SelfAdjointEigenSolver<MatrixXd>(
                            p, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
        sol.trace.push_back(row);
      }

      if (decrement / 2.0 < opts.newton_tol) break;

      MatrixXd dp = MatrixXd::Zero(n, n), dq = MatrixXd::Zero(n, n);
      for (int i = 0; i < kp; ++i) dp += d[i] * basis_p[static_cast<size_t>(i)];
      for (int i = 0; i < kq; ++i)
        dq += d[kp + i] * basis_q[static_cast<size_t>(i)];

      double t = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        auto trial = evaluate(a_star, r, p + t * dp, q + t * dq, opts.p_floor, mu);
        if (trial && trial->phi <= st->phi + opts.armijo_slope * t * g.dot(d)) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      if (opts.collect_trace && !sol.trace.empty()) sol.trace.back().step = t;
      p += t * dp;
      q += t * dq;
    }
    if (mu < opts.mu_min) {
      reached_mu_min = true;
      break;
    }
    mu *= opts.mu_reduction;
  }

  // Retry the exact fixed point from the path endpoint: the path's P is a
  // feasibility witness whenever one exists.
  if (spectrum_inside && reached_mu_min) {
    auto centered = center_fixed_point(a_star, r, p, opts.p_floor, 80, 1e-9);
    if (centered) {
      std::vector<TraceRow> kept = std::move(sol.trace);
      sol = exact_solution(*centered);
      sol.trace = std::move(kept);
      sol.iterations = total_iters;
      return sol;
    }
  }

  sol.status =
      reached_mu_min ? SolveStatus::optimal : SolveStatus::max_iterations;
  sol.p = p;
  sol.q = q;
  sol.objective = (a_star * p - q).squaredNorm();
  sol.iterations = total_iters;
  // A_hat = Q P^{-1} via a solve against P: P X = Q^T, A_hat = X^T.
  Eigen::LLT<MatrixXd> llt_p(p);
  if (llt_p.info() != Eigen::Success) {
    sol.status = SolveStatus::max_iterations;
    return sol;
  }
  sol.a_hat = llt_p.solve(q.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(p, Eigen::EigenvaluesOnly);
  sol.p_condition = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  return sol;
}

VerifyReport verify_solution(const MatrixXd& a_star, const SolveResult& sol,
                             const Region& r, double tol) {
  VerifyReport rep;
  rep.eigenvalues = eigenvalues(sol.a_hat);
  rep.all_inside = true;
  for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) {
    const bool in = contains(r, rep.eigenvalues[i], tol);
    rep.inside.push_back(in);
    rep.all_inside = rep.all_inside && in;
  }
  rep.min_eig_constraint =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(
          build_constraint(r, sol.p, sol.q), Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  rep.min_eig_p =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(sol.p, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  rep.residual = (a_star * sol.p - sol.q).norm();
  return rep;
}

void save_trace(const std::filesystem::path& path,
                const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,mu,objective,gap,residual,step,constraint_margin,p_margin\n";
  out.precision(17);
  for (const auto& row : trace)
    out << row.iteration << ',' << row.mu << ',' << row.objective << ','
        << row.gap_estimate << ',' << row.grad_norm << ',' << row.step << ','
        << row.min_eig_constraint << ',' << row.min_eig_p << '\n';
}

void save_solution(const std::filesystem::path& path, const SolveResult& sol) {
  nlohmann::json j;
  j["status"] = to_string(sol.status);
  j["objective"] = sol.objective;
  j["iterations"] = sol.iterations;
  j["p_condition"] = sol.p_condition;
  j["p"] = detail::matrix_to_json(sol.p);
  j["q"] = detail::matrix_to_json(sol.q);
  j["a_hat"] = detail::matrix_to_json(sol.a_hat);
  detail::save_json_file(path, j);
}

}  // namespace sid
