#include <chrono>
#include <cmath>

#include "sparse_consist/errors.hpp"
#include "sparse_consist/solvers.hpp"

namespace sparse_consist {

namespace {

constexpr double kInnerFailureResidual = 1e-3;

void validate(const AdmmConfig& cfg) {
  if (!(cfg.rho_outer > 0.0) || !(cfg.rho_inner > 0.0) || cfg.inner_iters < 1 ||
      !(cfg.inner_tol > 0.0) || cfg.max_iter < 1 || !(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0)) {
    throw InputError("AdmmConfig: all parameters must be positive");
  }
}

}  // namespace

NestedProjector::NestedProjector(const Dictionary& dict, const IntervalSet& set,
                                 const AdmmConfig& cfg)
    : dict_(dict), set_(set), cfg_(cfg) {
  validate(cfg_);
  require_same_size(dict.rows(), set.size(), "feasibility set");
  factor_ = dict.regularized_gram_factor(cfg_.rho_inner);
}

InnerProjectionResult NestedProjector::project(const Eigen::VectorXd& u) {
  require_same_size(dict_.cols(), u.size(), "inner_projection");
  const double rho = cfg_.rho_inner;
  InnerProjectionResult result;
  if (!warm_) {
    z_ = set_.project(dict_.synthesize(u));
    w_ = Eigen::VectorXd::Zero(dict_.rows());
    warm_ = true;
  }

  Eigen::VectorXd alpha;
  for (int it = 1; it <= cfg_.inner_iters; ++it) {
    // (I + rho D^T D) alpha = u + rho D^T (z - w)
    alpha = factor_->solve(u + rho * dict_.correlate(z_ - w_));
    const Eigen::VectorXd d_alpha = dict_.synthesize(alpha);
    const Eigen::VectorXd z_prev = z_;
    z_ = set_.project(d_alpha + w_);
    w_ += d_alpha - z_;

    result.iterations = it;
    result.primal_residual = (d_alpha - z_).norm();
    const double dual_residual = rho * dict_.correlate(z_ - z_prev).norm();
    if (result.primal_residual < cfg_.inner_tol && dual_residual < cfg_.inner_tol) {
      result.converged = true;
      break;
    }
  }
  result.failed = result.primal_residual > kInnerFailureResidual;
  result.alpha = std::move(alpha);
  return result;
}

InnerProjectionResult inner_projection(const Dictionary& dict, const Eigen::VectorXd& u,
                                       const IntervalSet& set, const AdmmConfig& cfg) {
  NestedProjector projector(dict, set, cfg);
  return projector.project(u);
}

SolveResult solve_admm_constrained(const Dictionary& dict, const IntervalSet& set,
                                   const AdmmConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  NestedProjector projector(dict, set, cfg);

  const Eigen::Index m = dict.cols();
  const double rho = cfg.rho_outer;
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd dual = Eigen::VectorXd::Zero(m);

  SolveResult result;
  SolverTrace& trace = result.trace;
  double primal = 0.0;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    alpha = soft_threshold(1.0 / rho, beta - dual);
    const Eigen::VectorXd beta_prev = beta;
    beta = projector.project(alpha + dual).alpha;
    dual += alpha - beta;

    primal = (alpha - beta).norm();
    const double dual_res = rho * (beta - beta_prev).norm();
    const double eps_primal = sqrt_m * cfg.abs_tol + cfg.rel_tol * std::max(alpha.norm(), beta.norm());
    const double eps_dual = sqrt_m * cfg.abs_tol + cfg.rel_tol * rho * dual.norm();
    trace.objective_per_iter.push_back(alpha.lpNorm<1>());
    if (primal < eps_primal && dual_res < eps_dual) {
      trace.converged = true;
      break;
    }
  }

  trace.iterations_run = static_cast<int>(trace.objective_per_iter.size());
  trace.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  trace.per_iteration_seconds = trace.wall_time_seconds / trace.iterations_run;
  trace.kkt_residual_final = primal;
  result.alpha = std::move(beta);
  return result;
}

}  // namespace sparse_consist
