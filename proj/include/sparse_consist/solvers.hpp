#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "sparse_consist/feasibility.hpp"
#include "sparse_consist/operators.hpp"

namespace sparse_consist {

struct SolverConfig {
  double lambda = 1e-2;
  std::optional<double> step;  // defaults to 1 / dict.estimate_lipschitz()
  int max_iter = 400;
  // Stop once |F_k - F_{k-1}| / max(F_{k-1}, 1e-12) < rel_tol on two
  // consecutive iterations. Zero disables.
  double rel_tol = 1e-6;
  std::optional<Eigen::VectorXd> alpha0;  // defaults to zero
  // Called with (k, alpha_k) after every iteration when set.
  std::function<void(int, const Eigen::VectorXd&)> on_iterate;
};

struct SolverTrace {
  std::vector<double> objective_per_iter;
  int iterations_run = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
  double per_iteration_seconds = 0.0;
  // For ISTA/FISTA the first-order optimality violation at the returned point;
  // for ADMM the final primal residual ||alpha - beta||.
  double kkt_residual_final = 0.0;
};

struct SolveResult {
  Eigen::VectorXd alpha;
  SolverTrace trace;
};

// {"alpha", "objective", "iterations", "converged", "wall_time_s", "kkt_residual"}
nlohmann::json to_json(const SolveResult& result);

// max(|v_i| - rho, 0) * sign(v_i), with sign(0) = 0.
Eigen::VectorXd soft_threshold(double rho, const Eigen::VectorXd& v);

// 0.5 * dist(D alpha, set)^2 + lambda * ||alpha||_1
double objective(const Dictionary& dict, const Eigen::VectorXd& alpha, const IntervalSet& set,
                 double lambda);

// Gradient of the data term with respect to alpha: D^T (D alpha - P(D alpha)).
Eigen::VectorXd data_gradient(const Dictionary& dict, const Eigen::VectorXd& alpha,
                              const IntervalSet& set);

// One proximal-gradient step S_{mu*lambda}(alpha - mu * data_gradient(alpha)).
Eigen::VectorXd ista_step(const Dictionary& dict, const Eigen::VectorXd& alpha,
                          const IntervalSet& set, double mu, double lambda);

SolveResult solve_ista(const Dictionary& dict, const IntervalSet& set, const SolverConfig& config);

// Accelerated variant: the thresholded step is taken at an extrapolated point
// u_k, with momentum t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2 starting at t_1 = 1.
SolveResult solve_fista(const Dictionary& dict, const IntervalSet& set, const SolverConfig& config);

inline double fista_next_t(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

// Max violation of 0 in  g + lambda * d||alpha||_1  with g = data_gradient.
double kkt_residual(const Dictionary& dict, const Eigen::VectorXd& alpha, const IntervalSet& set,
                    double lambda);

// Resolved step size for a config (explicit step or 1/L), validated.
double resolve_step(const Dictionary& dict, const SolverConfig& config);

// ---------------------------------------------------------------------------
// Constrained baseline:  min ||alpha||_1  s.t.  D alpha in set, by ADMM.

struct AdmmConfig {
  double rho_outer = 1.0;
  double rho_inner = 1.0;
  int inner_iters = 50;
  double inner_tol = 1e-8;
  int max_iter = 400;
  double abs_tol = 1e-6;
  double rel_tol = 1e-6;
};

struct InnerProjectionResult {
  Eigen::VectorXd alpha;
  double primal_residual = 0.0;
  int iterations = 0;
  bool converged = false;  // primal and dual residuals below inner_tol
  bool failed = false;     // primal residual still above 1e-3
};

// argmin_alpha ||u - alpha||^2  s.t.  D alpha in set, by an inner ADMM on the
// split z = D alpha. Holds the cached factorization of (I + rho D^T D) and the
// (z, w) state, which carries over between calls as a warm start.
class NestedProjector {
 public:
  NestedProjector(const Dictionary& dict, const IntervalSet& set, const AdmmConfig& cfg);

  InnerProjectionResult project(const Eigen::VectorXd& u);

 private:
  const Dictionary& dict_;
  const IntervalSet& set_;
  AdmmConfig cfg_;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
  Eigen::VectorXd z_;
  Eigen::VectorXd w_;
  bool warm_ = false;
};

// Cold-started one-shot projection.
InnerProjectionResult inner_projection(const Dictionary& dict, const Eigen::VectorXd& u,
                                       const IntervalSet& set, const AdmmConfig& cfg);

// Returns the beta iterate (the one kept feasible by the inner projection).
// trace.objective_per_iter records ||alpha_k||_1. Never throws on
// non-convergence; trace.converged reports it.
SolveResult solve_admm_constrained(const Dictionary& dict, const IntervalSet& set,
                                   const AdmmConfig& cfg);

}  // namespace sparse_consist
