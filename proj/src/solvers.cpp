#include "sparse_consist/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "sparse_consist/errors.hpp"

namespace sparse_consist {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate(const Dictionary& dict, const IntervalSet& set, const SolverConfig& config) {
  require_same_size(dict.rows(), set.size(), "feasibility set");
  if (!(config.lambda > 0.0)) throw InputError("solver: lambda must be positive");
  if (config.max_iter < 1) throw InputError("solver: max_iter must be >= 1");
  if (!(config.rel_tol >= 0.0)) throw InputError("solver: rel_tol must be >= 0");
  if (config.alpha0) require_same_size(dict.cols(), config.alpha0->size(), "alpha0");
}

// Objective from a precomputed synthesis d_alpha = D alpha.
double objective_at(const Eigen::VectorXd& alpha, const Eigen::VectorXd& d_alpha,
                    const IntervalSet& set, double lambda) {
  return 0.5 * set.distance_sq(d_alpha) + lambda * alpha.lpNorm<1>();
}

Eigen::VectorXd thresholded_step(const Dictionary& dict, const Eigen::VectorXd& point,
                                 const Eigen::VectorXd& d_point, const IntervalSet& set, double mu,
                                 double lambda) {
  const Eigen::VectorXd gradient = dict.correlate(set.grad_half_distance_sq(d_point));
  return soft_threshold(mu * lambda, point - mu * gradient);
}

// FISTA's objective is not monotone and can flatten for a single step at the
// turn of an oscillation, so one small change is not enough evidence.
constexpr int kQuietStepsToConverge = 2;

class ConvergenceTest {
 public:
  explicit ConvergenceTest(double rel_tol) : rel_tol_(rel_tol) {}

  bool update(double current, double previous) {
    const bool quiet = std::abs(current - previous) / std::max(previous, 1e-12) < rel_tol_;
    quiet_steps_ = quiet ? quiet_steps_ + 1 : 0;
    return quiet_steps_ >= kQuietStepsToConverge;
  }

 private:
  double rel_tol_;
  int quiet_steps_ = 0;
};

void check_finite(double value, const char* solver, int iteration) {
  if (!std::isfinite(value)) {
    throw SolverError(std::string(solver) + ": objective became non-finite at iteration " +
                      std::to_string(iteration));
  }
}

void finish_trace(SolverTrace& trace, Clock::time_point start) {
  trace.iterations_run = static_cast<int>(trace.objective_per_iter.size());
  trace.wall_time_seconds = seconds_since(start);
  trace.per_iteration_seconds =
      trace.iterations_run > 0 ? trace.wall_time_seconds / trace.iterations_run : 0.0;
}

}  // namespace

nlohmann::json to_json(const SolveResult& result) {
  return {{"alpha", std::vector<double>(result.alpha.begin(), result.alpha.end())},
          {"objective", result.trace.objective_per_iter},
          {"iterations", result.trace.iterations_run},
          {"converged", result.trace.converged},
          {"wall_time_s", result.trace.wall_time_seconds},
          {"kkt_residual", result.trace.kkt_residual_final}};
}

Eigen::VectorXd soft_threshold(double rho, const Eigen::VectorXd& v) {
  if (!(rho >= 0.0)) throw InputError("soft_threshold: rho must be >= 0");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double shrunk = std::abs(v[i]) - rho;
    out[i] = shrunk > 0.0 ? std::copysign(shrunk, v[i]) : 0.0;
  }
  return out;
}

double objective(const Dictionary& dict, const Eigen::VectorXd& alpha, const IntervalSet& set,
                 double lambda) {
  require_same_size(dict.rows(), set.size(), "feasibility set");
  return objective_at(alpha, dict.synthesize(alpha), set, lambda);
}

Eigen::VectorXd data_gradient(const Dictionary& dict, const Eigen::VectorXd& alpha,
                              const IntervalSet& set) {
  return dict.correlate(set.grad_half_distance_sq(dict.synthesize(alpha)));
}

Eigen::VectorXd ista_step(const Dictionary& dict, const Eigen::VectorXd& alpha,
                          const IntervalSet& set, double mu, double lambda) {
  if (!(mu > 0.0)) throw InputError("ista_step: step must be positive");
  return thresholded_step(dict, alpha, dict.synthesize(alpha), set, mu, lambda);
}

double resolve_step(const Dictionary& dict, const SolverConfig& config) {
  if (!config.step) return 1.0 / dict.estimate_lipschitz();
  const double step = *config.step;
  if (!(step > 0.0)) throw InputError("solver: step must be positive");
  if (const auto lipschitz = dict.cached_lipschitz(); lipschitz && step * *lipschitz > 1.0 + 1e-12) {
    throw InputError("solver: step exceeds 1/L");
  }
  return step;
}

SolveResult solve_ista(const Dictionary& dict, const IntervalSet& set, const SolverConfig& config) {
  validate(dict, set, config);
  const double mu = resolve_step(dict, config);
  const auto start = Clock::now();

  SolveResult result;
  SolverTrace& trace = result.trace;
  trace.objective_per_iter.reserve(static_cast<std::size_t>(config.max_iter));
  Eigen::VectorXd alpha = config.alpha0.value_or(Eigen::VectorXd::Zero(dict.cols()));
  Eigen::VectorXd d_alpha = dict.synthesize(alpha);
  double previous = objective_at(alpha, d_alpha, set, config.lambda);
  ConvergenceTest stop(config.rel_tol);

  for (int k = 1; k <= config.max_iter; ++k) {
    alpha = thresholded_step(dict, alpha, d_alpha, set, mu, config.lambda);
    d_alpha = dict.synthesize(alpha);
    if (config.on_iterate) config.on_iterate(k, alpha);
    const double current = objective_at(alpha, d_alpha, set, config.lambda);
    check_finite(current, "ISTA", k);
    trace.objective_per_iter.push_back(current);
    if (stop.update(current, previous)) {
      trace.converged = true;
      break;
    }
    previous = current;
  }

  finish_trace(trace, start);
  trace.kkt_residual_final = kkt_residual(dict, alpha, set, config.lambda);
  result.alpha = std::move(alpha);
  return result;
}

SolveResult solve_fista(const Dictionary& dict, const IntervalSet& set, const SolverConfig& config) {
  validate(dict, set, config);
  const double mu = resolve_step(dict, config);
  const auto start = Clock::now();

  SolveResult result;
  SolverTrace& trace = result.trace;
  trace.objective_per_iter.reserve(static_cast<std::size_t>(config.max_iter));
  Eigen::VectorXd alpha_prev = config.alpha0.value_or(Eigen::VectorXd::Zero(dict.cols()));
  Eigen::VectorXd d_alpha_prev = dict.synthesize(alpha_prev);
  Eigen::VectorXd u = alpha_prev;
  // D u is tracked by linearity, so each iteration costs one D and one D^T product.
  Eigen::VectorXd d_u = d_alpha_prev;
  Eigen::VectorXd alpha = alpha_prev;
  double t = 1.0;
  double previous = objective_at(alpha_prev, d_alpha_prev, set, config.lambda);
  ConvergenceTest stop(config.rel_tol);

  for (int k = 1; k <= config.max_iter; ++k) {
    alpha = thresholded_step(dict, u, d_u, set, mu, config.lambda);
    const Eigen::VectorXd d_alpha = dict.synthesize(alpha);
    if (config.on_iterate) config.on_iterate(k, alpha);
    const double current = objective_at(alpha, d_alpha, set, config.lambda);
    check_finite(current, "FISTA", k);
    trace.objective_per_iter.push_back(current);
    if (stop.update(current, previous)) {
      trace.converged = true;
      break;
    }
    previous = current;

    const double t_next = fista_next_t(t);
    const double momentum = (t - 1.0) / t_next;
    u = alpha + momentum * (alpha - alpha_prev);
    d_u = d_alpha + momentum * (d_alpha - d_alpha_prev);
    alpha_prev = alpha;
    d_alpha_prev = d_alpha;
    t = t_next;
  }

  finish_trace(trace, start);
  trace.kkt_residual_final = kkt_residual(dict, alpha, set, config.lambda);
  result.alpha = std::move(alpha);
  return result;
}

double kkt_residual(const Dictionary& dict, const Eigen::VectorXd& alpha, const IntervalSet& set,
                    double lambda) {
  require_same_size(dict.rows(), set.size(), "feasibility set");
  const Eigen::VectorXd g = data_gradient(dict, alpha, set);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const double violation = alpha[i] != 0.0
                                 ? std::abs(g[i] + std::copysign(lambda, alpha[i]))
                                 : std::max(0.0, std::abs(g[i]) - lambda);
    worst = std::max(worst, violation);
  }
  return worst;
}

}  // namespace sparse_consist
