#include "sparse_consist/operators.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sparse_consist/errors.hpp"

namespace sparse_consist {

PowerIterationResult power_iteration(const RowMatrix& d, double tol, int max_iter) {
  if (!(tol > 0.0) || max_iter < 1) {
    throw InputError("power_iteration: need tol > 0 and max_iter >= 1");
  }
  PowerIterationResult result;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d.cols()).normalized();
  double previous = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd dv = d * v;
    const double rayleigh = dv.squaredNorm();
    result.rayleigh_history.push_back(rayleigh);
    result.eigenvalue = rayleigh;
    result.iterations = k + 1;
    Eigen::VectorXd next = d.transpose() * dv;
    const double norm = next.norm();
    if (norm == 0.0) break;
    v = next / norm;
    if (k > 0 && std::abs(rayleigh - previous) < tol * rayleigh) break;
    previous = rayleigh;
  }
  return result;
}

Dictionary::Dictionary(RowMatrix matrix)
    : matrix_(std::move(matrix)), cache_(std::make_shared<Cache>()) {
  if (matrix_.rows() < 1 || matrix_.cols() < 1) {
    throw InputError("Dictionary: matrix must be at least 1 x 1");
  }
  if (!matrix_.allFinite()) throw InputError("Dictionary: non-finite entry");
}

Eigen::VectorXd Dictionary::synthesize(const Eigen::VectorXd& alpha) const {
  require_same_size(cols(), alpha.size(), "synthesize");
  return matrix_ * alpha;
}

Eigen::VectorXd Dictionary::correlate(const Eigen::VectorXd& r) const {
  require_same_size(rows(), r.size(), "correlate");
  return matrix_.transpose() * r;
}

double Dictionary::estimate_lipschitz(double tol, int max_iter) const {
  std::call_once(cache_->lipschitz_once, [&] {
    const auto result = power_iteration(matrix_, tol, max_iter);
    if (!(result.eigenvalue > 0.0)) {
      throw SolverError("estimate_lipschitz: D^T D has no positive eigenvalue (zero dictionary?)");
    }
    cache_->lipschitz = kLipschitzSafetyFactor * result.eigenvalue;
    cache_->lipschitz_ready.store(true, std::memory_order_release);
  });
  return cache_->lipschitz;
}

std::optional<double> Dictionary::cached_lipschitz() const {
  if (cache_->lipschitz_ready.load(std::memory_order_acquire)) return cache_->lipschitz;
  return std::nullopt;
}

std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> Dictionary::regularized_gram_factor(
    double rho) const {
  if (!(rho > 0.0)) throw InputError("regularized_gram_factor: rho must be positive");
  std::lock_guard lock(cache_->factor_mutex);
  auto& slot = cache_->factors[rho];
  if (!slot) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(cols(), cols());
    system.selfadjointView<Eigen::Lower>().rankUpdate(matrix_.transpose(), rho);
    auto factor = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(system);
    if (factor->info() != Eigen::Success) {
      throw SolverError("regularized_gram_factor: Cholesky factorization failed");
    }
    slot = std::move(factor);
  }
  return slot;
}

Dictionary normalize_columns(const Dictionary& dict) {
  RowMatrix m = dict.matrix();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (norm > 0.0) m.col(j) /= norm;
  }
  return Dictionary(std::move(m));
}

Eigen::VectorXd clip(const Eigen::VectorXd& x, double theta_plus, double theta_minus) {
  if (!(theta_plus > theta_minus)) throw InputError("clip: theta_plus must exceed theta_minus");
  return x.cwiseMax(theta_minus).cwiseMin(theta_plus);
}

double midriser_step(int n_bits) {
  if (n_bits < 1 || n_bits > 52) throw InputError("quantizer: n_bits must be in [1, 52]");
  return std::ldexp(1.0, 1 - n_bits);
}

Eigen::VectorXd quantize_midriser(const Eigen::VectorXd& x, int n_bits) {
  const double delta = midriser_step(n_bits);
  const double top = 1.0 - 0.5 * delta;
  Eigen::VectorXd q(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double level = delta * (std::floor(x[i] / delta) + 0.5);
    q[i] = std::min(top, std::max(-top, level));
  }
  return q;
}

DistortionSpec DistortionSpec::clip(double theta_plus, double theta_minus) {
  if (!(theta_plus > theta_minus)) throw InputError("clip: theta_plus must exceed theta_minus");
  DistortionSpec spec;
  spec.kind = Kind::Clip;
  spec.theta_plus = theta_plus;
  spec.theta_minus = theta_minus;
  return spec;
}

DistortionSpec DistortionSpec::quantize(int n_bits) {
  midriser_step(n_bits);  // validates
  DistortionSpec spec;
  spec.kind = Kind::QuantizeMidriser;
  spec.n_bits = n_bits;
  return spec;
}

DistortionSpec DistortionSpec::parse(const std::string& text) {
  if (text == "none") return none();
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InputError("distortion must look like clip:THETA, quant:BITS or none, got '" + text + "'");
  }
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  char* end = nullptr;
  if (kind == "clip") {
    const double theta = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0' || !std::isfinite(theta) || !(theta > 0.0)) {
      throw InputError("clip level must be a positive number, got '" + value + "'");
    }
    return symmetric_clip(theta);
  }
  if (kind == "quant") {
    const long bits = std::strtol(value.c_str(), &end, 10);
    if (value.empty() || *end != '\0' || bits < 1 || bits > 52) {
      throw InputError("quantizer bits must be an integer in [1, 52], got '" + value + "'");
    }
    return quantize(static_cast<int>(bits));
  }
  throw InputError("unknown distortion kind '" + kind + "'");
}

double DistortionSpec::parameter() const {
  switch (kind) {
    case Kind::Clip:
      return theta_plus;
    case Kind::QuantizeMidriser:
      return n_bits;
    case Kind::None:
      break;
  }
  return 0.0;
}

std::string DistortionSpec::label() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Clip:
      out << "clip:" << theta_plus;
      break;
    case Kind::QuantizeMidriser:
      out << "quant:" << n_bits;
      break;
    case Kind::None:
      out << "none";
      break;
  }
  return out.str();
}

Eigen::VectorXd DistortionSpec::apply(const Eigen::VectorXd& x) const {
  switch (kind) {
    case Kind::Clip:
      return sparse_consist::clip(x, theta_plus, theta_minus);
    case Kind::QuantizeMidriser:
      return quantize_midriser(x, n_bits);
    case Kind::None:
      break;
  }
  return x;
}

IntervalSet DistortionSpec::feasible_set(const Eigen::VectorXd& y) const {
  switch (kind) {
    case Kind::Clip:
      return IntervalSet::from_clipping(y, theta_plus, theta_minus);
    case Kind::QuantizeMidriser:
      return IntervalSet::from_quantization(y, delta(), 1.0);
    case Kind::None:
      break;
  }
  return IntervalSet::singleton(y);
}

}  // namespace sparse_consist
