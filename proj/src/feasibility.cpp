#include "sparse_consist/feasibility.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sparse_consist/errors.hpp"

namespace sparse_consist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLevelTolerance = 1e-9;

nlohmann::json encode_bound(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

double decode_bound(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw InputError("interval bound: unexpected string '" + s + "'");
  }
  if (!j.is_number()) throw InputError("interval bound: expected a number or \"inf\"/\"-inf\"");
  return j.get<double>();
}

}  // namespace

IntervalSet::IntervalSet(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  require_same_size(lower_.size(), upper_.size(), "IntervalSet bounds");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] == kInf ||
        upper_[i] == -kInf || !(lower_[i] <= upper_[i])) {
      throw InputError("IntervalSet: empty or invalid interval at sample " + std::to_string(i));
    }
  }
}

IntervalSet IntervalSet::from_clipping(const Eigen::VectorXd& y, double theta_plus,
                                       double theta_minus) {
  if (!(theta_plus > theta_minus)) {
    throw InputError("from_clipping: theta_plus must exceed theta_minus");
  }
  Eigen::VectorXd lower = y;
  Eigen::VectorXd upper = y;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y[i] >= theta_minus && y[i] <= theta_plus)) {
      throw InputError("from_clipping: sample " + std::to_string(i) + " = " + std::to_string(y[i]) +
                       " lies outside the clipping range [" + std::to_string(theta_minus) + ", " +
                       std::to_string(theta_plus) + "]");
    }
    if (y[i] == theta_plus) {
      upper[i] = kInf;
    } else if (y[i] == theta_minus) {
      lower[i] = -kInf;
    }
  }
  return IntervalSet(std::move(lower), std::move(upper));
}

IntervalSet IntervalSet::from_quantization(const Eigen::VectorXd& y, double delta,
                                           double saturation) {
  if (!(delta > 0.0) || !(saturation > 0.0)) {
    throw InputError("from_quantization: delta and saturation must be positive");
  }
  const double levels = std::round(2.0 * saturation / delta);
  if (levels < 1.0 || std::abs(levels * delta - 2.0 * saturation) > kLevelTolerance) {
    throw InputError("from_quantization: saturation range is not a whole number of bins");
  }
  const double half = 0.5 * delta;
  Eigen::VectorXd lower(y.size());
  Eigen::VectorXd upper(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // Level index j such that y = -saturation + delta * (j + 1/2).
    const double pos = (y[i] + saturation) / delta - 0.5;
    const double j = std::round(pos);
    if (!std::isfinite(pos) || std::abs(pos - j) * delta > kLevelTolerance || j < 0.0 ||
        j > levels - 1.0) {
      throw InputError("from_quantization: sample " + std::to_string(i) + " = " +
                       std::to_string(y[i]) + " is not a quantizer level");
    }
    lower[i] = j == 0.0 ? -kInf : y[i] - half;
    upper[i] = j == levels - 1.0 ? kInf : y[i] + half;
  }
  return IntervalSet(std::move(lower), std::move(upper));
}

IntervalSet IntervalSet::singleton(const Eigen::VectorXd& x) {
  if (!x.allFinite()) throw InputError("singleton: non-finite sample");
  return IntervalSet(x, x);
}

void IntervalSet::check_size(const Eigen::VectorXd& x) const {
  require_same_size(size(), x.size(), "IntervalSet");
}

Eigen::VectorXd IntervalSet::project(const Eigen::VectorXd& x) const {
  check_size(x);
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

double IntervalSet::distance_sq(const Eigen::VectorXd& x) const {
  return (x - project(x)).squaredNorm();
}

Eigen::VectorXd IntervalSet::grad_half_distance_sq(const Eigen::VectorXd& x) const {
  return x - project(x);
}

bool IntervalSet::contains(const Eigen::VectorXd& x, double tol) const {
  check_size(x);
  if (tol < 0.0) throw InputError("contains: negative tolerance");
  return ((lower_.array() - tol) <= x.array()).all() && (x.array() <= (upper_.array() + tol)).all();
}

nlohmann::json to_json(const IntervalSet& set) {
  nlohmann::json lower = nlohmann::json::array();
  nlohmann::json upper = nlohmann::json::array();
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    lower.push_back(encode_bound(set.lower()[i]));
    upper.push_back(encode_bound(set.upper()[i]));
  }
  return {{"lower", std::move(lower)}, {"upper", std::move(upper)}};
}

IntervalSet interval_set_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("lower") || !j.contains("upper") || !j["lower"].is_array() ||
      !j["upper"].is_array()) {
    throw InputError("interval set JSON must be an object with \"lower\" and \"upper\" arrays");
  }
  const auto& lo = j["lower"];
  const auto& hi = j["upper"];
  require_same_size(static_cast<long>(lo.size()), static_cast<long>(hi.size()),
                    "interval set JSON upper");
  Eigen::VectorXd lower(lo.size());
  Eigen::VectorXd upper(hi.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lower[static_cast<Eigen::Index>(i)] = decode_bound(lo[i]);
    upper[static_cast<Eigen::Index>(i)] = decode_bound(hi[i]);
  }
  return IntervalSet(std::move(lower), std::move(upper));
}

}  // namespace sparse_consist
