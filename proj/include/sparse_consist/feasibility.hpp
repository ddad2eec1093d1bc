#pragma once

#include <Eigen/Core>
#include <json.hpp>

namespace sparse_consist {

// Axis-aligned box  {x : lower <= x <= upper}  standing for the pre-image of an
// observed signal through a clipper or quantizer. Bounds may be infinite;
// lower[i] == upper[i] marks a sample that is known exactly.
//
// Immutable once built; every member is const and thread-safe.
class IntervalSet {
 public:
  IntervalSet(Eigen::VectorXd lower, Eigen::VectorXd upper);

  // Samples equal to theta_plus (theta_minus) become [theta_plus, inf)
  // ((-inf, theta_minus]); all others are singletons. The clipper emits the
  // thresholds exactly, so detection uses exact equality.
  static IntervalSet from_clipping(const Eigen::VectorXd& y, double theta_plus,
                                   double theta_minus);

  // y must hold midriser levels -saturation + delta*(j + 1/2). Interior levels
  // map to the closed bin [y - delta/2, y + delta/2]; the outermost levels
  // are unbounded on their outer side.
  static IntervalSet from_quantization(const Eigen::VectorXd& y, double delta,
                                       double saturation);

  static IntervalSet singleton(const Eigen::VectorXd& x);

  Eigen::Index size() const { return lower_.size(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  // Euclidean projection: element-wise clamp.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  double distance_sq(const Eigen::VectorXd& x) const;
  // Gradient of 0.5 * distance_sq, i.e. x - project(x). 1-Lipschitz.
  Eigen::VectorXd grad_half_distance_sq(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;

 private:
  void check_size(const Eigen::VectorXd& x) const;

  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

// {"lower": [...], "upper": [...]} with infinities written as "-inf" / "inf".
nlohmann::json to_json(const IntervalSet& set);
IntervalSet interval_set_from_json(const nlohmann::json& j);

}  // namespace sparse_consist
