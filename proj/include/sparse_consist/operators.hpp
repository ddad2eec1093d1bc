#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sparse_consist/feasibility.hpp"

namespace sparse_consist {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Power iteration over-shoots the true norm by this factor so that a step of
// 1/L never exceeds 1/||D^T D||_2.
inline constexpr double kLipschitzSafetyFactor = 1.01;

struct PowerIterationResult {
  double eigenvalue = 0.0;              // Rayleigh quotient at the last iterate
  std::vector<double> rayleigh_history; // one entry per iteration
  int iterations = 0;
};

// Largest eigenvalue of D^T D by power iteration from the normalized all-ones
// vector. Stops when the relative change of the Rayleigh quotient is < tol.
PowerIterationResult power_iteration(const RowMatrix& d, double tol, int max_iter);

// Dense N x M synthesis operator. The matrix is immutable; the Lipschitz
// constant and the (I + rho D^T D) factorizations are computed lazily, once,
// and shared between copies.
class Dictionary {
 public:
  explicit Dictionary(RowMatrix matrix);

  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }
  const RowMatrix& matrix() const { return matrix_; }

  // D * alpha
  Eigen::VectorXd synthesize(const Eigen::VectorXd& alpha) const;
  // D^T * r
  Eigen::VectorXd correlate(const Eigen::VectorXd& r) const;

  // kLipschitzSafetyFactor * ||D^T D||_2, cached after the first call.
  // Throws SolverError for a zero matrix.
  double estimate_lipschitz(double tol = 1e-6, int max_iter = 500) const;
  std::optional<double> cached_lipschitz() const;

  // Cholesky factor of I + rho * D^T D (M x M), cached per rho.
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> regularized_gram_factor(double rho) const;

 private:
  struct Cache {
    std::once_flag lipschitz_once;
    std::atomic<bool> lipschitz_ready{false};
    double lipschitz = 0.0;
    std::mutex factor_mutex;
    std::map<double, std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>>> factors;
  };

  RowMatrix matrix_;
  std::shared_ptr<Cache> cache_;
};

// Copy of dict with every column scaled to unit l2 norm (zero columns kept).
Dictionary normalize_columns(const Dictionary& dict);

// Forward distortion models.
Eigen::VectorXd clip(const Eigen::VectorXd& x, double theta_plus, double theta_minus);

// Bin width 2^(1 - n_bits).
double midriser_step(int n_bits);

// Uniform midriser quantizer on [-1, 1]: delta * (floor(x / delta) + 1/2),
// clamped to the outermost levels +-(1 - delta/2). Never outputs zero.
Eigen::VectorXd quantize_midriser(const Eigen::VectorXd& x, int n_bits);

struct DistortionSpec {
  enum class Kind { None, Clip, QuantizeMidriser };

  Kind kind = Kind::None;
  double theta_plus = 0.0;
  double theta_minus = 0.0;
  int n_bits = 0;

  static DistortionSpec none() { return {}; }
  static DistortionSpec symmetric_clip(double theta) { return clip(theta, -theta); }
  static DistortionSpec clip(double theta_plus, double theta_minus);
  static DistortionSpec quantize(int n_bits);

  // "clip:0.6", "quant:4" or "none".
  static DistortionSpec parse(const std::string& text);

  double delta() const { return midriser_step(n_bits); }
  // theta_plus for clipping, n_bits for quantization, 0 otherwise.
  double parameter() const;
  std::string label() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  IntervalSet feasible_set(const Eigen::VectorXd& y) const;
};

// Dictionary files. Binary layout: "SPCD", u32 version, u32 N, u32 M, then
// N*M little-endian float64 in row-major order. CSV: one row per signal sample.
inline constexpr std::uint32_t kDictionaryFormatVersion = 1;

void write_dictionary_binary(const std::string& path, const Dictionary& dict);
Dictionary read_dictionary_binary(const std::string& path);
Dictionary read_dictionary_csv(const std::string& path);
// Sniffs the magic bytes and dispatches to the binary or CSV reader.
Dictionary read_dictionary(const std::string& path);
void write_dictionary_csv(const std::string& path, const Dictionary& dict);

// Plain-text vectors: numbers separated by whitespace, commas or newlines.
Eigen::VectorXd read_vector(const std::string& path);
void write_vector(const std::string& path, const Eigen::VectorXd& v);

}  // namespace sparse_consist
