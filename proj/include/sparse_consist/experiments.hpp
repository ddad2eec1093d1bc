#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "sparse_consist/operators.hpp"
#include "sparse_consist/solvers.hpp"

namespace sparse_consist {

enum class SolverKind { Ista, Fista, Admm };

std::string to_string(SolverKind kind);  // "ISTA", "FISTA", "ADMM"
SolverKind parse_solver(const std::string& name);  // case-insensitive

// i.i.d. N(0,1) entries, no column normalization.
Dictionary gen_dictionary(std::uint64_t seed, Eigen::Index n, Eigen::Index m);

struct SparseSignal {
  Eigen::VectorXd alpha;
  Eigen::VectorXd x;
};

// k_sparse uniformly drawn atoms with N(0,1) weights; alpha and x = D alpha
// are rescaled together so that ||x||_inf = 1.
SparseSignal gen_sparse_signal(std::uint64_t seed, const Dictionary& dict, Eigen::Index k_sparse);

inline constexpr double kSnrCapDb = 300.0;

// 20 log10(||reference|| / ||reference - estimate||), capped at kSnrCapDb.
double snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate);

struct ExperimentSpec {
  Eigen::Index n = 256;
  Eigen::Index m = 512;
  Eigen::Index k_sparse = 16;
  int trials = 100;
  std::uint64_t seed = 0;
  std::vector<DistortionSpec> distortion_grid;
  std::vector<SolverKind> solvers{SolverKind::Ista, SolverKind::Fista, SolverKind::Admm};
  SolverConfig solver_config;
  AdmmConfig admm_config;
  bool shared_dictionary = false;  // one dictionary for all trials
  bool normalize_atoms = false;    // rescale dictionary columns to unit norm
  int jobs = 1;

  void validate() const;
};

std::vector<DistortionSpec> default_clipping_grid();      // theta in {0.2, 0.4, 0.6, 0.8}
std::vector<DistortionSpec> default_quantization_grid();  // n_bits in {2, ..., 6}

struct PointResult {
  DistortionSpec distortion;
  SolverKind solver = SolverKind::Fista;
  double mean_snr_db = 0.0;
  double std_snr_db = 0.0;
  double mean_iterations = 0.0;
  double mean_wall_time_s = 0.0;
  int failures = 0;  // trials whose solver threw; excluded from the means
};

struct AggregateResult {
  std::vector<PointResult> per_point;  // grid-major, solvers in spec order
  std::vector<double> input_snr_db;    // one per grid point
  int total_failures = 0;

  const PointResult& at(std::size_t grid_index, SolverKind solver) const;
};

AggregateResult run_experiment(const ExperimentSpec& spec);

struct TimingRow {
  std::string task;  // "declipping" or "dequantization"
  SolverKind solver = SolverKind::Fista;
  double mean_wall_time_s = 0.0;
};

// Runs a declipping sweep and a dequantization sweep with the same base spec
// and reports mean solver wall time per task.
std::vector<TimingRow> run_timing_table(const ExperimentSpec& base,
                                        const std::vector<DistortionSpec>& clipping_grid,
                                        const std::vector<DistortionSpec>& quantization_grid);

// CSV header: task,solver,distortion_param,mean_snr_db,std_snr_db,mean_iters,mean_time_s
// Times are written only when include_time is set ("NA" otherwise) so that
// repeated runs produce identical bytes.
std::string results_csv(const std::string& task, const AggregateResult& result, bool include_time);

// One row per task, one column per solver (ADMM, ISTA, FISTA order).
std::string timing_csv(const std::vector<TimingRow>& rows);

// Blocks of "x mean_snr_db" lines, one block per solver plus the unprocessed
// input, separated by blank lines and labelled with "# name" comments.
std::string plot_data(const AggregateResult& result);

}  // namespace sparse_consist
