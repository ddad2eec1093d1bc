#include "sparse_consist/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "sparse_consist/errors.hpp"
#include "sparse_consist/rng.hpp"

namespace sparse_consist {

namespace {

constexpr std::uint64_t kDictionaryStream = 1;
constexpr std::uint64_t kSignalStream = 2;

struct SolverRun {
  bool ok = false;
  double snr_db = 0.0;
  double iterations = 0.0;
  double seconds = 0.0;
};

struct TrialOutcome {
  std::vector<double> input_snr;             // [grid]
  std::vector<std::vector<SolverRun>> runs;  // [grid][solver]
};

SolveResult run_solver(SolverKind kind, const Dictionary& dict, const IntervalSet& set,
                       const ExperimentSpec& spec) {
  switch (kind) {
    case SolverKind::Ista:
      return solve_ista(dict, set, spec.solver_config);
    case SolverKind::Fista:
      return solve_fista(dict, set, spec.solver_config);
    case SolverKind::Admm:
      return solve_admm_constrained(dict, set, spec.admm_config);
  }
  throw InputError("unknown solver");
}

Dictionary make_dictionary(const ExperimentSpec& spec, std::uint64_t seed) {
  Dictionary dict = gen_dictionary(seed, spec.n, spec.m);
  return spec.normalize_atoms ? normalize_columns(dict) : dict;
}

TrialOutcome run_trial(const ExperimentSpec& spec, int trial, const Dictionary* shared) {
  const std::uint64_t trial_seed = spec.seed + static_cast<std::uint64_t>(trial);
  const Dictionary dict = shared ? *shared : make_dictionary(spec, trial_seed);
  const SparseSignal signal = gen_sparse_signal(trial_seed, dict, spec.k_sparse);

  // Operator precomputations are shared by every run on this dictionary and
  // are kept out of the per-solver timings.
  dict.estimate_lipschitz();
  if (std::find(spec.solvers.begin(), spec.solvers.end(), SolverKind::Admm) != spec.solvers.end()) {
    dict.regularized_gram_factor(spec.admm_config.rho_inner);
  }

  TrialOutcome outcome;
  for (const auto& distortion : spec.distortion_grid) {
    const Eigen::VectorXd y = distortion.apply(signal.x);
    const IntervalSet set = distortion.feasible_set(y);
    outcome.input_snr.push_back(snr_db(signal.x, y));
    auto& runs = outcome.runs.emplace_back();
    for (const SolverKind kind : spec.solvers) {
      SolverRun run;
      try {
        const SolveResult result = run_solver(kind, dict, set, spec);
        run.ok = true;
        run.snr_db = snr_db(signal.x, dict.synthesize(result.alpha));
        run.iterations = result.trace.iterations_run;
        run.seconds = result.trace.wall_time_seconds;
      } catch (const std::exception&) {
        run.ok = false;
      }
      runs.push_back(run);
    }
  }
  return outcome;
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string format_parameter(const DistortionSpec& d) {
  if (d.kind == DistortionSpec::Kind::QuantizeMidriser) return std::to_string(d.n_bits);
  return format_double("%g", d.parameter());
}

}  // namespace

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Ista:
      return "ISTA";
    case SolverKind::Fista:
      return "FISTA";
    case SolverKind::Admm:
      return "ADMM";
  }
  return "?";
}

SolverKind parse_solver(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ista") return SolverKind::Ista;
  if (lower == "fista") return SolverKind::Fista;
  if (lower == "admm") return SolverKind::Admm;
  throw InputError("unknown solver '" + name + "' (expected ista, fista or admm)");
}

Dictionary gen_dictionary(std::uint64_t seed, Eigen::Index n, Eigen::Index m) {
  if (n < 1 || m < 1) throw InputError("gen_dictionary: n and m must be >= 1");
  Rng rng(seed, kDictionaryStream);
  RowMatrix d(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) d(i, j) = rng.normal();
  }
  return Dictionary(std::move(d));
}

SparseSignal gen_sparse_signal(std::uint64_t seed, const Dictionary& dict, Eigen::Index k_sparse) {
  if (k_sparse < 1 || k_sparse > dict.cols()) {
    throw InputError("gen_sparse_signal: need 1 <= k_sparse <= M");
  }
  Rng rng(seed, kSignalStream);
  for (;;) {
    SparseSignal s;
    s.alpha = Eigen::VectorXd::Zero(dict.cols());
    const auto support = rng.sample_without_replacement(static_cast<std::size_t>(dict.cols()),
                                                        static_cast<std::size_t>(k_sparse));
    for (const std::size_t idx : support) {
      double value = rng.normal();
      while (value == 0.0) value = rng.normal();
      s.alpha[static_cast<Eigen::Index>(idx)] = value;
    }
    s.x = dict.synthesize(s.alpha);
    const double peak = s.x.lpNorm<Eigen::Infinity>();
    if (!(peak > 0.0)) continue;
    s.alpha /= peak;
    s.x /= peak;
    return s;
  }
}

double snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate) {
  require_same_size(reference.size(), estimate.size(), "snr_db");
  const double signal = reference.norm();
  if (!(signal > 0.0)) throw InputError("snr_db: zero reference");
  const double error = (reference - estimate).norm();
  if (error == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 20.0 * std::log10(signal / error));
}

void ExperimentSpec::validate() const {
  if (n < 1 || m < 1) throw InputError("experiment: n and m must be >= 1");
  if (k_sparse < 1 || k_sparse > m) throw InputError("experiment: need 1 <= k_sparse <= m");
  if (trials < 1) throw InputError("experiment: trials must be >= 1");
  if (distortion_grid.empty()) throw InputError("experiment: empty distortion grid");
  if (solvers.empty()) throw InputError("experiment: no solvers selected");
  if (jobs < 1) throw InputError("experiment: jobs must be >= 1");
  if (!(solver_config.lambda > 0.0)) throw InputError("experiment: lambda must be positive");
  if (solver_config.max_iter < 1) throw InputError("experiment: max_iter must be >= 1");
}

std::vector<DistortionSpec> default_clipping_grid() {
  return {DistortionSpec::symmetric_clip(0.2), DistortionSpec::symmetric_clip(0.4),
          DistortionSpec::symmetric_clip(0.6), DistortionSpec::symmetric_clip(0.8)};
}

std::vector<DistortionSpec> default_quantization_grid() {
  std::vector<DistortionSpec> grid;
  for (int bits = 2; bits <= 6; ++bits) grid.push_back(DistortionSpec::quantize(bits));
  return grid;
}

const PointResult& AggregateResult::at(std::size_t grid_index, SolverKind solver) const {
  for (const auto& p : per_point) {
    if (p.solver != solver) continue;
    if (grid_index == 0) return p;
    --grid_index;
  }
  throw InputError("AggregateResult::at: no such point");
}

AggregateResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::optional<Dictionary> shared;
  if (spec.shared_dictionary) shared.emplace(make_dictionary(spec, spec.seed));

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(spec.trials));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int t = next++; t < spec.trials; t = next++) {
      try {
        outcomes[static_cast<std::size_t>(t)] = run_trial(spec, t, shared ? &*shared : nullptr);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int workers = std::min(spec.jobs, spec.trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  // Reduction in trial order so the thread count never changes the result.
  AggregateResult result;
  for (std::size_t g = 0; g < spec.distortion_grid.size(); ++g) {
    double input_sum = 0.0;
    for (const auto& o : outcomes) input_sum += o.input_snr[g];
    result.input_snr_db.push_back(input_sum / spec.trials);

    for (std::size_t s = 0; s < spec.solvers.size(); ++s) {
      PointResult point;
      point.distortion = spec.distortion_grid[g];
      point.solver = spec.solvers[s];
      std::vector<double> snrs;
      double iterations = 0.0;
      double seconds = 0.0;
      for (const auto& o : outcomes) {
        const SolverRun& run = o.runs[g][s];
        if (!run.ok) {
          ++point.failures;
          continue;
        }
        snrs.push_back(run.snr_db);
        iterations += run.iterations;
        seconds += run.seconds;
      }
      const auto count = static_cast<double>(snrs.size());
      if (!snrs.empty()) {
        double sum = 0.0;
        for (const double v : snrs) sum += v;
        point.mean_snr_db = sum / count;
        double sq = 0.0;
        for (const double v : snrs) sq += (v - point.mean_snr_db) * (v - point.mean_snr_db);
        point.std_snr_db = snrs.size() > 1 ? std::sqrt(sq / (count - 1.0)) : 0.0;
        point.mean_iterations = iterations / count;
        point.mean_wall_time_s = seconds / count;
      } else {
        point.mean_snr_db = std::nan("");
        point.std_snr_db = std::nan("");
      }
      result.total_failures += point.failures;
      result.per_point.push_back(point);
    }
  }
  return result;
}

std::vector<TimingRow> run_timing_table(const ExperimentSpec& base,
                                        const std::vector<DistortionSpec>& clipping_grid,
                                        const std::vector<DistortionSpec>& quantization_grid) {
  std::vector<TimingRow> rows;
  const std::pair<const char*, const std::vector<DistortionSpec>*> tasks[] = {
      {"declipping", &clipping_grid}, {"dequantization", &quantization_grid}};
  for (const auto& [task, grid] : tasks) {
    ExperimentSpec spec = base;
    spec.distortion_grid = *grid;
    const AggregateResult result = run_experiment(spec);
    for (const SolverKind solver : spec.solvers) {
      double total = 0.0;
      double runs = 0.0;
      for (const auto& p : result.per_point) {
        if (p.solver != solver) continue;
        const double ok = spec.trials - p.failures;
        total += p.mean_wall_time_s * ok;
        runs += ok;
      }
      rows.push_back({task, solver, runs > 0.0 ? total / runs : std::nan("")});
    }
  }
  return rows;
}

std::string results_csv(const std::string& task, const AggregateResult& result, bool include_time) {
  std::ostringstream out;
  out << "task,solver,distortion_param,mean_snr_db,std_snr_db,mean_iters,mean_time_s\n";
  for (const auto& p : result.per_point) {
    out << task << ',' << to_string(p.solver) << ',' << format_parameter(p.distortion) << ','
        << format_double("%.6f", p.mean_snr_db) << ',' << format_double("%.6f", p.std_snr_db) << ','
        << format_double("%.2f", p.mean_iterations) << ','
        << (include_time ? format_double("%.6g", p.mean_wall_time_s) : std::string("NA")) << '\n';
  }
  return out.str();
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
  const SolverKind order[] = {SolverKind::Admm, SolverKind::Ista, SolverKind::Fista};
  std::vector<SolverKind> columns;
  std::vector<std::string> tasks;
  for (const SolverKind s : order) {
    if (std::any_of(rows.begin(), rows.end(), [&](const TimingRow& r) { return r.solver == s; })) {
      columns.push_back(s);
    }
  }
  for (const auto& r : rows) {
    if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end()) tasks.push_back(r.task);
  }
  std::ostringstream out;
  out << "task";
  for (const SolverKind s : columns) out << ',' << to_string(s);
  out << '\n';
  for (const auto& task : tasks) {
    out << task;
    for (const SolverKind s : columns) {
      out << ',';
      for (const auto& r : rows) {
        if (r.task == task && r.solver == s) out << format_double("%.6g", r.mean_wall_time_s);
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string plot_data(const AggregateResult& result) {
  std::ostringstream out;
  std::vector<SolverKind> solvers;
  std::vector<DistortionSpec> grid;
  for (const auto& p : result.per_point) {
    if (std::find(solvers.begin(), solvers.end(), p.solver) == solvers.end()) {
      solvers.push_back(p.solver);
    }
  }
  for (const auto& p : result.per_point) {
    if (p.solver == solvers.front()) grid.push_back(p.distortion);
  }
  out << "# input\n";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    out << format_parameter(grid[g]) << ' ' << format_double("%.6f", result.input_snr_db[g]) << '\n';
  }
  for (const SolverKind s : solvers) {
    out << "\n\n# " << to_string(s) << '\n';
    for (std::size_t g = 0; g < grid.size(); ++g) {
      out << format_parameter(grid[g]) << ' ' << format_double("%.6f", result.at(g, s).mean_snr_db)
          << '\n';
    }
  }
  return out.str();
}

}  // namespace sparse_consist
