#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "sparse_consist/errors.hpp"
#include "sparse_consist/experiments.hpp"

namespace sparse_consist::cli {

namespace {

constexpr const char* kSeedEnv = "SPARSE_CONSIST_SEED";

// Written next to the target and renamed, so readers never see a partial file.
void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(path + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw InputError(path + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError(path + ": rename failed: " + ec.message());
  }
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<DistortionSpec> parse_grid(const std::string& text, bool clipping) {
  std::vector<DistortionSpec> grid;
  for (const auto& item : split_commas(text)) {
    grid.push_back(DistortionSpec::parse((clipping ? "clip:" : "quant:") + item));
  }
  if (grid.empty()) throw InputError("empty grid '" + text + "'");
  return grid;
}

std::vector<SolverKind> parse_solvers(const std::string& text) {
  std::vector<SolverKind> solvers;
  for (const auto& item : split_commas(text)) solvers.push_back(parse_solver(item));
  if (solvers.empty()) throw InputError("no solvers given");
  return solvers;
}

struct SolveOptions {
  std::string dict_path;
  std::string signal_path;
  std::string distortion = "none";
  std::string solver = "fista";
  double lambda = 1e-2;
  int max_iter = 400;
  double rel_tol = 1e-6;
  std::string out_path;
  bool strict = false;
};

struct BenchOptions {
  long n = 256;
  long m = 512;
  long k_sparse = 16;
  int trials = 100;
  std::uint64_t seed = 0;
  std::string grid;
  std::string declip_grid = "0.2,0.4,0.6,0.8";
  std::string dequant_grid = "2,3,4,5,6";
  std::string solvers = "ista,fista,admm";
  double lambda = 1e-2;
  int max_iter = 400;
  double rel_tol = 1e-6;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string out_path;
  std::string plot_path;
  bool shared_dictionary = false;
  bool normalize_atoms = false;
  bool record_time = false;
};

struct GenOptions {
  long n = 256;
  long m = 512;
  long k_sparse = 16;
  std::uint64_t seed = 0;
  std::string distortion = "clip:0.6";
  std::string out_dir;
};

void add_bench_flags(CLI::App* cmd, BenchOptions& o, bool timing) {
  cmd->add_option("--n", o.n, "Signal dimension N")->check(CLI::PositiveNumber);
  cmd->add_option("--m", o.m, "Number of atoms M")->check(CLI::PositiveNumber);
  cmd->add_option("--k", o.k_sparse, "Non-zeros per sparse vector")->check(CLI::PositiveNumber);
  cmd->add_option("--trials", o.trials, "Sparse vectors per grid point")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Base seed (overridden by $SPARSE_CONSIST_SEED)");
  if (timing) {
    cmd->add_option("--declip-grid", o.declip_grid, "Clipping levels theta, comma separated");
    cmd->add_option("--dequant-grid", o.dequant_grid, "Quantizer bit depths, comma separated");
  } else {
    cmd->add_option("--grid", o.grid,
                    "Comma list of clip levels or bit depths (default 0.2,0.4,0.6,0.8 for "
                    "declip-bench, 2,3,4,5,6 for dequant-bench)");
  }
  cmd->add_option("--solvers", o.solvers, "Comma list drawn from ista,fista,admm");
  cmd->add_option("--lambda", o.lambda, "Sparsity weight")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", o.max_iter, "Iteration cap for every solver")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rel-tol", o.rel_tol, "Relative objective change for ISTA/FISTA convergence")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--jobs", o.jobs, "Worker threads (default: hardware threads)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out_path, "Output CSV path (stdout when omitted)");
  cmd->add_flag("--normalize-atoms", o.normalize_atoms,
                "Rescale every dictionary column to unit l2 norm before drawing signals");
  if (!timing) {
    cmd->add_option("--plot-data", o.plot_path, "Write per-solver 'x mean_snr_db' blocks here");
    cmd->add_flag("--shared-dictionary", o.shared_dictionary,
                  "Use one dictionary for all trials instead of one per trial");
    cmd->add_flag("--record-time", o.record_time,
                  "Fill the mean_time_s column (makes the CSV run-dependent)");
  } else {
    cmd->add_flag("--shared-dictionary", o.shared_dictionary,
                  "Use one dictionary for all trials instead of one per trial");
  }
}

ExperimentSpec make_spec(const BenchOptions& o) {
  ExperimentSpec spec;
  spec.n = o.n;
  spec.m = o.m;
  spec.k_sparse = o.k_sparse;
  spec.trials = o.trials;
  spec.seed = o.seed;
  spec.solvers = parse_solvers(o.solvers);
  spec.solver_config.lambda = o.lambda;
  spec.solver_config.max_iter = o.max_iter;
  spec.solver_config.rel_tol = o.rel_tol;
  spec.admm_config.max_iter = o.max_iter;
  spec.shared_dictionary = o.shared_dictionary;
  spec.normalize_atoms = o.normalize_atoms;
  spec.jobs = o.jobs;
  return spec;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    write_atomic(path, content);
  }
}

int cmd_solve(const SolveOptions& o, std::ostream& err) {
  const Dictionary dict = read_dictionary(o.dict_path);
  const Eigen::VectorXd y = read_vector(o.signal_path);
  if (y.size() != dict.rows()) {
    throw DimensionError("signal has " + std::to_string(y.size()) + " samples but the dictionary has " +
                         std::to_string(dict.rows()) + " rows");
  }
  const DistortionSpec distortion = DistortionSpec::parse(o.distortion);
  const IntervalSet set = distortion.feasible_set(y);
  const SolverKind kind = parse_solver(o.solver);

  SolveResult result;
  if (kind == SolverKind::Admm) {
    AdmmConfig cfg;
    cfg.max_iter = o.max_iter;
    result = solve_admm_constrained(dict, set, cfg);
  } else {
    SolverConfig cfg;
    cfg.lambda = o.lambda;
    cfg.max_iter = o.max_iter;
    cfg.rel_tol = o.rel_tol;
    result = kind == SolverKind::Ista ? solve_ista(dict, set, cfg) : solve_fista(dict, set, cfg);
  }

  nlohmann::json doc = to_json(result);
  const Eigen::VectorXd x_hat = dict.synthesize(result.alpha);
  doc["x_hat"] = std::vector<double>(x_hat.begin(), x_hat.end());
  doc["solver"] = to_string(kind);
  doc["distortion"] = distortion.label();
  write_atomic(o.out_path, doc.dump(2) + "\n");

  if (o.strict && !result.trace.converged) {
    err << "solver did not converge within " << o.max_iter << " iterations\n";
    return kSolverFailure;
  }
  return kOk;
}

int cmd_bench(const BenchOptions& o, bool clipping, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = make_spec(o);
  if (o.grid.empty()) {
    spec.distortion_grid = clipping ? default_clipping_grid() : default_quantization_grid();
  } else {
    spec.distortion_grid = parse_grid(o.grid, clipping);
  }
  const AggregateResult result = run_experiment(spec);
  if (result.total_failures > 0) {
    err << "warning: " << result.total_failures << " solver runs failed and were excluded\n";
  }
  emit(o.out_path, results_csv(clipping ? "declipping" : "dequantization", result, o.record_time),
       out);
  if (!o.plot_path.empty()) write_atomic(o.plot_path, plot_data(result));
  return kOk;
}

int cmd_timing(const BenchOptions& o, std::ostream& out) {
  const ExperimentSpec spec = make_spec(o);
  const auto rows =
      run_timing_table(spec, parse_grid(o.declip_grid, true), parse_grid(o.dequant_grid, false));
  emit(o.out_path, timing_csv(rows), out);
  return kOk;
}

int cmd_gen(const GenOptions& o, std::ostream& out) {
  const DistortionSpec distortion = DistortionSpec::parse(o.distortion);
  const Dictionary dict = gen_dictionary(o.seed, o.n, o.m);
  const SparseSignal signal = gen_sparse_signal(o.seed, dict, o.k_sparse);
  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  write_dictionary_binary((dir / "dictionary.spcd").string(), dict);
  write_vector((dir / "alpha.txt").string(), signal.alpha);
  write_vector((dir / "x.txt").string(), signal.x);
  write_vector((dir / "y.txt").string(), distortion.apply(signal.x));
  out << "wrote " << (dir / "dictionary.spcd").string() << ", alpha.txt, x.txt, y.txt ("
      << distortion.label() << ")\n";
  return kOk;
}

void apply_seed_override(std::uint64_t& seed) {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (*end != '\0') throw InputError(std::string(kSeedEnv) + " is not an unsigned integer");
  seed = value;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse recovery from clipped or quantized measurements"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Recover one signal from a distorted observation");
  solve_cmd->add_option("--dict", solve.dict_path, "Dictionary file (SPCD binary or CSV)")
      ->required();
  solve_cmd->add_option("--signal", solve.signal_path, "Observed signal y, one sample per line")
      ->required();
  solve_cmd->add_option("--distortion", solve.distortion, "clip:THETA, quant:BITS or none");
  solve_cmd->add_option("--solver", solve.solver, "ista, fista or admm");
  solve_cmd->add_option("--lambda", solve.lambda, "Sparsity weight")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iter", solve.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--rel-tol", solve.rel_tol, "Relative objective change for convergence")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--out", solve.out_path, "Result JSON path")->required();
  solve_cmd->add_flag("--strict", solve.strict, "Exit with 1 if the solver did not converge");

  BenchOptions declip;
  auto* declip_cmd = app.add_subcommand("declip-bench", "Declipping sweep over clip levels");
  add_bench_flags(declip_cmd, declip, false);

  BenchOptions dequant;
  auto* dequant_cmd = app.add_subcommand("dequant-bench", "Dequantization sweep over bit depths");
  add_bench_flags(dequant_cmd, dequant, false);

  BenchOptions timing;
  auto* timing_cmd = app.add_subcommand("timing", "Mean solver time per task (ADMM, ISTA, FISTA)");
  add_bench_flags(timing_cmd, timing, true);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a random dictionary and distorted sparse signal");
  gen_cmd->add_option("--n", gen.n, "Signal dimension N")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--m", gen.m, "Number of atoms M")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--k", gen.k_sparse, "Non-zeros in alpha")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Seed (overridden by $SPARSE_CONSIST_SEED)");
  gen_cmd->add_option("--distortion", gen.distortion, "clip:THETA, quant:BITS or none");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve, err);
    if (*declip_cmd) {
      apply_seed_override(declip.seed);
      return cmd_bench(declip, true, out, err);
    }
    if (*dequant_cmd) {
      apply_seed_override(dequant.seed);
      return cmd_bench(dequant, false, out, err);
    }
    if (*timing_cmd) {
      apply_seed_override(timing.seed);
      return cmd_timing(timing, out);
    }
    if (*gen_cmd) {
      apply_seed_override(gen.seed);
      return cmd_gen(gen, out);
    }
  } catch (const DimensionError& e) {
    err << "dimension mismatch: " << e.what() << '\n';
    return kDimensionError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace sparse_consist::cli
