// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero if
// any criterion fails. argv[1] is the sparse-consist executable (criterion 10).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sparse_consist/experiments.hpp"
#include "sparse_consist/rng.hpp"
#include "sparse_consist/solvers.hpp"

using namespace sparse_consist;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v = body();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool pass = v.pass && in_time;
  if (!pass) ++failures;
  std::printf("criterion %2d: %s  %s (%s; %.1fs of %.0fs)\n", id, pass ? "PASS" : "FAIL", title,
              v.detail.c_str(), secs, budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n, double scale) {
  Eigen::VectorXd v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fraction of instances whose FISTA objective at iteration 150 is within 1%
// of the value at iteration 400.
int count_early_optimum(bool unit_atoms, double* worst) {
  int hits = 0;
  *worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Dictionary dict = gen_dictionary(seed, 256, 512);
    if (unit_atoms) dict = normalize_columns(dict);
    const SparseSignal s = gen_sparse_signal(seed, dict, 16);
    const auto distortion = DistortionSpec::symmetric_clip(0.6);
    const IntervalSet set = distortion.feasible_set(distortion.apply(s.x));
    SolverConfig cfg;
    cfg.rel_tol = 0.0;
    const auto f = solve_fista(dict, set, cfg).trace.objective_per_iter;
    const double gap = (f[149] - f[399]) / f[399];
    *worst = std::max(*worst, gap);
    if (gap <= 0.01) ++hits;
  }
  return hits;
}

}  // namespace

int main(int argc, char** argv) {
  criterion(1, "gradient matches central differences", 5.0, [] {
    Rng rng(1001);
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 100; ++t) {
      const Dictionary d = gen_dictionary(t, 16, 32);
      const IntervalSet box = testing::random_box(t, 16);
      const Eigen::VectorXd a = normal_vector(rng, 32, 0.5);
      const Eigen::VectorXd g = data_gradient(d, a, box);
      const Eigen::VectorXd fd = testing::finite_difference_gradient(d.matrix(), box, a, 1e-5);
      worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-300));
    }
    return Verdict{worst <= 1e-6, fmt("worst relative error %.2e", worst)};
  });

  criterion(2, "projection idempotent and non-expansive", 1.0, [] {
    Rng rng(2002);
    bool idempotent = true;
    double worst_excess = -1e300;
    for (std::uint64_t t = 0; t < 1000; ++t) {
      const IntervalSet box = testing::random_box(t, 16);
      const Eigen::VectorXd a = normal_vector(rng, 16, 2.0);
      const Eigen::VectorXd b = normal_vector(rng, 16, 2.0);
      const Eigen::VectorXd pa = box.project(a);
      idempotent = idempotent && (box.project(pa).array() == pa.array()).all();
      worst_excess = std::max(worst_excess, (pa - box.project(b)).norm() - (a - b).norm());
    }
    return Verdict{idempotent && worst_excess <= 1e-12,
                   std::string(idempotent ? "idempotent" : "NOT idempotent") +
                       fmt(", worst ||Pa-Pb|| - ||a-b|| = %.2e", worst_excess)};
  });

  criterion(3, "ISTA descent on 20 instances at 256x512", 30.0, [] {
    int monotone = 0;
    double worst_rise = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto distortion = seed % 2 == 0 ? DistortionSpec::symmetric_clip(0.2 + 0.03 * seed)
                                            : DistortionSpec::quantize(2 + static_cast<int>(seed % 5));
      const auto inst = testing::make_instance(seed, 256, 512, 16, distortion);
      SolverConfig cfg;
      cfg.rel_tol = 0.0;
      const auto f = solve_ista(inst.dict, inst.set, cfg).trace.objective_per_iter;
      bool ok = f.size() == 400;
      for (std::size_t k = 1; k < f.size(); ++k) {
        worst_rise = std::max(worst_rise, f[k] - f[k - 1]);
        ok = ok && f[k] <= f[k - 1] + 1e-12;
      }
      monotone += ok;
    }
    return Verdict{monotone == 20, fmt("%.0f/20 monotone over 400 iterations, largest rise %.2e",
                                       monotone, worst_rise)};
  });

  criterion(4, "ISTA/FISTA agree on 20 tiny instances", 10.0, [] {
    double worst_gap = 0.0;
    double worst_kkt = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto distortion = seed % 2 == 0 ? DistortionSpec::symmetric_clip(0.5)
                                            : DistortionSpec::quantize(3);
      const auto inst = testing::make_instance(seed, 4, 6, 2, distortion);
      SolverConfig cfg;
      cfg.rel_tol = 1e-10;
      cfg.max_iter = 100000;
      const auto ista = solve_ista(inst.dict, inst.set, cfg);
      const auto fista = solve_fista(inst.dict, inst.set, cfg);
      worst_gap = std::max(worst_gap, std::abs(ista.trace.objective_per_iter.back() -
                                               fista.trace.objective_per_iter.back()));
      worst_kkt = std::max({worst_kkt, ista.trace.kkt_residual_final, fista.trace.kkt_residual_final});
    }
    return Verdict{worst_gap <= 1e-6 && worst_kkt < 1e-5,
                   fmt("worst objective gap %.2e, worst kkt residual %.2e", worst_gap, worst_kkt)};
  });

  criterion(5, "singleton set reduces to BPDN bit for bit", 30.0, [] {
    int identical = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dictionary d = gen_dictionary(seed, 64, 128);
      const SparseSignal s = gen_sparse_signal(seed, d, 8);
      const double mu = 1.0 / d.estimate_lipschitz();
      SolverConfig cfg;
      cfg.step = mu;
      std::vector<Eigen::VectorXd> iterates;
      cfg.on_iterate = [&](int, const Eigen::VectorXd& a) { iterates.push_back(a); };
      solve_fista(d, IntervalSet::singleton(s.x), cfg);
      const auto ref = testing::bpdn_fista_reference(d.matrix(), s.x, cfg.lambda, mu, cfg.max_iter,
                                                     cfg.rel_tol);
      bool same = iterates.size() == ref.iterates.size();
      for (std::size_t k = 0; same && k < iterates.size(); ++k) {
        same = (iterates[k].array() == ref.iterates[k].array()).all();
      }
      identical += same;
    }
    return Verdict{identical == 5, fmt("%.0f/5 seeds identical", identical)};
  });

  criterion(6, "ADMM baseline matches LP oracle", 60.0, [] {
    double worst_gap = 0.0;
    bool feasible = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto distortion = seed % 2 == 0 ? DistortionSpec::symmetric_clip(0.5)
                                            : DistortionSpec::quantize(2);
      const auto inst = testing::make_instance(seed, 4, 6, 2, distortion);
      const double oracle = testing::brute_force_basis_pursuit_box(inst.dict.matrix(), inst.set);
      AdmmConfig cfg;
      cfg.inner_iters = 500;
      cfg.inner_tol = 1e-12;
      cfg.max_iter = 20000;
      cfg.abs_tol = 1e-10;
      cfg.rel_tol = 1e-10;
      const auto r = solve_admm_constrained(inst.dict, inst.set, cfg);
      worst_gap = std::max(worst_gap, std::abs(r.alpha.lpNorm<1>() - oracle));
      feasible = feasible && inst.set.contains(inst.dict.synthesize(r.alpha), 1e-4);
    }
    return Verdict{worst_gap <= 1e-4 && feasible,
                   fmt("worst |l1 - oracle| %.2e, ", worst_gap) +
                       (feasible ? "all feasible" : "INFEASIBLE output")};
  });

  criterion(7, "time ordering FISTA < ISTA < ADMM, ADMM/FISTA >= 20", 900.0, [] {
    ExperimentSpec base;
    base.trials = 10;
    const auto rows = run_timing_table(
        base, {DistortionSpec::symmetric_clip(0.2), DistortionSpec::symmetric_clip(0.8)},
        {DistortionSpec::quantize(2), DistortionSpec::quantize(6)});
    bool ok = true;
    std::string detail;
    for (const char* task : {"declipping", "dequantization"}) {
      double t[3] = {0, 0, 0};
      for (const auto& r : rows) {
        if (r.task == task) t[static_cast<int>(r.solver)] = r.mean_wall_time_s;
      }
      const double ista = t[0], fista = t[1], admm = t[2];
      ok = ok && fista < ista && ista < admm && admm / fista >= 20.0;
      detail += std::string(detail.empty() ? "" : "; ") + task +
                fmt(" FISTA %.3gs ISTA %.3gs ADMM %.3gs", fista, ista, admm) +
                fmt(" ratio %.0f", admm / fista);
    }
    return Verdict{ok, detail};
  });

  criterion(8, "FISTA near optimum by iteration 150 (theta=0.6)", 120.0, [] {
    double worst = 0.0;
    const int hits = count_early_optimum(false, &worst);
    return Verdict{hits >= 15, fmt("%.0f/20 within 1%%, worst gap %.1f%%", hits, 100.0 * worst)};
  });
  {
    // Not a criterion: the same check with unit-norm atoms, for the record.
    double worst = 0.0;
    const int hits = count_early_optimum(true, &worst);
    std::printf("    info    : with unit-norm atoms %d/20 within 1%%, worst gap %.2f%%\n", hits,
                100.0 * worst);
  }

  criterion(9, "SNR curve shape over default grids", 600.0, [] {
    ExperimentSpec spec;
    spec.trials = 25;
    spec.solvers = {SolverKind::Ista, SolverKind::Fista};
    std::vector<std::string> problems;
    for (const bool clipping : {true, false}) {
      spec.distortion_grid = clipping ? default_clipping_grid() : default_quantization_grid();
      const auto r = run_experiment(spec);
      const std::size_t n = spec.distortion_grid.size();
      for (std::size_t g = 0; g < n; ++g) {
        const double fista = r.at(g, SolverKind::Fista).mean_snr_db;
        const double ista = r.at(g, SolverKind::Ista).mean_snr_db;
        const auto label = spec.distortion_grid[g].label();
        if (!(fista >= ista)) problems.push_back(label + " FISTA<ISTA");
        if (!(fista >= r.input_snr_db[g] + 0.5)) problems.push_back(label + " FISTA<input+0.5");
        // Grids ascend in theta / bits, so SNR should not drop going up the grid.
        if (g > 0 && fista < r.at(g - 1, SolverKind::Fista).mean_snr_db - 1.0) {
          problems.push_back(label + " not monotone");
        }
      }
    }
    std::string detail = problems.empty() ? "all checks hold" : "";
    for (const auto& p : problems) detail += (detail.empty() ? "" : ", ") + p;
    return Verdict{problems.empty(), detail};
  });

  criterion(10, "declip-bench output is byte-identical across runs", 900.0, [&] {
    if (argc < 2) return Verdict{false, "no executable path given"};
    const auto dir = std::filesystem::temp_directory_path() / "sc_acceptance";
    std::filesystem::create_directories(dir);
    std::string files[2];
    for (int i = 0; i < 2; ++i) {
      const auto out = dir / ("run" + std::to_string(i) + ".csv");
      const std::string cmd = std::string("\"") + argv[1] +
                              "\" declip-bench --trials 5 --seed 7 --out \"" + out.string() + "\"";
      if (std::system(cmd.c_str()) != 0) return Verdict{false, "command failed: " + cmd};
      files[i] = slurp(out);
    }
    std::filesystem::remove_all(dir);
    const bool same = !files[0].empty() && files[0] == files[1];
    return Verdict{same, fmt("%.0f bytes, ", static_cast<double>(files[0].size())) +
                             (same ? "identical" : "DIFFERENT")};
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
