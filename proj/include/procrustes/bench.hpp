#pragma once

// Tori benchmark pipeline: sample four tori per (trial, scale), build
// diffusion operators, estimate top-K spectra, and compare the four pairs
// with LES / GLES / learned GLES. Also the Gaussian convergence suite.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "procrustes/error.hpp"
#include "procrustes/geodata.hpp"
#include "procrustes/metric_learn.hpp"
#include "procrustes/metrics.hpp"
#include "procrustes/random.hpp"
#include "procrustes/spectral.hpp"

namespace procrustes::bench {

enum class Method { Les, Gles, GlesLearned };

constexpr std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Les: return "les";
    case Method::Gles: return "gles";
    case Method::GlesLearned: return "gles_learned";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "les") return Method::Les;
  if (s == "gles") return Method::Gles;
  if (s == "gles_learned") return Method::GlesLearned;
  fail(ErrorCode::ConfigError, "unknown method '" + std::string(s) + "'");
}

/// Datasets in a trial; the index is the `dataset` coordinate of the child seed.
enum class Dataset : std::uint64_t { T2 = 0, T2Sc = 1, T3 = 2, T3Sc = 3 };

enum class Pair { T2_T2Sc, T3_T3Sc, T3_T2Sc, T2_T3Sc };

inline constexpr std::array<Pair, 4> kAllPairs = {Pair::T2_T2Sc, Pair::T3_T3Sc, Pair::T3_T2Sc, Pair::T2_T3Sc};

constexpr std::string_view to_string(Pair p) noexcept {
  switch (p) {
    case Pair::T2_T2Sc: return "T2-T2Sc";
    case Pair::T3_T3Sc: return "T3-T3Sc";
    case Pair::T3_T2Sc: return "T3-T2Sc";
    case Pair::T2_T3Sc: return "T2-T3Sc";
  }
  return "?";
}

constexpr std::pair<Dataset, Dataset> members(Pair p) noexcept {
  switch (p) {
    case Pair::T2_T2Sc: return {Dataset::T2, Dataset::T2Sc};
    case Pair::T3_T3Sc: return {Dataset::T3, Dataset::T3Sc};
    case Pair::T3_T2Sc: return {Dataset::T3, Dataset::T2Sc};
    case Pair::T2_T3Sc: return {Dataset::T2, Dataset::T3Sc};
  }
  return {Dataset::T2, Dataset::T2};
}

struct BenchmarkConfig {
  Index N = 200;
  Index K = 50;
  std::vector<double> c_grid{1.0, 0.8, 0.6, 0.4, 0.2};
  std::vector<double> rho_grid{1e1, 1e2, 1e3, 1e4};
  double delta = 1e-8;
  double gamma = 1e-8;
  int trials = 10;
  std::uint64_t seed = 0;
  Method method = Method::Gles;
  std::optional<SketchConfig> nystrom;  // forces the Nyström path when set

  TorusParams t2 = TorusParams::t2(2.0, 0.8);
  TorusParams t3 = TorusParams::t3(2.0, 0.8, 0.4);
  Index exact_max_n = 500;  // exact eigensolver up to this N

  void validate() const {
    if (N < 2) fail(ErrorCode::ConfigError, "N must be at least 2");
    if (K < 1 || K > N) fail(ErrorCode::ConfigError, "K must satisfy 1 <= K <= N");
    if (trials < 1) fail(ErrorCode::ConfigError, "trials must be at least 1");
    if (c_grid.empty()) fail(ErrorCode::ConfigError, "c_grid must not be empty");
    for (double c : c_grid)
      if (!(c > 0.0 && c <= 1.0)) fail(ErrorCode::ConfigError, "c_grid values must lie in (0, 1]");
    if (method != Method::Les) {
      if (rho_grid.empty()) fail(ErrorCode::ConfigError, "rho_grid must not be empty");
      for (double r : rho_grid)
        if (!(r > 0.0)) fail(ErrorCode::ConfigError, "rho_grid values must be positive");
    }
    if (!(delta >= 0.0) || !(gamma >= 0.0)) fail(ErrorCode::ConfigError, "shifts must be nonnegative");
    if (nystrom) {
      if (nystrom->num_random_vectors < K + 2) fail(ErrorCode::ConfigError, "nystrom.num_random_vectors must be >= K + 2");
    }
    t2.validate();
    t3.validate();
    if (t2.intrinsic_dim != 2 || t3.intrinsic_dim != 3) fail(ErrorCode::ConfigError, "torus dimensions");
  }
};

struct TrialResult {
  double c = 1.0;
  double rho = 1.0;
  Pair pair = Pair::T2_T2Sc;
  Method method = Method::Gles;
  double distance = 0.0;
  int trial_index = 0;
  std::int64_t wall_time_ms = 0;
};

inline constexpr std::string_view kCsvHeader = "trial,c,rho,pair,method,N,K,distance,wall_time_ms";

inline std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

inline std::string csv_row(const TrialResult& r, Index n, Index k) {
  std::string s = std::to_string(r.trial_index);
  s += ',' + format_number(r.c, 10);
  s += ',' + format_number(r.rho, 10);
  s += ',';
  s += to_string(r.pair);
  s += ',';
  s += to_string(r.method);
  s += ',' + std::to_string(n) + ',' + std::to_string(k);
  s += ',' + format_number(r.distance, 17);
  s += ',' + std::to_string(r.wall_time_ms);
  return s;
}

/// child seed = hash64(master, trial, dataset, scale index)
inline std::uint64_t child_seed(std::uint64_t master, int trial, Dataset d, std::size_t scale_index) {
  return hash64(master, {static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(d),
                         static_cast<std::uint64_t>(scale_index)});
}

/// Seed of the randomly initialized GLES weights for a run.
inline std::uint64_t weight_seed(std::uint64_t master) { return hash64(master, {0x57454947ULL}); }

/// Top-K spectrum of the diffusion operator of one point cloud.
inline Vector cloud_spectrum(const PointCloud& cloud, const BenchmarkConfig& cfg) {
  const DiffusionOperator op = diffusion_operator(cloud, median_bandwidth(cloud));
  if (!cfg.nystrom && cfg.N <= cfg.exact_max_n) return top_k_spectrum(op.matrix, cfg.K, ExactMethod{});
  SketchConfig sketch = cfg.nystrom.value_or(SketchConfig{std::min<Index>(cfg.N, 2 * cfg.K + 10), cfg.K, 0});
  sketch.rank = cfg.K;
  sketch.num_random_vectors = std::min(sketch.num_random_vectors, cfg.N);
  sketch.seed = hash64(sketch.seed ^ cloud.seed, {0x4E59ULL});
  return top_k_spectrum(op.matrix, cfg.K, NystromMethod{sketch});
}

inline TorusParams dataset_params(const BenchmarkConfig& cfg, Dataset d, double c) {
  switch (d) {
    case Dataset::T2: return cfg.t2;
    case Dataset::T2Sc: return scale_minor_radius(cfg.t2, c);
    case Dataset::T3: return cfg.t3;
    case Dataset::T3Sc: return scale_minor_radius(cfg.t3, c);
  }
  return cfg.t2;
}

inline PointCloud dataset_cloud(const BenchmarkConfig& cfg, int trial, Dataset d, std::size_t scale_index) {
  return sample_torus(dataset_params(cfg, d, cfg.c_grid[scale_index]), cfg.N,
                      child_seed(cfg.seed, trial, d, scale_index));
}

/// Spectra of the four datasets of one (trial, scale) unit, indexed by Dataset.
using TrialSpectra = std::array<Vector, 4>;

inline TrialSpectra trial_spectra(const BenchmarkConfig& cfg, int trial, std::size_t scale_index) {
  TrialSpectra out;
  for (std::uint64_t d = 0; d < 4; ++d)
    out[d] = cloud_spectrum(dataset_cloud(cfg, trial, static_cast<Dataset>(d), scale_index), cfg);
  return out;
}

inline MetricWeight les_weight(Index k) { return MetricWeight::diagonal(Vector::Zero(k), 1.0); }

inline double pair_distance(const TrialSpectra& s, Pair p, const BenchmarkConfig& cfg, const MetricWeight& w) {
  const auto [a, b] = members(p);
  return gles_distance(s[static_cast<std::size_t>(a)], cfg.delta, s[static_cast<std::size_t>(b)], cfg.gamma, w, cfg.K)
      .value;
}

struct RunSummary {
  int units = 0;   // (trial, scale) units attempted
  int failed = 0;  // units skipped after a module error
  std::vector<std::string> failures;

  [[nodiscard]] bool too_many_failures() const { return units > 0 && failed * 10 > units; }
};

using ResultSink = std::function<void(const TrialResult&)>;

namespace detail {

inline std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Streams results in (trial, c, ρ, pair) order. LES runs use ω = 0, ρ = 1
/// and ignore rho_grid; GLES runs use one randomly initialized ω per run.
/// Errors inside a (trial, c) unit skip that unit and are recorded.
inline RunSummary run_tori_benchmark(const BenchmarkConfig& cfg, const ResultSink& sink,
                                     std::optional<WeightParams> weights = std::nullopt) {
  cfg.validate();
  const WeightParams w = weights.value_or(WeightParams::random_init(cfg.K, weight_seed(cfg.seed)));
  if (w.raw.size() != cfg.K) fail(ErrorCode::ConfigError, "weight vector length must equal K");
  const std::vector<double> rhos = cfg.method == Method::Les ? std::vector<double>{1.0} : cfg.rho_grid;

  RunSummary summary;
  for (int t = 0; t < cfg.trials; ++t) {
    for (std::size_t s = 0; s < cfg.c_grid.size(); ++s) {
      ++summary.units;
      const auto start = std::chrono::steady_clock::now();
      std::vector<TrialResult> unit;
      try {
        const TrialSpectra spectra = trial_spectra(cfg, t, s);
        for (double rho : rhos) {
          const MetricWeight mw = cfg.method == Method::Les ? les_weight(cfg.K) : w.metric(rho);
          for (Pair p : kAllPairs)
            unit.push_back({cfg.c_grid[s], rho, p, cfg.method, pair_distance(spectra, p, cfg, mw), t, 0});
        }
      } catch (const Error& e) {
        ++summary.failed;
        summary.failures.push_back("trial " + std::to_string(t) + " c=" + format_number(cfg.c_grid[s], 10) + ": " +
                                   e.what());
        continue;
      }
      const std::int64_t ms = detail::elapsed_ms(start);
      for (TrialResult& r : unit) {
        r.wall_time_ms = ms;
        sink(r);
      }
    }
  }
  return summary;
}

/// Writes the CSV header and streams rows as they are produced.
inline RunSummary write_tori_benchmark_csv(const BenchmarkConfig& cfg, std::ostream& out,
                                           std::optional<WeightParams> weights = std::nullopt) {
  out << kCsvHeader << '\n';
  return run_tori_benchmark(
      cfg, [&](const TrialResult& r) { out << csv_row(r, cfg.N, cfg.K) << '\n'; }, std::move(weights));
}

// ---------------------------------------------------------------------------
// Learned GLES weights

struct LearnedRun {
  WeightParams initial;
  WeightParams learned;
  std::vector<double> loss_trace;
  std::vector<TrialResult> learned_results;  // eval trials, learned weights
  std::vector<TrialResult> initial_results;  // eval trials, initial weights
  RunSummary summary;
};

/// Training spectra at the smallest scale: {T2, T3Sc} share group 0
/// (should be close), T2Sc is group 1 and T3 group 2 (should separate).
inline std::vector<LabeledSpectrum> training_set(const std::vector<TrialSpectra>& units, double shift) {
  std::vector<LabeledSpectrum> out;
  for (const TrialSpectra& s : units) {
    out.push_back({s[static_cast<std::size_t>(Dataset::T2)], shift, 0});
    out.push_back({s[static_cast<std::size_t>(Dataset::T3Sc)], shift, 0});
    out.push_back({s[static_cast<std::size_t>(Dataset::T2Sc)], shift, 1});
    out.push_back({s[static_cast<std::size_t>(Dataset::T3)], shift, 2});
  }
  return out;
}

/// Even trials train, odd trials evaluate. Weights are learned on the
/// training spectra at the smallest c and evaluated on every (eval trial, c).
inline LearnedRun run_learned_benchmark(BenchmarkConfig cfg, LearnConfig learn) {
  cfg.method = Method::GlesLearned;
  cfg.validate();
  learn.k = cfg.K;
  learn.validate();
  if (cfg.trials < 2) fail(ErrorCode::ConfigError, "learned benchmark needs at least two trials");

  const std::size_t smallest = static_cast<std::size_t>(
      std::min_element(cfg.c_grid.begin(), cfg.c_grid.end()) - cfg.c_grid.begin());

  LearnedRun run;
  std::vector<std::vector<std::optional<TrialSpectra>>> cache(
      static_cast<std::size_t>(cfg.trials), std::vector<std::optional<TrialSpectra>>(cfg.c_grid.size()));
  std::vector<std::vector<std::int64_t>> timing(static_cast<std::size_t>(cfg.trials),
                                                std::vector<std::int64_t>(cfg.c_grid.size(), 0));
  for (int t = 0; t < cfg.trials; ++t) {
    for (std::size_t s = 0; s < cfg.c_grid.size(); ++s) {
      ++run.summary.units;
      const auto start = std::chrono::steady_clock::now();
      try {
        cache[static_cast<std::size_t>(t)][s] = trial_spectra(cfg, t, s);
      } catch (const Error& e) {
        ++run.summary.failed;
        run.summary.failures.push_back("trial " + std::to_string(t) + ": " + e.what());
      }
      timing[static_cast<std::size_t>(t)][s] = detail::elapsed_ms(start);
    }
  }

  std::vector<TrialSpectra> train;
  for (int t = 0; t < cfg.trials; t += 2)
    if (const auto& u = cache[static_cast<std::size_t>(t)][smallest]) train.push_back(*u);

  run.initial = WeightParams::random_init(cfg.K, learn.seed);
  const LearnResult learned = learn_weights(learn, training_set(train, cfg.delta), run.initial);
  run.learned = learned.weights;
  run.loss_trace = learned.loss_trace;

  const MetricWeight learned_w = run.learned.metric(learn.rho);
  const MetricWeight initial_w = run.initial.metric(learn.rho);
  for (int t = 1; t < cfg.trials; t += 2) {
    for (std::size_t s = 0; s < cfg.c_grid.size(); ++s) {
      const auto& u = cache[static_cast<std::size_t>(t)][s];
      if (!u) continue;
      for (Pair p : kAllPairs) {
        const std::int64_t ms = timing[static_cast<std::size_t>(t)][s];
        run.learned_results.push_back(
            {cfg.c_grid[s], learn.rho, p, Method::GlesLearned, pair_distance(*u, p, cfg, learned_w), t, ms});
        run.initial_results.push_back(
            {cfg.c_grid[s], learn.rho, p, Method::Gles, pair_distance(*u, p, cfg, initial_w), t, ms});
      }
    }
  }
  return run;
}

/// mean d(T2, T2Sc) − mean d(T2, T3Sc) at scale c.
inline double separation_gap(const std::vector<TrialResult>& rows, double c) {
  double far = 0.0, near = 0.0;
  int nf = 0, nn = 0;
  for (const auto& r : rows) {
    if (r.c != c) continue;
    if (r.pair == Pair::T2_T2Sc) {
      far += r.distance;
      ++nf;
    } else if (r.pair == Pair::T2_T3Sc) {
      near += r.distance;
      ++nn;
    }
  }
  if (nf == 0 || nn == 0) fail(ErrorCode::InsufficientPairs, "no rows at the requested scale");
  return far / nf - near / nn;
}

// ---------------------------------------------------------------------------
// Convergence of Gaussian sequences

struct ConvergenceRow {
  std::int64_t n = 0;
  double d_gbw = 0.0;
  double d_bw = 0.0;
};

/// d_GBW(C + P/n, C) and d_BW(C + P/n, C) over the grid.
inline std::vector<ConvergenceRow> convergence_rows(const SpdMatrix& c, const SpdMatrix& p, const MetricWeight& m,
                                                    const std::vector<std::int64_t>& n_grid) {
  std::vector<ConvergenceRow> rows;
  for (std::int64_t n : n_grid) {
    if (n < 1) fail(ErrorCode::InvalidParams, "sequence index must be positive");
    const SpdMatrix cn = SpdMatrix::symmetrized(c.matrix() + p.matrix() / static_cast<double>(n));
    rows.push_back({n, generalized_bw(cn, c, m).value, bures_wasserstein(cn, c).value});
  }
  return rows;
}

/// Random SPD matrix G Gᵀ/dim + floor·I from a counter stream.
inline SpdMatrix random_spd(Index dim, CounterRng& rng, double floor = 0.1) {
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) g(i, j) = rng.normal();
  return SpdMatrix::symmetrized(g * g.transpose() / static_cast<double>(dim) + floor * Matrix::Identity(dim, dim));
}

/// Fixes random SPD C, M and PSD P from the seed and evaluates the sequence.
inline std::vector<ConvergenceRow> run_convergence_suite(Index dim, const std::vector<std::int64_t>& n_grid,
                                                         std::uint64_t seed) {
  if (dim < 2) fail(ErrorCode::InvalidParams, "convergence suite needs dim >= 2");
  CounterRng rng(seed);
  const SpdMatrix c = random_spd(dim, rng);
  const SpdMatrix p = random_spd(dim, rng, 0.0);
  const SpdMatrix m = random_spd(dim, rng);
  return convergence_rows(c, p, MetricWeight::full(m), n_grid);
}

}  // namespace procrustes::bench
