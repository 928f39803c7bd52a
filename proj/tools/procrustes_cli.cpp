// procrustes: command-line driver for the SPD distances and the tori benchmark.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "procrustes/bench.hpp"
#include "procrustes/config.hpp"
#include "procrustes/io.hpp"
#include "procrustes/metrics.hpp"

namespace fs = std::filesystem;
using namespace procrustes;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTrials = 3;

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::string format = "csv";
};

bench::RunConfig resolve(const Common& c) {
  bench::RunConfig rc = c.config.empty() ? bench::RunConfig{} : bench::load_config(c.config);
  if (c.seed) rc.bench.seed = *c.seed;
  if (c.method) rc.bench.method = bench::parse_method(*c.method);
  if (c.format != "csv") fail(ErrorCode::ConfigError, "only --format csv is supported");
  rc.bench.validate();
  rc.learn.k = rc.bench.K;
  return rc;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name, std::ios::binary);
  if (!f) fail(ErrorCode::ConfigError, "cannot write to " + (fs::path(dir) / name).string());
  return f;
}

void add_common(CLI::App* app, Common& c, bool with_method) {
  app->add_option("--config", c.config, "JSON config with BenchmarkConfig field names");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  if (with_method) app->add_option("--method", c.method, "les | gles | gles_learned");
  app->add_option("--format", c.format, "output format (csv)");
}

int report_failures(const bench::RunSummary& s) {
  for (const auto& f : s.failures) std::cerr << "trial failed: " << f << '\n';
  if (s.too_many_failures()) {
    std::cerr << s.failed << " of " << s.units << " trial units failed\n";
    return kExitTrials;
  }
  return kExitOk;
}

int cmd_generate(const Common& c) {
  const bench::RunConfig rc = resolve(c);
  const char* names[] = {"T2", "T2Sc", "T3", "T3Sc"};
  for (int t = 0; t < rc.bench.trials; ++t)
    for (std::size_t s = 0; s < rc.bench.c_grid.size(); ++s)
      for (std::uint64_t d = 0; d < 4; ++d) {
        const PointCloud cloud = bench::dataset_cloud(rc.bench, t, static_cast<bench::Dataset>(d), s);
        std::string name = "trial" + std::to_string(t) + "_c" + bench::format_number(rc.bench.c_grid[s], 10) + "_" +
                           names[d] + ".txt";
        auto f = open_out(c.out, name);
        io::write_point_cloud(f, cloud);
      }
  return kExitOk;
}

int cmd_bench(const Common& c) {
  const bench::RunConfig rc = resolve(c);
  if (rc.bench.method == bench::Method::GlesLearned)
    fail(ErrorCode::ConfigError, "use the learn subcommand for gles_learned");
  auto f = open_out(c.out, "results.csv");
  return report_failures(bench::write_tori_benchmark_csv(rc.bench, f));
}

int cmd_learn(const Common& c) {
  bench::RunConfig rc = resolve(c);
  const bench::LearnedRun run = bench::run_learned_benchmark(rc.bench, rc.learn);
  {
    auto f = open_out(c.out, "results.csv");
    f << bench::kCsvHeader << '\n';
    for (const auto& r : run.learned_results) f << bench::csv_row(r, rc.bench.N, rc.bench.K) << '\n';
  }
  {
    auto f = open_out(c.out, "loss_trace.csv");
    f << "epoch,loss\n";
    for (std::size_t i = 0; i < run.loss_trace.size(); ++i)
      f << i << ',' << bench::format_number(run.loss_trace[i], 17) << '\n';
  }
  {
    auto f = open_out(c.out, "learned_weights.csv");
    f << "# rho=" << bench::format_number(rc.learn.rho, 17) << " K=" << rc.bench.K << '\n';
    f << "index,omega\n";
    const Vector omega = run.learned.omega();
    for (Index i = 0; i < omega.size(); ++i) f << i << ',' << bench::format_number(omega(i), 17) << '\n';
  }
  return report_failures(run.summary);
}

int cmd_converge(const Common& c, Index dim, const std::vector<std::int64_t>& grid) {
  const std::uint64_t seed = c.seed.value_or(0);
  const auto rows = bench::run_convergence_suite(dim, grid, seed);
  auto f = open_out(c.out, "convergence.csv");
  f << "n,d_gbw,d_bw\n";
  for (const auto& r : rows)
    f << r.n << ',' << bench::format_number(r.d_gbw, 17) << ',' << bench::format_number(r.d_bw, 17) << '\n';
  return kExitOk;
}

struct DistanceArgs {
  std::string metric = "bw";
  std::string x, y, m;
  double alpha = 0.5;
  Index k = 50;
  double rho = 1.0;
  double delta = 1e-8;
  double gamma = 1e-8;
  std::uint64_t seed = 0;
  std::int64_t budget = 20000;
};

Vector cloud_top_k(const std::string& path, Index k) {
  const PointCloud cloud = io::read_point_cloud(path);
  const DiffusionOperator op = diffusion_operator(cloud, median_bandwidth(cloud));
  return top_k_spectrum(op.matrix, k);
}

int cmd_distance(const DistanceArgs& a) {
  double value = 0.0;
  if (a.metric == "les" || a.metric == "gles") {
    const Vector sx = cloud_top_k(a.x, a.k);
    const Vector sy = cloud_top_k(a.y, a.k);
    const MetricWeight w =
        a.metric == "les" ? bench::les_weight(a.k) : WeightParams::random_init(a.k, a.seed).metric(a.rho);
    value = gles_distance(sx, a.delta, sy, a.gamma, w, a.k).value;
  } else {
    const SpdMatrix x = SpdMatrix::symmetrized(io::read_matrix(a.x));
    const SpdMatrix y = SpdMatrix::symmetrized(io::read_matrix(a.y));
    const MetricWeight w =
        a.m.empty() ? MetricWeight::identity(x.dim()) : MetricWeight::full(SpdMatrix::symmetrized(io::read_matrix(a.m)));
    if (a.metric == "bw") value = bures_wasserstein(x, y).value;
    else if (a.metric == "gbw") value = generalized_bw(x, y, w).value;
    else if (a.metric == "alpha") value = alpha_procrustes_closed(x, y, a.alpha, w).value;
    else if (a.metric == "alpha-numeric") value = alpha_procrustes_numeric(x, y, a.alpha, w, a.budget, a.seed).value;
    else if (a.metric == "logeu") value = generalized_log_euclidean(x, y, w).value;
    else fail(ErrorCode::ConfigError, "unknown metric '" + a.metric + "'");
  }
  std::printf("%.17g\n", value);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPD distances and the tori benchmark"};
  app.require_subcommand(1);

  Common gen_c, bench_c, learn_c, conv_c;
  auto* gen = app.add_subcommand("generate", "write the benchmark point clouds");
  add_common(gen, gen_c, false);
  auto* bch = app.add_subcommand("bench", "run the tori benchmark");
  add_common(bch, bench_c, true);
  auto* lrn = app.add_subcommand("learn", "learn GLES weights and evaluate them");
  add_common(lrn, learn_c, true);

  auto* conv = app.add_subcommand("converge", "Gaussian convergence suite");
  add_common(conv, conv_c, false);
  Index conv_dim = 5;
  std::vector<std::int64_t> conv_grid{1, 10, 100, 1000};
  conv->add_option("--dim", conv_dim, "matrix dimension");
  conv->add_option("--n-grid", conv_grid, "sequence indices")->delimiter(',');

  DistanceArgs dist_a;
  auto* dist = app.add_subcommand("distance", "distance between one pair");
  dist->add_option("--metric", dist_a.metric, "bw | gbw | alpha | alpha-numeric | logeu | les | gles");
  dist->add_option("--x", dist_a.x, "first matrix or point-cloud file")->required();
  dist->add_option("--y", dist_a.y, "second matrix or point-cloud file")->required();
  dist->add_option("--m", dist_a.m, "SPD weight matrix file (default identity)");
  dist->add_option("--alpha", dist_a.alpha, "alpha for the Procrustes family");
  dist->add_option("--K", dist_a.k, "retained eigenvalues for les/gles");
  dist->add_option("--rho", dist_a.rho, "GLES regularizer");
  dist->add_option("--delta", dist_a.delta, "shift of the first spectrum");
  dist->add_option("--gamma", dist_a.gamma, "shift of the second spectrum");
  dist->add_option("--seed", dist_a.seed, "seed for random weights / the numeric search");
  dist->add_option("--budget", dist_a.budget, "search budget of the numeric oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(gen_c);
    if (*bch) return cmd_bench(bench_c);
    if (*lrn) return cmd_learn(learn_c);
    if (*conv) return cmd_converge(conv_c, conv_dim, conv_grid);
    if (*dist) return cmd_distance(dist_a);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
