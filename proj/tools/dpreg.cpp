// dpreg: differentially private Bayesian linear regression.
//
// A bounded dataset is reduced to regression sufficient statistics, released
// once under epsilon-DP Laplace noise, and posterior samples are then drawn
// from noise-aware (or baseline) samplers that see only the release.
//
// Subcommands: release, infer, evaluate, predictive, fetch-data.

#include <CLI11.hpp>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dpreg/dpreg.hpp"

#ifdef DPREG_HAVE_HTTPS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace {

using namespace dpreg;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DPREG_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw CLI::ValidationError("DPREG_SEED", "not an unsigned integer");
    }
  }
  return 1;
}

// Weakly informative defaults used when no prior file is given; documented in
// --help text. Variance of each coefficient is 1 under the default marginal.
NigParams default_nig(int d) {
  NigParams p;
  p.mu = Eigen::VectorXd::Zero(d);
  p.a = 20.0;
  p.b = 0.5;
  p.lambda = (p.b / (p.a - 1.0)) * Eigen::MatrixXd::Identity(d, d);
  return p;
}

NiwParams default_niw(int p_dim) {
  NiwParams p;
  p.mu0 = Eigen::VectorXd::Zero(p_dim);
  p.kappa0 = 1.0;
  p.psi0 = Eigen::MatrixXd::Identity(p_dim, p_dim);
  p.nu0 = 50.0;
  return p;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Shared ingestion flags for subcommands that read raw CSV data.
struct IngestFlags {
  std::string path;
  Bounds bounds{-1.0, 1.0, -1.0, 1.0};
  bool no_bias = false;
  std::string scale = "none";
  bool unsafe_data_scaling = false;
  std::vector<int> x_cols;
  int y_col = -1;

  void attach(CLI::App* cmd, bool data_required) {
    auto* opt = cmd->add_option("--data", path, "CSV file; last column is the response unless --y-col is given");
    if (data_required) opt->required();
    cmd->add_option("--x-lo", bounds.x_lo, "a-priori lower bound on covariates")->capture_default_str();
    cmd->add_option("--x-hi", bounds.x_hi, "a-priori upper bound on covariates")->capture_default_str();
    cmd->add_option("--y-lo", bounds.y_lo, "a-priori lower bound on the response")->capture_default_str();
    cmd->add_option("--y-hi", bounds.y_hi, "a-priori upper bound on the response")->capture_default_str();
    cmd->add_flag("--no-bias", no_bias, "do not prepend a constant-1 bias column");
    cmd->add_option("--scale", scale, "value scaling: none | bounds (a-priori bounds -> [0,1]) | data")
        ->check(CLI::IsMember({"none", "bounds", "data"}))
        ->capture_default_str();
    cmd->add_flag("--unsafe-data-scaling", unsafe_data_scaling,
                  "acknowledge that --scale data leaks the observed min/max and is NOT private");
    cmd->add_option("--x-col", x_cols, "0-based covariate column(s); default: all but the response");
    cmd->add_option("--y-col", y_col, "0-based response column; default: last");
  }

  IngestResult load() const {
    ScaleMode mode = ScaleMode::None;
    if (scale == "bounds") mode = ScaleMode::BoundsToUnit;
    if (scale == "data") {
      if (!unsafe_data_scaling)
        throw CLI::ValidationError("--scale", "data scaling requires --unsafe-data-scaling");
      mode = ScaleMode::DataToUnit;
    }
    IngestResult r = ingest_csv(path, bounds, !no_bias, mode, x_cols, y_col);
    if (r.clipped > 0)
      std::cerr << "warning: clipped " << r.clipped << " values into the declared bounds\n";
    return r;
  }
};

NigParams load_nig_or_default(const std::string& path, int d) {
  if (path.empty()) return default_nig(d);
  NigParams p = nig_from_json(detail::read_json_file(path));
  if (static_cast<int>(p.mu.size()) != d)
    throw CLI::ValidationError("--prior", "prior dimension " + std::to_string(p.mu.size()) +
                                               " does not match release dimension " + std::to_string(d));
  return p;
}

NiwParams load_niw_or_default(const std::string& path, int p_dim) {
  if (path.empty()) return default_niw(p_dim);
  NiwParams p = niw_from_json(detail::read_json_file(path));
  if (p.p() != p_dim)
    throw CLI::ValidationError("--covariate-prior",
                               "prior covers " + std::to_string(p.p()) + " covariates, expected " +
                                   std::to_string(p_dim));
  return p;
}

// --- release -----------------------------------------------------------------

struct ReleaseArgs {
  IngestFlags ingest;
  double epsilon = 1.0;
  double budget_split = 1.0;
  std::string out;
  std::string out_moments;
  std::uint64_t seed = 0;
};

int run_release(const ReleaseArgs& args) {
  const IngestResult loaded = args.ingest.load();
  const Dataset& data = loaded.data;
  PrivacySpec spec{args.epsilon, data.bounds, args.budget_split};
  spec.validate();
  if (!args.out_moments.empty() && !(spec.eps_moments() > 0.0))
    throw CLI::ValidationError("--out-moments", "requires --budget-split < 1 to leave moment budget");

  RandomStream rng(args.seed);
  const SuffStats stats = compute_suff_stats(data);
  const NoisyStats z = release_suff_stats(stats, spec, rng, data.has_bias);
  detail::write_json_file(args.out, noisy_stats_to_json(z));
  std::cout << "released sufficient statistics: n=" << z.n << " d=" << z.d
            << " epsilon=" << format_double(spec.eps_stats()) << " scale=" << format_double(z.scale)
            << " -> " << args.out << "\n";
  if (!args.out_moments.empty()) {
    const NoisyFourthMoments m = release_fourth_moments(data, spec, rng);
    detail::write_json_file(args.out_moments, noisy_fourth_to_json(m));
    std::cout << "released fourth-moment sums: epsilon=" << format_double(spec.eps_moments())
              << " scale=" << format_double(m.scale) << " -> " << args.out_moments << "\n";
  }
  return 0;
}

// --- infer -------------------------------------------------------------------

struct InferArgs {
  std::string method = "gibbs-ss-prior";
  std::string stats_path;
  std::string moments_path;
  std::string moments_release_path;
  std::string prior_path;
  std::string covariate_prior_path;
  IngestFlags ingest;  // non-private only
  long burnin = -1;
  long samples = -1;
  long thin = 1;
  long prior_moment_draws = 200000;
  double x_abs_max = 1.0;
  std::string out = "samples.csv";
  std::string meta;
  std::uint64_t seed = 0;
};

int run_infer(const InferArgs& args) {
  const Method method = method_from_name(args.method);
  RandomStream rng(args.seed);
  PosteriorSamples samples;

  if (method == Method::NonPrivate) {
    if (args.ingest.path.empty())
      throw CLI::ValidationError("--data", "non-private inference reads the raw CSV");
    const Dataset data = args.ingest.load().data;
    const NigParams prior = load_nig_or_default(args.prior_path, data.dim());
    const long count = args.samples > 0 ? args.samples : 2000;
    samples = run_non_private(data, prior, count, rng);
  } else {
    if (args.stats_path.empty())
      throw CLI::ValidationError("--stats", "private methods read a released-statistics file");
    const NoisyStats z = noisy_stats_from_json(detail::read_json_file(args.stats_path));
    const NigParams prior = load_nig_or_default(args.prior_path, z.d);

    GibbsConfig gcfg;
    if (args.burnin >= 0) gcfg.burnin = args.burnin;
    if (args.samples > 0) gcfg.samples = args.samples;
    gcfg.thin = args.thin;

    switch (method) {
      case Method::Naive: {
        const long count = args.samples > 0 ? args.samples : 2000;
        samples = run_naive(z, prior, count, rng);
        break;
      }
      case Method::GibbsNoisy: {
        if (args.moments_release_path.empty())
          throw CLI::ValidationError("--moments-release", "gibbs-ss-noisy needs the noisy fourth-moment release");
        const NoisyFourthMoments m4 =
            noisy_fourth_from_json(detail::read_json_file(args.moments_release_path));
        gcfg.method_label = "gibbs-ss-noisy";
        samples = run_gibbs(z, prior, moments_from_noisy_release(m4, args.x_abs_max), gcfg, rng);
        break;
      }
      case Method::GibbsPrior: {
        CovariateMoments m;
        if (!args.moments_path.empty()) {
          m = moments_from_json(detail::read_json_file(args.moments_path));
        } else {
          // integrate the covariate prior by Monte Carlo
          const int d = z.d;
          const bool bias = z.bias;
          const NiwParams niw = load_niw_or_default(args.covariate_prior_path, bias ? d - 1 : d);
          m = moments_from_prior_mc(
              [&niw, d, bias](RandomStream& r) {
                const NiwDraw hyper = niw_sample(niw, r);
                Eigen::VectorXd x(d);
                if (bias) {
                  x[0] = 1.0;
                  x.tail(d - 1) = mvn_sample(hyper.mu, hyper.tau2, r);
                } else {
                  x = mvn_sample(hyper.mu, hyper.tau2, r);
                }
                return x;
              },
              d, bias, args.prior_moment_draws, rng);
        }
        gcfg.method_label = "gibbs-ss-prior";
        samples = run_gibbs(z, prior, m, gcfg, rng);
        break;
      }
      case Method::GibbsUpdate: {
        const NiwParams niw = load_niw_or_default(args.covariate_prior_path, z.d - 1);
        samples = run_gibbs(z, prior, niw, gcfg, rng);
        break;
      }
      case Method::McmcInd: {
        const NiwParams niw = load_niw_or_default(args.covariate_prior_path, z.d - 1);
        IndConfig icfg;
        if (args.burnin >= 0) icfg.burnin = args.burnin;
        if (args.samples > 0) icfg.samples = args.samples;
        icfg.thin = args.thin;
        samples = run_mcmc_ind(z, prior, niw, icfg, rng);
        break;
      }
      default:
        throw CLI::ValidationError("--method", "unhandled method");
    }
  }

  const std::string meta_path = args.meta.empty() ? args.out + ".meta.json" : args.meta;
  save_samples(args.out, meta_path, samples);
  std::cout << samples.meta.method << ": " << samples.count() << " posterior draws in "
            << format_double(samples.meta.runtime_seconds) << "s -> " << args.out << "\n";
  return 0;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string config_path;
  std::string out_dir = "results";
  long trials = -1;
  std::vector<long> n_grid;
  std::vector<double> eps_grid;
  std::vector<std::string> method_names;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_evaluate(const EvaluateArgs& args) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!args.config_path.empty()) cfg = detail::read_json_file(args.config_path);

  const auto get_or = [&cfg](const char* key, auto fallback) {
    using T = decltype(fallback);
    return cfg.contains(key) ? cfg[key].get<T>() : fallback;
  };

  std::uint64_t seed = args.seed_set ? args.seed : get_or("seed", default_seed());
  long trials = args.trials > 0 ? args.trials : get_or("trials", long{100});
  std::vector<long> n_grid = !args.n_grid.empty() ? args.n_grid : get_or("n", std::vector<long>{10});
  std::vector<double> eps_grid =
      !args.eps_grid.empty() ? args.eps_grid : get_or("epsilon", std::vector<double>{0.1});
  std::vector<std::string> method_names =
      !args.method_names.empty()
          ? args.method_names
          : get_or("methods", std::vector<std::string>{"non-private", "naive", "gibbs-ss-noisy",
                                                       "gibbs-ss-prior", "gibbs-ss-update",
                                                       "mcmc-ind"});
  int threads = args.threads > 0 ? args.threads
                                 : get_or("threads", int(std::thread::hardware_concurrency()));

  CalibrationCell cell;
  cell.trials = trials;
  cell.prior = cfg.contains("prior") ? nig_from_json(cfg["prior"]) : default_nig(2);
  cell.covariate_prior = cfg.contains("covariate_prior")
                             ? niw_from_json(cfg["covariate_prior"])
                             : default_niw(static_cast<int>(cell.prior.mu.size()) - 1);
  if (cfg.contains("bounds")) {
    const auto& b = cfg["bounds"];
    cell.bounds = {b.at("x_lo").get<double>(), b.at("x_hi").get<double>(),
                   b.at("y_lo").get<double>(), b.at("y_hi").get<double>()};
  }
  cell.noisy_budget_split = get_or("noisy_budget_split", 0.5);
  if (cfg.contains("gibbs")) {
    const auto& g = cfg["gibbs"];
    if (g.contains("burnin")) cell.gibbs.burnin = g["burnin"].get<long>();
    if (g.contains("samples")) cell.gibbs.samples = g["samples"].get<long>();
    if (g.contains("thin")) cell.gibbs.thin = g["thin"].get<long>();
  }
  if (cfg.contains("ind")) {
    const auto& g = cfg["ind"];
    if (g.contains("burnin")) cell.ind.burnin = g["burnin"].get<long>();
    if (g.contains("samples")) cell.ind.samples = g["samples"].get<long>();
    if (g.contains("thin")) cell.ind.thin = g["thin"].get<long>();
  }
  cell.exact_draws = get_or("exact_draws", long{2000});
  cell.levels = get_or("levels", std::vector<double>{0.5, 0.95});
  cell.prior_moment_draws = get_or("prior_moment_draws", long{1000000});
  for (const auto& name : method_names) cell.methods.push_back(method_from_name(name));

  const bool mmd_enabled =
      get_or("mmd", false) &&
      std::find(cell.methods.begin(), cell.methods.end(), Method::NonPrivate) != cell.methods.end();
  const long mmd_rows = get_or("mmd_rows", long{500});
  const double mmd_bandwidth = get_or("mmd_bandwidth", 1.0);
  cell.keep_samples = mmd_enabled;
  cell.keep_rows = mmd_rows;

  std::filesystem::create_directories(args.out_dir);
  std::vector<MetricRow> metrics;
  const RandomStream root(seed);

  long cell_index = 0;
  for (long n : n_grid) {
    for (double eps : eps_grid) {
      cell.n = n;
      cell.epsilon = eps;
      const RandomStream cell_root = root.child(0x1000 + static_cast<std::uint64_t>(cell_index++));
      std::cout << "cell n=" << n << " epsilon=" << format_double(eps) << " (" << trials
                << " trials, " << cell.methods.size() << " methods)..." << std::flush;
      CellResult result;
      const double wall = measure_runtime(
          [&] { result = run_calibration_cell(cell, cell_root, static_cast<unsigned>(threads)); });
      std::cout << " " << format_double(wall) << "s\n";

      const int d = static_cast<int>(cell.prior.mu.size());
      const auto param_name = [d](int j) {
        return j < d ? "theta_" + std::to_string(j) : std::string("sigma2");
      };
      for (std::size_t mi = 0; mi < cell.methods.size(); ++mi) {
        const std::string name = method_name(cell.methods[mi]);
        const auto& outcomes = result.outcomes[mi];
        long failures = 0;
        for (const auto& o : outcomes)
          if (!o.ok) ++failures;
        metrics.push_back({name, n, eps, "all", "failures", static_cast<double>(failures)});
        if (failures == trials) continue;

        const Eigen::VectorXd ks = cell_ks(outcomes);
        for (int j = 0; j <= d; ++j)
          metrics.push_back({name, n, eps, param_name(j), "ks", ks[j]});
        std::vector<double> pooled;
        for (const auto& o : outcomes)
          if (o.ok)
            for (Eigen::Index j = 0; j < o.u.size(); ++j) pooled.push_back(o.u[j]);
        metrics.push_back({name, n, eps, "pooled", "ks", ks_statistic(pooled)});
        for (std::size_t l = 0; l < cell.levels.size(); ++l)
          metrics.push_back({name, n, eps, "all", "coverage@" + format_double(cell.levels[l]),
                             cell_coverage(outcomes, l)});
        metrics.push_back({name, n, eps, "all", "runtime_seconds", cell_mean_runtime(outcomes)});

        if (mmd_enabled && cell.methods[mi] != Method::NonPrivate) {
          const auto& np = result.for_method(Method::NonPrivate);
          double acc = 0.0;
          long count = 0;
          for (long t = 0; t < trials; ++t)
            if (outcomes[t].ok && np[t].ok) {
              acc += mmd2(outcomes[t].kept, np[t].kept, mmd_bandwidth);
              ++count;
            }
          if (count > 0)
            metrics.push_back({name, n, eps, "all", "mmd2_vs_non_private", acc / count});
        }

        for (int j = 0; j <= d; ++j) {
          std::vector<double> u;
          for (const auto& o : outcomes)
            if (o.ok) u.push_back(o.u[j]);
          const std::string qq = args.out_dir + "/qq_" + name + "_n" + std::to_string(n) + "_eps" +
                                 format_double(eps) + "_" + param_name(j) + ".csv";
          write_qq_csv(qq, u);
        }
      }
    }
  }

  const std::string metrics_path = args.out_dir + "/metrics.csv";
  write_metrics_csv(metrics_path, metrics);
  std::cout << "wrote " << metrics.size() << " metric rows -> " << metrics_path << "\n";
  return 0;
}

// --- predictive ----------------------------------------------------------------

struct PredictiveArgs {
  IngestFlags ingest;
  long splits = 100;
  long test_count = 10;
  double epsilon = 0.1;
  double budget_split = 0.5;
  std::vector<std::string> method_names = {"non-private", "naive", "gibbs-ss-noisy"};
  long burnin = -1;
  long samples = -1;
  long exact_draws = 2000;
  std::vector<double> levels = {0.5, 0.9};
  std::string out;
  std::uint64_t seed = 0;
};

int run_predictive(const PredictiveArgs& args) {
  const IngestResult loaded = args.ingest.load();
  PredictiveConfig cfg;
  cfg.splits = args.splits;
  cfg.test_count = args.test_count;
  cfg.epsilon = args.epsilon;
  cfg.noisy_budget_split = args.budget_split;
  cfg.prior = default_nig(loaded.data.dim());
  for (const auto& name : args.method_names) cfg.methods.push_back(method_from_name(name));
  if (args.burnin >= 0) cfg.gibbs.burnin = args.burnin;
  if (args.samples > 0) cfg.gibbs.samples = args.samples;
  cfg.exact_draws = args.exact_draws;
  cfg.levels = args.levels;

  const RandomStream root(args.seed);
  const PredictiveResult result = run_predictive_experiment(loaded.data, cfg, root);

  std::vector<MetricRow> rows;
  std::cout << "predictive coverage over " << args.splits << " splits (n=" << loaded.data.n()
            << ", test " << args.test_count << ", epsilon=" << format_double(args.epsilon) << ")\n";
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const std::string name = method_name(cfg.methods[mi]);
    std::cout << "  " << name << ":";
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
      std::cout << " cover@" << format_double(cfg.levels[l]) << "="
                << format_double(result.cover[mi][l]);
      rows.push_back({name, loaded.data.n(), args.epsilon, "y",
                      "predictive_coverage@" + format_double(cfg.levels[l]), result.cover[mi][l]});
    }
    std::cout << " failures=" << result.failures[mi]
              << " runtime=" << format_double(result.mean_runtime[mi]) << "s\n";
    rows.push_back({name, loaded.data.n(), args.epsilon, "all", "failures",
                    static_cast<double>(result.failures[mi])});
    rows.push_back({name, loaded.data.n(), args.epsilon, "all", "runtime_seconds",
                    result.mean_runtime[mi]});
  }
  if (!args.out.empty()) {
    write_metrics_csv(args.out, rows);
    std::cout << "wrote " << rows.size() << " metric rows -> " << args.out << "\n";
  }
  return 0;
}

// --- fetch-data ----------------------------------------------------------------

struct FetchArgs {
  std::string url;
  std::string out;
  std::string expected_sha256;
  int timeout_seconds = 30;
  bool insecure = false;
};

int run_fetch(const FetchArgs& args) {
  const auto scheme_end = args.url.find("://");
  if (scheme_end == std::string::npos)
    throw CLI::ValidationError("--url", "expected scheme://host/path");
  const std::string scheme = args.url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw CLI::ValidationError("--url", "only http and https are supported");
#ifndef DPREG_HAVE_HTTPS
  if (scheme == "https")
    throw CLI::ValidationError("--url", "built without TLS support; use an http URL");
#endif
  const auto path_start = args.url.find('/', scheme_end + 3);
  const std::string origin =
      path_start == std::string::npos ? args.url : args.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : args.url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(args.timeout_seconds);
  client.set_read_timeout(args.timeout_seconds);
  client.set_follow_location(true);
#ifdef DPREG_HAVE_HTTPS
  if (args.insecure) client.enable_server_certificate_verification(false);
#endif

  std::cout << "fetching " << args.url << " ...\n";
  const httplib::Result res = client.Get(path);
  if (!res) {
    std::cerr << "error: request failed: " << httplib::to_string(res.error()) << "\n";
    return 1;
  }
  if (res->status != 200) {
    std::cerr << "error: HTTP status " << res->status << "\n";
    return 1;
  }

  // structural sanity: must parse as a numeric table
  std::istringstream body(res->body);
  std::vector<std::vector<double>> rows;
  try {
    rows = parse_numeric_table(body);
  } catch (const std::exception& e) {
    std::cerr << "error: downloaded content is not a numeric table: " << e.what() << "\n";
    return 1;
  }
  if (rows.empty()) {
    std::cerr << "error: downloaded content has no data rows\n";
    return 1;
  }

  const std::string digest = detail::sha256_hex(res->body);
  if (!args.expected_sha256.empty()) {
    std::string want = args.expected_sha256;
    for (char& ch : want) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (digest != want) {
      std::cerr << "error: sha256 mismatch\n  expected " << want << "\n  got      " << digest << "\n";
      return 1;
    }
  }

  std::ofstream out(args.out, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << args.out << "\n";
    return 1;
  }
  out << res->body;
  std::cout << "wrote " << res->body.size() << " bytes (" << rows.size() << " rows, "
            << rows[0].size() << " columns) -> " << args.out << "\nsha256 " << digest << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private Bayesian linear regression via released sufficient statistics"};
  app.require_subcommand(1);
  app.set_config("--config-file");

  ReleaseArgs release_args;
  release_args.seed = default_seed();
  auto* release = app.add_subcommand("release", "compute sufficient statistics and release them under epsilon-DP Laplace noise");
  release_args.ingest.attach(release, true);
  release->add_option("--epsilon", release_args.epsilon, "total privacy budget")
      ->required()
      ->check(CLI::PositiveNumber);
  release->add_option("--budget-split", release_args.budget_split,
                      "fraction of the budget spent on the statistics (remainder funds --out-moments)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  release->add_option("--out", release_args.out, "noisy statistics JSON")->required();
  release->add_option("--out-moments", release_args.out_moments,
                      "also release noisy fourth-moment sums to this JSON");
  release->add_option("--seed", release_args.seed, "RNG seed (or env DPREG_SEED)")->capture_default_str();

  InferArgs infer_args;
  infer_args.seed = default_seed();
  auto* infer = app.add_subcommand("infer", "draw posterior samples from a release (or raw data for non-private)");
  infer->add_option("--method", infer_args.method,
                    "non-private | naive | gibbs-ss-noisy | gibbs-ss-prior | gibbs-ss-update | mcmc-ind")
      ->required();
  infer->add_option("--stats", infer_args.stats_path, "released-statistics JSON (all private methods)");
  infer->add_option("--moments-release", infer_args.moments_release_path,
                    "noisy fourth-moment JSON (gibbs-ss-noisy)");
  infer->add_option("--moments", infer_args.moments_path,
                    "known covariate-moment JSON (gibbs-ss-prior)");
  infer->add_option("--prior", infer_args.prior_path,
                    "normal-inverse-gamma prior JSON; default: mu=0, lambda=(b/(a-1))I, a=20, b=0.5");
  infer->add_option("--covariate-prior", infer_args.covariate_prior_path,
                    "normal-inverse-Wishart prior JSON; default: mu=0, kappa=1, psi=I, nu=50");
  infer_args.ingest.attach(infer, false);
  infer->add_option("--burnin", infer_args.burnin, "burn-in sweeps (default 5000, mcmc-ind 500)");
  infer->add_option("--samples", infer_args.samples, "posterior draws to keep (default 20000; conjugate methods and mcmc-ind 2000)");
  infer->add_option("--thin", infer_args.thin, "keep every k-th sweep")->capture_default_str();
  infer->add_option("--prior-moment-draws", infer_args.prior_moment_draws,
                    "Monte Carlo draws when integrating the covariate prior")
      ->capture_default_str();
  infer->add_option("--x-abs-max", infer_args.x_abs_max,
                    "covariate magnitude cap used to clip noisy fourth moments")
      ->capture_default_str();
  infer->add_option("--out", infer_args.out, "samples CSV")->capture_default_str();
  infer->add_option("--meta", infer_args.meta, "metadata JSON (default: <out>.meta.json)");
  infer->add_option("--seed", infer_args.seed, "RNG seed (or env DPREG_SEED)")->capture_default_str();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "synthetic-population calibration/coverage/runtime grid");
  evaluate->add_option("--config", eval_args.config_path, "JSON grid configuration; flags override");
  evaluate->add_option("--out-dir", eval_args.out_dir, "output directory")->capture_default_str();
  evaluate->add_option("--trials", eval_args.trials, "trials per grid cell");
  evaluate->add_option("--n", eval_args.n_grid, "record counts");
  evaluate->add_option("--epsilon", eval_args.eps_grid, "privacy budgets");
  evaluate->add_option("--methods", eval_args.method_names, "methods to evaluate");
  evaluate->add_option("--threads", eval_args.threads, "worker threads (0 = auto)");
  auto* eval_seed = evaluate->add_option("--seed", eval_args.seed, "RNG seed (or env DPREG_SEED)");
  evaluate->callback([&] { eval_args.seed_set = eval_seed->count() > 0; });

  PredictiveArgs pred_args;
  pred_args.seed = default_seed();
  auto* predictive = app.add_subcommand("predictive", "train/test predictive-interval coverage on a real dataset");
  pred_args.ingest.attach(predictive, true);
  predictive->add_option("--splits", pred_args.splits, "random train/test splits")->capture_default_str();
  predictive->add_option("--test-count", pred_args.test_count, "held-out rows per split")->capture_default_str();
  predictive->add_option("--epsilon", pred_args.epsilon, "total privacy budget")->capture_default_str();
  predictive->add_option("--budget-split", pred_args.budget_split,
                         "statistics share of the budget for gibbs-ss-noisy")
      ->capture_default_str();
  predictive->add_option("--methods", pred_args.method_names, "methods (non-private, naive, gibbs-ss-noisy)")
      ->capture_default_str();
  predictive->add_option("--burnin", pred_args.burnin, "gibbs burn-in sweeps");
  predictive->add_option("--samples", pred_args.samples, "gibbs posterior draws");
  predictive->add_option("--exact-draws", pred_args.exact_draws, "draws for conjugate methods")->capture_default_str();
  predictive->add_option("--levels", pred_args.levels, "central interval levels")->capture_default_str();
  predictive->add_option("--out", pred_args.out, "metrics CSV");
  predictive->add_option("--seed", pred_args.seed, "RNG seed (or env DPREG_SEED)")->capture_default_str();

  FetchArgs fetch_args;
  auto* fetch = app.add_subcommand("fetch-data", "download a whitespace/CSV numeric dataset and print its SHA-256");
  fetch->add_option("--url", fetch_args.url, "http(s) URL")->required();
  fetch->add_option("--out", fetch_args.out, "output file")->required();
  fetch->add_option("--expected-sha256", fetch_args.expected_sha256, "fail unless the digest matches");
  fetch->add_option("--timeout", fetch_args.timeout_seconds, "seconds")->capture_default_str();
  fetch->add_flag("--insecure", fetch_args.insecure, "skip TLS certificate verification");

  CLI11_PARSE(app, argc, argv);

  try {
    if (release->parsed()) return run_release(release_args);
    if (infer->parsed()) return run_infer(infer_args);
    if (evaluate->parsed()) return run_evaluate(eval_args);
    if (predictive->parsed()) return run_predictive(pred_args);
    if (fetch->parsed()) return run_fetch(fetch_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
