#pragma once

// Evaluation harness: Cook-style calibration over synthetic populations,
// kernel two-sample utility against the non-private posterior, credible
// interval coverage, and runtime measurement. Trials run on a work pool;
// every trial derives its randomness from its own index, so results do not
// depend on thread scheduling.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dpreg/baselines.hpp"
#include "dpreg/distributions.hpp"
#include "dpreg/gibbs.hpp"
#include "dpreg/model.hpp"
#include "dpreg/moments.hpp"
#include "dpreg/privacy.hpp"
#include "dpreg/random.hpp"
#include "dpreg/samples.hpp"

namespace dpreg {

// --- statistics -----------------------------------------------------------

// Kolmogorov-Smirnov distance between a sample and U(0,1):
// max_i max(|i/M - u_(i)|, |u_(i) - (i-1)/M|).
inline double ks_statistic(std::vector<double> u) {
  if (u.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(u.begin(), u.end());
  const double m = static_cast<double>(u.size());
  double ks = 0.0;
  for (std::size_t i = 1; i <= u.size(); ++i) {
    const double v = u[i - 1];
    ks = std::max(ks, std::max(std::abs(static_cast<double>(i) / m - v),
                               std::abs(v - static_cast<double>(i - 1) / m)));
  }
  return ks;
}

// Asymptotic critical value of the one-sample KS statistic at level alpha.
inline double ks_critical(double alpha, long m) {
  if (!(alpha > 0.0 && alpha < 1.0) || m < 1) throw std::invalid_argument("ks_critical: bad arguments");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(m));
}

// Unbiased MMD^2 estimate with Gaussian kernel exp(-||a-b||^2 / (2 bw^2)).
// Requires equal sample counts; subsample the larger set first.
inline double mmd2(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, double bandwidth = 1.0) {
  const long m = static_cast<long>(p.rows());
  if (q.rows() != m || m < 2) throw std::invalid_argument("mmd2: need equal sample counts >= 2");
  if (p.cols() != q.cols()) throw std::invalid_argument("mmd2: dimension mismatch");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("mmd2: bandwidth must be > 0");
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  const auto k = [inv](const auto& a, const auto& b) {
    return std::exp(-(a - b).squaredNorm() * inv);
  };
  double acc = 0.0;
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j) {
      if (i == j) continue;
      acc += k(p.row(i), p.row(j)) + k(q.row(i), q.row(j)) - k(p.row(i), q.row(j)) -
             k(p.row(j), q.row(i));
    }
  return acc / (static_cast<double>(m) * static_cast<double>(m - 1));
}

inline Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& m, long count, RandomStream& rng) {
  const long n = static_cast<long>(m.rows());
  if (count >= n) return m;
  // partial Fisher-Yates over row indices
  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i) idx[i] = i;
  Eigen::MatrixXd out(count, m.cols());
  for (long i = 0; i < count; ++i) {
    std::uniform_int_distribution<long> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng.engine())]);
    out.row(i) = m.row(idx[i]);
  }
  return out;
}

// Empirical quantile with linear interpolation between order statistics.
inline double empirical_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (q <= 0.0) return *std::min_element(v.begin(), v.end());
  if (q >= 1.0) return *std::max_element(v.begin(), v.end());
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

// Central credible-interval hits: hits(l, j) says whether truth[j] lies in
// the central levels[l] interval of parameter j's marginal sample.
// Parameters are ordered [theta_0 .. theta_{d-1}, sigma2]. Level 1 covers
// the full closed sample range.
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> coverage(
    const PosteriorSamples& samples, const Eigen::VectorXd& truth,
    const std::vector<double>& levels) {
  const int d = static_cast<int>(samples.theta.cols());
  if (truth.size() != d + 1) throw std::invalid_argument("coverage: truth must hold d+1 parameters");
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> hits(levels.size(), d + 1);
  for (int j = 0; j <= d; ++j) {
    std::vector<double> vals(samples.count());
    for (long i = 0; i < samples.count(); ++i)
      vals[i] = (j < d) ? samples.theta(i, j) : samples.sigma2[i];
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double lev = levels[l];
      if (!(lev > 0.0) || lev > 1.0) throw std::invalid_argument("coverage: levels must be in (0, 1]");
      const double lo = empirical_quantile(vals, (1.0 - lev) / 2.0);
      const double hi = empirical_quantile(vals, (1.0 + lev) / 2.0);
      hits(static_cast<Eigen::Index>(l), j) = truth[j] >= lo && truth[j] <= hi;
    }
  }
  return hits;
}

// Mean wall-clock seconds of `fn` over `reps` runs.
inline double measure_runtime(const std::function<void()>& fn, int reps = 1) {
  if (reps < 1) throw std::invalid_argument("measure_runtime: reps must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
         static_cast<double>(reps);
}

// Run fn(0..count-1) on a small thread pool. Tasks must derive all
// randomness from their index for schedule-independent results.
inline void parallel_for(long count, const std::function<void(long)>& fn,
                         unsigned threads = std::thread::hardware_concurrency()) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<long>(count, 1))));
  if (threads == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// --- calibration experiment ------------------------------------------------

enum class Method { NonPrivate, Naive, GibbsNoisy, GibbsPrior, GibbsUpdate, McmcInd };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::NonPrivate: return "non-private";
    case Method::Naive: return "naive";
    case Method::GibbsNoisy: return "gibbs-ss-noisy";
    case Method::GibbsPrior: return "gibbs-ss-prior";
    case Method::GibbsUpdate: return "gibbs-ss-update";
    case Method::McmcInd: return "mcmc-ind";
  }
  throw std::invalid_argument("method_name: unknown method");
}

inline Method method_from_name(const std::string& name) {
  for (Method m : {Method::NonPrivate, Method::Naive, Method::GibbsNoisy, Method::GibbsPrior,
                   Method::GibbsUpdate, Method::McmcInd})
    if (name == method_name(m)) return m;
  throw std::invalid_argument("method_from_name: unknown method '" + name + "'");
}

inline bool is_noise_aware(Method m) {
  return m == Method::GibbsNoisy || m == Method::GibbsPrior || m == Method::GibbsUpdate ||
         m == Method::McmcInd;
}

// One grid cell of the synthetic-population experiment. The generative model
// matches the priors the methods assume: (theta, sigma2) ~ NIG, covariate
// hyperparameters ~ NIW, x rows normal, bias column prepended. Bounds feed
// the sensitivity but are deliberately not enforced on the draws.
struct CalibrationCell {
  long n = 10;
  double epsilon = 0.1;
  long trials = 100;
  NigParams prior;              // over [bias, real covariates]
  NiwParams covariate_prior;    // over the real covariates
  Bounds bounds;
  double noisy_budget_split = 0.5;  // split used by the noisy-moment variant
  std::vector<Method> methods;
  GibbsConfig gibbs;            // chain settings for all gibbs-ss variants
  IndConfig ind;
  long exact_draws = 2000;      // posterior draws for conjugate methods
  std::vector<double> levels = {0.5, 0.95};
  long prior_moment_draws = 1000000;
  bool keep_samples = false;    // retain raw samples per trial (utility metrics)
  long keep_rows = 0;           // subsample kept samples to this many rows (0 = all)
};

struct TrialOutcome {
  bool ok = false;
  std::string error;
  Eigen::VectorXd u;          // posterior quantile of each true parameter
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> hits;  // levels x params
  double runtime_seconds = 0.0;
  Eigen::MatrixXd kept;       // optional [theta, sigma2] rows
};

struct CellResult {
  std::vector<Method> methods;
  // outcomes[m][t]: method m, trial t
  std::vector<std::vector<TrialOutcome>> outcomes;
  CovariateMoments prior_moments;  // shared by the fixed-prior-moment variant

  const std::vector<TrialOutcome>& for_method(Method m) const {
    for (std::size_t i = 0; i < methods.size(); ++i)
      if (methods[i] == m) return outcomes[i];
    throw std::invalid_argument("CellResult: method not present");
  }
};

namespace detail {

inline Eigen::VectorXd quantiles_of_truth(const PosteriorSamples& samples,
                                          const Eigen::VectorXd& truth) {
  const int d = static_cast<int>(samples.theta.cols());
  Eigen::VectorXd u(d + 1);
  const double count = static_cast<double>(samples.count());
  for (int j = 0; j <= d; ++j) {
    long below = 0;
    for (long i = 0; i < samples.count(); ++i) {
      const double v = (j < d) ? samples.theta(i, j) : samples.sigma2[i];
      if (v <= truth[j]) ++below;
    }
    u[j] = static_cast<double>(below) / count;
  }
  return u;
}

inline Eigen::MatrixXd stack_draws(const PosteriorSamples& samples) {
  Eigen::MatrixXd out(samples.count(), samples.theta.cols() + 1);
  out.leftCols(samples.theta.cols()) = samples.theta;
  out.col(samples.theta.cols()) = samples.sigma2;
  return out;
}

}  // namespace detail

// Draw one synthetic population from the cell's generative model.
inline Dataset draw_population(const CalibrationCell& cell, Eigen::VectorXd& truth,
                               RandomStream& rng) {
  const int d = static_cast<int>(cell.prior.mu.size());
  const int p = d - 1;
  const ParamDraw params = nig_sample(cell.prior, rng);
  const NiwDraw hyper = niw_sample(cell.covariate_prior, rng);
  Dataset data;
  data.bounds = cell.bounds;
  data.has_bias = true;
  data.x.resize(cell.n, d);
  data.y.resize(cell.n);
  for (long r = 0; r < cell.n; ++r) {
    data.x(r, 0) = 1.0;
    data.x.row(r).tail(p) = mvn_sample(hyper.mu, hyper.tau2, rng).transpose();
    data.y[r] = rng.normal(params.theta.dot(data.x.row(r)), std::sqrt(params.sigma2));
  }
  truth.resize(d + 1);
  truth.head(d) = params.theta;
  truth[d] = params.sigma2;
  return data;
}

inline CellResult run_calibration_cell(const CalibrationCell& cell, const RandomStream& root,
                                       unsigned threads = 0) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (cell.methods.empty()) throw std::invalid_argument("run_calibration_cell: no methods");
  cell.prior.validate();
  cell.covariate_prior.validate();
  const int d = static_cast<int>(cell.prior.mu.size());
  if (cell.covariate_prior.p() != d - 1)
    throw std::invalid_argument("run_calibration_cell: prior dimensions inconsistent");

  CellResult result;
  result.methods = cell.methods;
  result.outcomes.assign(cell.methods.size(), std::vector<TrialOutcome>(cell.trials));

  const bool wants_prior_moments =
      std::find(cell.methods.begin(), cell.methods.end(), Method::GibbsPrior) != cell.methods.end();
  if (wants_prior_moments) {
    // population moments of the marginal covariate prior, integrated over
    // the NIW hyperparameter draw by plain Monte Carlo
    RandomStream mc = root.child(0x9a0f);
    const NiwParams niw = cell.covariate_prior;
    result.prior_moments = moments_from_prior_mc(
        [&niw, d](RandomStream& r) {
          const NiwDraw hyper = niw_sample(niw, r);
          Eigen::VectorXd x(d);
          x[0] = 1.0;
          x.tail(d - 1) = mvn_sample(hyper.mu, hyper.tau2, r);
          return x;
        },
        d, true, cell.prior_moment_draws, mc);
  }

  parallel_for(cell.trials, [&](long trial) {
    RandomStream stream = root.child(static_cast<std::uint64_t>(trial) + 1);
    Eigen::VectorXd truth;
    const Dataset data = draw_population(cell, truth, stream);
    const SuffStats stats = compute_suff_stats(data);

    // Every private method gets its own complete epsilon-DP release: a full
    // budget z for single-release methods, a split (z, fourth moments) pair
    // for the noisy-moment variant.
    PrivacySpec full{cell.epsilon, cell.bounds, 1.0};
    RandomStream release_rng = stream.child(0x11);
    const NoisyStats z_full = release_suff_stats(stats, full, release_rng, true);
    NoisyStats z_split;
    NoisyFourthMoments noisy4;
    const bool wants_noisy =
        std::find(cell.methods.begin(), cell.methods.end(), Method::GibbsNoisy) != cell.methods.end();
    if (wants_noisy) {
      PrivacySpec split{cell.epsilon, cell.bounds, cell.noisy_budget_split};
      z_split = release_suff_stats(stats, split, release_rng, true);
      noisy4 = release_fourth_moments(data, split, release_rng);
    }
    const double max_abs_x = std::max(std::abs(cell.bounds.x_lo), std::abs(cell.bounds.x_hi));

    for (std::size_t mi = 0; mi < cell.methods.size(); ++mi) {
      const Method method = cell.methods[mi];
      TrialOutcome& outcome = result.outcomes[mi][trial];
      RandomStream method_rng = stream.child(0x100 + static_cast<std::uint64_t>(method));
      try {
        const auto t0 = std::chrono::steady_clock::now();
        PosteriorSamples samples;
        GibbsConfig gcfg = cell.gibbs;
        switch (method) {
          case Method::NonPrivate:
            samples = run_non_private(data, cell.prior, cell.exact_draws, method_rng);
            break;
          case Method::Naive:
            samples = run_naive(z_full, cell.prior, cell.exact_draws, method_rng);
            break;
          case Method::GibbsNoisy: {
            gcfg.method_label = method_name(method);
            const CovariateMoments m = moments_from_noisy_release(noisy4, max_abs_x);
            samples = run_gibbs(z_split, cell.prior, m, gcfg, method_rng);
            break;
          }
          case Method::GibbsPrior: {
            gcfg.method_label = method_name(method);
            samples = run_gibbs(z_full, cell.prior, result.prior_moments, gcfg, method_rng);
            break;
          }
          case Method::GibbsUpdate: {
            gcfg.method_label = method_name(method);
            samples = run_gibbs(z_full, cell.prior, cell.covariate_prior, gcfg, method_rng);
            break;
          }
          case Method::McmcInd: {
            IndConfig icfg = cell.ind;
            samples = run_mcmc_ind(z_full, cell.prior, cell.covariate_prior, icfg, method_rng);
            break;
          }
        }
        outcome.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        outcome.u = detail::quantiles_of_truth(samples, truth);
        outcome.hits = coverage(samples, truth, cell.levels);
        if (cell.keep_samples) {
          Eigen::MatrixXd all = detail::stack_draws(samples);
          RandomStream sub = stream.child(0x200 + static_cast<std::uint64_t>(method));
          outcome.kept = (cell.keep_rows > 0) ? subsample_rows(all, cell.keep_rows, sub) : all;
        }
        outcome.ok = true;
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
      }
    }
  }, threads);
  return result;
}

// Per-parameter KS statistics of the calibration quantiles over successful
// trials. Parameter order matches TrialOutcome::u.
inline Eigen::VectorXd cell_ks(const std::vector<TrialOutcome>& outcomes) {
  std::vector<std::vector<double>> u;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    if (u.empty()) u.resize(o.u.size());
    for (Eigen::Index j = 0; j < o.u.size(); ++j) u[j].push_back(o.u[j]);
  }
  if (u.empty()) throw std::runtime_error("cell_ks: no successful trials");
  Eigen::VectorXd ks(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) ks[j] = ks_statistic(u[j]);
  return ks;
}

// Coverage rate pooled over parameters (and per parameter) at one level.
inline double cell_coverage(const std::vector<TrialOutcome>& outcomes, std::size_t level_index) {
  long hits = 0, total = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    for (Eigen::Index j = 0; j < o.hits.cols(); ++j) {
      hits += o.hits(static_cast<Eigen::Index>(level_index), j) ? 1 : 0;
      ++total;
    }
  }
  if (total == 0) throw std::runtime_error("cell_coverage: no successful trials");
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline double cell_mean_runtime(const std::vector<TrialOutcome>& outcomes) {
  double acc = 0.0;
  long count = 0;
  for (const auto& o : outcomes)
    if (o.ok) {
      acc += o.runtime_seconds;
      ++count;
    }
  if (count == 0) throw std::runtime_error("cell_mean_runtime: no successful trials");
  return acc / static_cast<double>(count);
}

// --- predictive experiment -------------------------------------------------

struct PredictiveConfig {
  long splits = 100;
  long test_count = 10;
  double epsilon = 0.1;
  double noisy_budget_split = 0.5;
  NigParams prior;
  std::vector<Method> methods;  // NonPrivate, Naive, GibbsNoisy supported
  GibbsConfig gibbs;
  long exact_draws = 2000;
  std::vector<double> levels = {0.5, 0.9};
};

struct PredictiveResult {
  std::vector<Method> methods;
  // cover[m][l] = fraction of (split, test point) evaluations whose true
  // response fell in the central levels[l] predictive interval
  std::vector<std::vector<double>> cover;
  std::vector<long> failures;
  std::vector<double> mean_runtime;
};

// Random train/test splits of one real dataset; per split, fit on the
// training rows (privately where applicable) and score central predictive
// intervals on the held-out rows.
inline PredictiveResult run_predictive_experiment(const Dataset& data, const PredictiveConfig& cfg,
                                                  const RandomStream& root) {
  validate_dataset(data);
  cfg.prior.validate();
  if (cfg.methods.empty()) throw std::invalid_argument("run_predictive_experiment: no methods");
  if (cfg.test_count < 1 || cfg.test_count >= data.n())
    throw std::invalid_argument("run_predictive_experiment: bad test_count");
  const long n = data.n();
  const int d = data.dim();
  const long train_count = n - cfg.test_count;

  struct Tally {
    std::vector<std::atomic<long>> hits;
    std::atomic<long> evals{0};
    std::atomic<long> failures{0};
    std::atomic<long> ok_splits{0};
    double runtime = 0.0;
    explicit Tally(std::size_t levels) : hits(levels) {
      for (auto& h : hits) h = 0;
    }
  };
  std::deque<Tally> tallies;  // deque: Tally holds atomics and cannot move
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) tallies.emplace_back(cfg.levels.size());
  std::vector<std::atomic<long>> runtime_us(cfg.methods.size());
  for (auto& r : runtime_us) r = 0;

  parallel_for(cfg.splits, [&](long split) {
    RandomStream stream = root.child(static_cast<std::uint64_t>(split) + 1);
    std::vector<long> idx(n);
    for (long i = 0; i < n; ++i) idx[i] = i;
    for (long i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<long> pick(0, i);
      std::swap(idx[i], idx[pick(stream.engine())]);
    }
    Dataset train{Eigen::MatrixXd(train_count, d), Eigen::VectorXd(train_count), data.bounds,
                  data.has_bias};
    Eigen::MatrixXd test_x(cfg.test_count, d);
    Eigen::VectorXd test_y(cfg.test_count);
    for (long i = 0; i < train_count; ++i) {
      train.x.row(i) = data.x.row(idx[i]);
      train.y[i] = data.y[idx[i]];
    }
    for (long i = 0; i < cfg.test_count; ++i) {
      test_x.row(i) = data.x.row(idx[train_count + i]);
      test_y[i] = data.y[idx[train_count + i]];
    }

    const SuffStats stats = compute_suff_stats(train);
    RandomStream release_rng = stream.child(0x11);
    PrivacySpec full{cfg.epsilon, data.bounds, 1.0};
    const NoisyStats z_full = release_suff_stats(stats, full, release_rng, data.has_bias);
    NoisyStats z_split;
    NoisyFourthMoments noisy4;
    if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::GibbsNoisy) != cfg.methods.end()) {
      PrivacySpec split_spec{cfg.epsilon, data.bounds, cfg.noisy_budget_split};
      z_split = release_suff_stats(stats, split_spec, release_rng, data.has_bias);
      noisy4 = release_fourth_moments(train, split_spec, release_rng);
    }
    const double max_abs_x = std::max(std::abs(data.bounds.x_lo), std::abs(data.bounds.x_hi));

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const Method method = cfg.methods[mi];
      RandomStream method_rng = stream.child(0x100 + static_cast<std::uint64_t>(method));
      try {
        const auto t0 = std::chrono::steady_clock::now();
        PosteriorSamples samples;
        GibbsConfig gcfg = cfg.gibbs;
        switch (method) {
          case Method::NonPrivate:
            samples = run_non_private(train, cfg.prior, cfg.exact_draws, method_rng);
            break;
          case Method::Naive:
            samples = run_naive(z_full, cfg.prior, cfg.exact_draws, method_rng);
            break;
          case Method::GibbsNoisy: {
            gcfg.method_label = method_name(method);
            const CovariateMoments m = moments_from_noisy_release(noisy4, max_abs_x);
            samples = run_gibbs(z_split, cfg.prior, m, gcfg, method_rng);
            break;
          }
          default:
            throw std::invalid_argument("run_predictive_experiment: unsupported method");
        }
        runtime_us[mi] += static_cast<long>(
            std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0)
                .count());

        for (long i = 0; i < cfg.test_count; ++i) {
          std::vector<double> preds(samples.count());
          for (long k = 0; k < samples.count(); ++k)
            preds[k] = method_rng.normal(samples.theta.row(k).dot(test_x.row(i)),
                                         std::sqrt(samples.sigma2[k]));
          for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
            const double lo = empirical_quantile(preds, (1.0 - cfg.levels[l]) / 2.0);
            const double hi = empirical_quantile(preds, (1.0 + cfg.levels[l]) / 2.0);
            if (test_y[i] >= lo && test_y[i] <= hi) tallies[mi].hits[l]++;
          }
          tallies[mi].evals++;
        }
        tallies[mi].ok_splits++;
      } catch (const std::exception&) {
        tallies[mi].failures++;
      }
    }
  });

  PredictiveResult result;
  result.methods = cfg.methods;
  result.cover.resize(cfg.methods.size());
  result.failures.resize(cfg.methods.size());
  result.mean_runtime.resize(cfg.methods.size());
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    result.failures[mi] = tallies[mi].failures.load();
    const long evals = tallies[mi].evals.load();
    result.cover[mi].resize(cfg.levels.size());
    for (std::size_t l = 0; l < cfg.levels.size(); ++l)
      result.cover[mi][l] =
          evals > 0 ? static_cast<double>(tallies[mi].hits[l].load()) / static_cast<double>(evals)
                    : 0.0;
    const long ok = tallies[mi].ok_splits.load();
    result.mean_runtime[mi] =
        ok > 0 ? static_cast<double>(runtime_us[mi].load()) * 1e-6 / static_cast<double>(ok) : 0.0;
  }
  return result;
}

}  // namespace dpreg
