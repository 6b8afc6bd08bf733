#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <vector>

#include "dpreg/baselines.hpp"
#include "oracle_checks.hpp"

using namespace dpreg;

namespace {

Dataset small_dataset(long n, unsigned long seed) {
  RandomStream rng(seed);
  Dataset data;
  data.bounds = {-1.0, 1.0, -1.0, 1.0};
  data.has_bias = true;
  data.x.resize(n, 2);
  data.y.resize(n);
  for (long i = 0; i < n; ++i) {
    data.x(i, 0) = 1.0;
    data.x(i, 1) = rng.uniform() * 2.0 - 1.0;
    data.y[i] = std::clamp(0.3 * data.x(i, 1) + 0.2 * rng.normal(), -1.0, 1.0);
  }
  return data;
}

NigParams unit_prior(int d) {
  NigParams prior;
  prior.mu = Eigen::VectorXd::Zero(d);
  prior.lambda = Eigen::MatrixXd::Identity(d, d);
  prior.a = 3.0;
  prior.b = 1.0;
  return prior;
}

NiwParams unit_cov_prior(int p) {
  NiwParams prior;
  prior.mu0 = Eigen::VectorXd::Zero(p);
  prior.kappa0 = 1.0;
  prior.psi0 = Eigen::MatrixXd::Identity(p, p);
  prior.nu0 = p + 3.0;
  return prior;
}

NoisyStats exact_release(const Dataset& data, double scale) {
  NoisyStats z;
  z.d = data.dim();
  z.n = data.n();
  z.bias = data.has_bias;
  z.z = flatten(compute_suff_stats(data));
  z.scale = scale;
  return z;
}

}  // namespace

TEST_CASE("non-private sampler matches the analytic posterior moments") {
  const Dataset data = small_dataset(40, 211);
  const NigParams prior = unit_prior(2);
  const NigParams post = nig_posterior_update(prior, compute_suff_stats(data));
  RandomStream rng(223);
  const long count = 100000;
  const PosteriorSamples out = run_non_private(data, prior, count, rng);
  REQUIRE(out.count() == count);
  REQUIRE(out.meta.method == "non-private");

  const Eigen::MatrixXd lambda_inv =
      post.lambda.ldlt().solve(Eigen::MatrixXd::Identity(2, 2));
  const double e_sigma2 = post.b / (post.a - 1.0);
  for (int j = 0; j < 2; ++j) {
    const double mean = out.theta.col(j).mean();
    const double var =
        (out.theta.col(j).array() - mean).square().sum() / static_cast<double>(count - 1);
    // theta_j is Student-t with 2a dof, location mu_j, scale sqrt(b/a * Linv_jj),
    // so Var(theta_j) = b/(a-1) * Linv_jj.
    const double t_var = post.b / (post.a - 1.0) * lambda_inv(j, j);
    const double se = std::sqrt(t_var / static_cast<double>(count));
    REQUIRE(mean == Catch::Approx(post.mu[j]).margin(6.0 * se));
    REQUIRE(var == Catch::Approx(t_var).epsilon(0.05));
  }
  const double s2_mean = out.sigma2.mean();
  REQUIRE(s2_mean == Catch::Approx(e_sigma2).epsilon(0.02));
}

TEST_CASE("naive update on a noiseless release equals the exact posterior") {
  const Dataset data = small_dataset(25, 227);
  const NigParams prior = unit_prior(2);
  const NoisyStats z = exact_release(data, 1e-9);

  RandomStream r1(229), r2(229);
  const PosteriorSamples exact = run_non_private(data, prior, 500, r1);
  const PosteriorSamples naive = run_naive(z, prior, 500, r2);
  REQUIRE((exact.theta - naive.theta).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((exact.sigma2 - naive.sigma2).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(naive.meta.method == "naive");
  REQUIRE(naive.meta.info.at("psd_repair") == 0.0);
}

TEST_CASE("naive update repairs an indefinite release and records it") {
  NoisyStats z;
  z.d = 1;
  z.n = 5;
  z.scale = 12.0;
  z.z.resize(3);
  z.z << -10.0, 0.0, 1.0;  // x'x < 0: conjugate update undefined as-is
  RandomStream rng(233);
  const PosteriorSamples out = run_naive(z, unit_prior(1), 200, rng);
  REQUIRE(out.count() == 200);
  REQUIRE(out.meta.info.at("psd_repair") == 1.0);
  REQUIRE((out.sigma2.array() > 0.0).all());
}

TEST_CASE("incremental statistics stay in lockstep with full recomputes") {
  const Dataset data = small_dataset(15, 239);
  NoisyStats z = exact_release(data, 0.5);
  IndConfig cfg;
  cfg.refresh_every = 5;
  IndSampler sampler(z, unit_prior(2), unit_cov_prior(1), cfg);
  RandomStream rng(241);
  sampler.init(rng);
  for (int sweep = 0; sweep < 300; ++sweep) {
    sampler.sweep_individuals(rng);
    sampler.update_params(rng);
    sampler.update_covariate_params(rng);
  }
  REQUIRE(sampler.max_refresh_drift() <= 1e-8);
}

TEST_CASE("individual moves satisfy detailed balance against the exact target") {
  // One latent individual, parameters frozen: the sweep kernel must leave
  //   p(x | mu, tau2) p(y | x, theta, sigma2) prod_k Lap(z_k - t_k(x, y); b)
  // invariant. Compare the long-run histogram on a grid with the target
  // integrated over the same cells.
  NoisyStats z;
  z.d = 1;
  z.n = 1;
  z.bias = false;
  z.scale = 1.0;
  z.z.resize(3);
  z.z << 1.0, 0.4, 0.8;

  const double theta = 0.5, sigma2 = 0.5, mu_x = 0.0, tau2 = 1.0;

  IndConfig cfg;
  cfg.init_scale = 0.8;
  cfg.refresh_every = 1000;
  IndSampler sampler(z, unit_prior(1), unit_cov_prior(1), cfg);
  sampler.set_params(Eigen::VectorXd::Constant(1, theta), sigma2);
  sampler.set_covariate_params(Eigen::VectorXd::Constant(1, mu_x),
                               Eigen::MatrixXd::Constant(1, 1, tau2));
  sampler.set_data(Eigen::MatrixXd::Constant(1, 1, 0.3), Eigen::VectorXd::Constant(1, 0.2));

  const int cells = 40;
  const double lo = -3.0, hi = 3.0;
  const double h = (hi - lo) / cells;

  const auto log_target = [&](double x, double y) {
    const double t0 = x * x, t1 = x * y, t2 = y * y;
    double lp = -0.5 * (x - mu_x) * (x - mu_x) / tau2 -
                0.5 * (y - theta * x) * (y - theta * x) / sigma2;
    lp -= (std::abs(z.z[0] - t0) + std::abs(z.z[1] - t1) + std::abs(z.z[2] - t2)) / z.scale;
    return lp;
  };

  // Exact cell masses via 5x5 midpoint refinement inside each cell.
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(cells, cells);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) {
      double mass = 0.0;
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
          const double x = lo + (i + (a + 0.5) / 5.0) * h;
          const double y = lo + (j + (b + 0.5) / 5.0) * h;
          mass += std::exp(log_target(x, y));
        }
      target(i, j) = mass;
    }
  target /= target.sum();

  RandomStream rng(251);
  for (int warm = 0; warm < 20000; ++warm) sampler.sweep_individuals(rng);

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(cells, cells);
  const long sweeps = 2000000;
  long kept = 0;
  for (long s = 0; s < sweeps; ++s) {
    sampler.sweep_individuals(rng);
    const double x = sampler.x()(0, 0);
    const double y = sampler.y()[0];
    const int i = static_cast<int>(std::floor((x - lo) / h));
    const int j = static_cast<int>(std::floor((y - lo) / h));
    if (i >= 0 && i < cells && j >= 0 && j < cells) {
      counts(i, j) += 1.0;
      ++kept;
    }
  }
  REQUIRE(kept > sweeps * 0.99);
  counts /= static_cast<double>(kept);
  const double tv = 0.5 * (counts - target).cwiseAbs().sum();
  INFO("total variation distance " << tv);
  REQUIRE(tv < 0.025);
}

TEST_CASE("conditional parameter updates match the conjugate draws") {
  const Dataset data = small_dataset(20, 257);
  const NoisyStats z = exact_release(data, 0.7);
  const NigParams prior = unit_prior(2);
  const NiwParams cov_prior = unit_cov_prior(1);

  IndSampler sampler(z, prior, cov_prior, IndConfig{});
  sampler.set_params(Eigen::VectorXd::Zero(2), 1.0);
  sampler.set_covariate_params(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  sampler.set_data(data.x, data.y);

  SECTION("regression parameters") {
    RandomStream ra(263), rb(263);
    sampler.update_params(ra);
    const ParamDraw expected =
        draw_params_given_stats(flatten(compute_suff_stats(data)), z.n, 2, prior, 1e-8, rb);
    REQUIRE((sampler.theta() - expected.theta).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(sampler.sigma2() == expected.sigma2);
  }

  SECTION("covariate hyperparameters") {
    RandomStream ra(269), rb(269);
    sampler.update_covariate_params(ra);
    const Eigen::MatrixXd real = data.x.rightCols(1);
    const NiwParams post = niw_posterior_update(
        cov_prior, z.n, real.colwise().sum().transpose(), real.transpose() * real);
    const NiwDraw expected = niw_sample(post, rb);
    REQUIRE((sampler.mu_x() - expected.mu).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((sampler.tau2() - expected.tau2).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("with negligible noise the chain recovers the conjugate marginals") {
  // Pin the latent data at the real records with an essentially exact
  // release: individual moves are all rejected, so the parameter draws are
  // iid from the conjugate posterior at the true statistics.
  const Dataset data = small_dataset(30, 271);
  const NoisyStats z = exact_release(data, 1e-7);
  const NigParams prior = unit_prior(2);
  const NigParams post = nig_posterior_update(prior, compute_suff_stats(data));

  IndSampler sampler(z, prior, unit_cov_prior(1), IndConfig{});
  sampler.set_params(Eigen::VectorXd::Zero(2), 1.0);
  sampler.set_covariate_params(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  sampler.set_data(data.x, data.y);

  RandomStream rng(277);
  const long draws = 2000;
  Eigen::MatrixXd theta(draws, 2);
  for (long i = 0; i < draws; ++i) {
    sampler.sweep_individuals(rng);
    sampler.update_params(rng);
    sampler.update_covariate_params(rng);
    theta.row(i) = sampler.theta().transpose();
  }
  REQUIRE((sampler.stats() - z.z).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd lambda_inv =
      post.lambda.ldlt().solve(Eigen::MatrixXd::Identity(2, 2));
  for (int j = 0; j < 2; ++j) {
    const boost::math::students_t t_dist(2.0 * post.a);
    const double scale = std::sqrt(post.b / post.a * lambda_inv(j, j));
    std::vector<double> u(draws);
    for (long i = 0; i < draws; ++i)
      u[static_cast<std::size_t>(i)] = boost::math::cdf(t_dist, (theta(i, j) - post.mu[j]) / scale);
    REQUIRE(ks_statistic(u) < ks_critical(0.01, draws));
  }
}

TEST_CASE("full latent-individual run adapts and reports diagnostics") {
  const Dataset data = small_dataset(12, 281);
  RandomStream release_rng(283);
  const PrivacySpec spec{0.5, data.bounds, 1.0};
  const NoisyStats z = release_suff_stats(compute_suff_stats(data), spec, release_rng, true);

  IndConfig cfg;
  cfg.burnin = 400;
  cfg.samples = 600;
  RandomStream rng(293);
  const PosteriorSamples out = run_mcmc_ind(z, unit_prior(2), unit_cov_prior(1), cfg, rng);
  REQUIRE(out.count() == 600);
  REQUIRE(out.meta.method == "mcmc-ind");
  REQUIRE(out.theta.allFinite());
  REQUIRE((out.sigma2.array() > 0.0).all());
  const double accept = out.meta.info.at("accept_rate");
  REQUIRE(accept > 0.05);
  REQUIRE(accept < 0.80);
  REQUIRE(out.meta.info.at("max_refresh_drift") <= 1e-8);
}
