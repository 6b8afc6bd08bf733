#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "dpreg/distributions.hpp"
#include "oracle_checks.hpp"

using namespace dpreg;

TEST_CASE("univariate samplers match their analytic CDFs") {
  const oracle::CheckResult r = oracle::check_univariate_samplers(2024);
  INFO(r.detail);
  REQUIRE(r.ok);
}

TEST_CASE("multivariate normal sampling reproduces mean and covariance") {
  RandomStream rng(31);
  Eigen::VectorXd mean(2);
  mean << 1.0, -1.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 1.0, 1.0, 2.0;

  const long n = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(2, 2);
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd x = mvn_sample(mean, cov, rng);
    sum += x;
    sum2 += x * x.transpose();
  }
  const Eigen::VectorXd mu = sum / static_cast<double>(n);
  const Eigen::MatrixXd c = sum2 / static_cast<double>(n) - mu * mu.transpose();
  for (int i = 0; i < 2; ++i) {
    REQUIRE(mu[i] == Catch::Approx(mean[i]).margin(4.0 * std::sqrt(cov(i, i) / n)));
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      REQUIRE(c(i, j) == Catch::Approx(cov(i, j)).margin(4.0 * se));
    }
  }
}

TEST_CASE("multivariate normal edge cases") {
  RandomStream rng(37);
  SECTION("zero covariance returns the mean exactly") {
    Eigen::VectorXd mean(3);
    mean << 4.0, -2.0, 0.5;
    const Eigen::VectorXd x = mvn_sample(mean, Eigen::MatrixXd::Zero(3, 3), rng);
    REQUIRE((x - mean).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("a singular-but-PSD covariance is handled") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 1.0, 1.0, 1.0;  // rank one
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd x = mvn_sample(mean, cov, rng);
      REQUIRE(std::abs(x[0] - x[1]) < 1e-3);  // all mass (near) the diagonal line
    }
  }
  SECTION("asymmetric covariance is rejected") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.5, -0.5, 1.0;
    REQUIRE_THROWS_AS(mvn_sample(Eigen::VectorXd::Zero(2), cov, rng), std::invalid_argument);
  }
}

TEST_CASE("inverse Wishart scalar case is an inverse gamma") {
  // p = 1, psi = 1, nu = 50: draws are 1/chi^2_50, mean 1/(nu-2) = 1/48
  RandomStream rng(41);
  const long n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double v = inverse_wishart_sample(Eigen::MatrixXd::Identity(1, 1), 50.0, rng)(0, 0);
    REQUIRE(v > 0.0);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  REQUIRE(mean == Catch::Approx(1.0 / 48.0).margin(4.0 * sd / std::sqrt(static_cast<double>(n))));
}

TEST_CASE("inverse Wishart matrix mean matches psi / (nu - p - 1)") {
  RandomStream rng(43);
  Eigen::MatrixXd psi(2, 2);
  psi << 2.0, 0.5, 0.5, 1.0;
  const double nu = 10.0;
  const long n = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(2, 2);
  for (long i = 0; i < n; ++i) {
    const Eigen::MatrixXd w = inverse_wishart_sample(psi, nu, rng);
    REQUIRE(min_eigenvalue(w) > 0.0);
    sum += w;
    sum2 += w.cwiseAbs2();
  }
  const Eigen::MatrixXd mean = sum / static_cast<double>(n);
  const Eigen::MatrixXd expected = psi / (nu - 3.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double var = sum2(i, j) / n - mean(i, j) * mean(i, j);
      REQUIRE(mean(i, j) ==
              Catch::Approx(expected(i, j)).margin(4.0 * std::sqrt(var / static_cast<double>(n))));
    }
}

TEST_CASE("normal-inverse-Wishart draws have the right first moments") {
  NiwParams p;
  p.mu0 = Eigen::VectorXd::Constant(1, 0.3);
  p.kappa0 = 2.0;
  p.psi0 = Eigen::MatrixXd::Constant(1, 1, 1.5);
  p.nu0 = 8.0;
  RandomStream rng(47);
  const long n = 100000;
  double mu_sum = 0.0, mu_sum2 = 0.0, tau_sum = 0.0, tau_sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const NiwDraw d = niw_sample(p, rng);
    mu_sum += d.mu[0];
    mu_sum2 += d.mu[0] * d.mu[0];
    tau_sum += d.tau2(0, 0);
    tau_sum2 += d.tau2(0, 0) * d.tau2(0, 0);
  }
  const double mu_mean = mu_sum / n, tau_mean = tau_sum / n;
  const double mu_sd = std::sqrt(mu_sum2 / n - mu_mean * mu_mean);
  const double tau_sd = std::sqrt(tau_sum2 / n - tau_mean * tau_mean);
  REQUIRE(mu_mean == Catch::Approx(0.3).margin(4.0 * mu_sd / std::sqrt(static_cast<double>(n))));
  // E[tau2] = psi / (nu - p - 1) = 1.5 / 6
  REQUIRE(tau_mean ==
          Catch::Approx(0.25).margin(4.0 * tau_sd / std::sqrt(static_cast<double>(n))));
}

TEST_CASE("normal-inverse-Wishart conjugate update on two observations") {
  // prior NIW(0, 1, 1, 50); data {0, 2}
  NiwParams prior;
  prior.mu0 = Eigen::VectorXd::Zero(1);
  prior.kappa0 = 1.0;
  prior.psi0 = Eigen::MatrixXd::Identity(1, 1);
  prior.nu0 = 50.0;

  const Eigen::VectorXd sum_x = Eigen::VectorXd::Constant(1, 2.0);
  const Eigen::MatrixXd scatter = Eigen::MatrixXd::Constant(1, 1, 4.0);
  const NiwParams post = niw_posterior_update(prior, 2, sum_x, scatter);
  REQUIRE(post.kappa0 == Catch::Approx(3.0));
  REQUIRE(post.mu0[0] == Catch::Approx(2.0 / 3.0));
  REQUIRE(post.nu0 == Catch::Approx(52.0));
  REQUIRE(post.psi0(0, 0) == Catch::Approx(11.0 / 3.0));

  SECTION("zero observations return the prior unchanged") {
    const NiwParams same = niw_posterior_update(prior, 0, Eigen::VectorXd::Zero(1),
                                                Eigen::MatrixXd::Zero(1, 1));
    REQUIRE(same.kappa0 == prior.kappa0);
    REQUIRE(same.mu0[0] == prior.mu0[0]);
    REQUIRE(same.nu0 == prior.nu0);
    REQUIRE(same.psi0(0, 0) == prior.psi0(0, 0));
  }
}

TEST_CASE("laplace vector sampling uses the scalar mechanism per entry") {
  RandomStream rng(53);
  Eigen::VectorXd loc(3);
  loc << -1.0, 0.0, 5.0;
  const Eigen::VectorXd x = laplace_sample(loc, 2.0, rng);
  REQUIRE(x.size() == 3);
  REQUIRE_THROWS_AS(laplace_sample(loc, 0.0, rng), std::invalid_argument);
}

TEST_CASE("parameter validation of sampler inputs") {
  RandomStream rng(59);
  REQUIRE_THROWS_AS(inverse_gaussian_sample(-1.0, 1.0, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(inverse_gaussian_sample(1.0, 0.0, rng), std::invalid_argument);

  NiwParams bad;
  bad.mu0 = Eigen::VectorXd::Zero(2);
  bad.kappa0 = 1.0;
  bad.psi0 = Eigen::MatrixXd::Identity(2, 2);
  bad.nu0 = 0.5;  // must exceed p - 1
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}
