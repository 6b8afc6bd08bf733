#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "dpreg/moments.hpp"
#include "dpreg/privacy.hpp"
#include "oracle_checks.hpp"

using namespace dpreg;

TEST_CASE("CLT parameters match Monte Carlo on exactly enumerable covariates") {
  const oracle::CheckResult r = oracle::check_clt_params_against_mc(77);
  INFO(r.detail);
  REQUIRE(r.ok);
}

TEST_CASE("Gaussian fourth moments match Monte Carlo") {
  const oracle::CheckResult r = oracle::check_isserlis_against_mc(79);
  INFO(r.detail);
  REQUIRE(r.ok);
}

TEST_CASE("hand-checked covariance table for the scalar model") {
  // x ~ N(0,1), theta = 1, sigma^2 = 1, y = x + e:
  // t = (x^2, xy, y^2) has mean (1, 1, 2) and covariance
  //   [2 2 2; 2 3 4; 2 4 8]
  CovariateMoments m;
  m.d = 1;
  m.bias = false;
  m.eta2 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.eta4 = Eigen::VectorXd::Constant(1, 3.0);
  const CltParams clt = assemble_clt_params(Eigen::VectorXd::Constant(1, 1.0), 1.0, m);

  Eigen::VectorXd mean(3);
  mean << 1.0, 1.0, 2.0;
  Eigen::MatrixXd cov(3, 3);
  cov << 2.0, 2.0, 2.0,
         2.0, 3.0, 4.0,
         2.0, 4.0, 8.0;
  REQUIRE((clt.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((clt.cov - cov).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembled covariance is symmetric and PSD for sample moments") {
  RandomStream rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    const long n = 50;
    Dataset data;
    data.bounds = {-2.0, 2.0, -2.0, 2.0};
    data.has_bias = true;
    data.x.resize(n, 2);
    data.y.resize(n);
    for (long i = 0; i < n; ++i) {
      data.x(i, 0) = 1.0;
      data.x(i, 1) = rng.normal() * 0.5;
      data.y[i] = rng.normal() * 0.5;
    }
    const CovariateMoments m = moments_from_samples(data);
    Eigen::VectorXd theta(2);
    theta << rng.normal(), rng.normal();
    const CltParams clt = assemble_clt_params(theta, 0.5 + rng.uniform(), m);
    REQUIRE((clt.cov - clt.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(min_eigenvalue(clt.cov) > -1e-8 * std::max(1.0, clt.cov.trace()));
  }
}

TEST_CASE("sample moments equal direct enumeration") {
  Dataset data;
  data.bounds = {-1.0, 1.0, -1.0, 1.0};
  data.has_bias = true;
  data.x.resize(2, 2);
  data.x << 1.0, 0.5, 1.0, -0.25;
  data.y.resize(2);
  data.y << 0.0, 0.0;
  const CovariateMoments m = moments_from_samples(data);
  REQUIRE(m.d == 2);
  REQUIRE(m.bias);
  REQUIRE(m.eta2(0, 0) == Catch::Approx(1.0));
  REQUIRE(m.eta2(0, 1) == Catch::Approx(0.125));           // mean of x
  REQUIRE(m.eta2(1, 1) == Catch::Approx((0.25 + 0.0625) / 2.0));
  const QuarticIndex qi(2);
  REQUIRE(m.eta4[qi.rank(1, 1, 1, 1)] ==
          Catch::Approx((std::pow(0.5, 4) + std::pow(-0.25, 4)) / 2.0).margin(1e-12));
  REQUIRE(m.eta4[qi.rank(0, 0, 1, 1)] == Catch::Approx(m.eta2(1, 1)).margin(1e-12));
}

TEST_CASE("bias-aware Gaussian moments satisfy the contraction identities") {
  Eigen::VectorXd mean(2);
  mean << 0.4, -0.2;
  Eigen::MatrixXd cov(2, 2);
  cov << 0.6, 0.1, 0.1, 0.3;
  const CovariateMoments m = mvn_fourth_moments_with_bias(mean, cov);
  REQUIRE(m.d == 3);
  REQUIRE(m.bias);
  REQUIRE(m.eta2(0, 0) == Catch::Approx(1.0));
  for (int j = 0; j < 2; ++j) REQUIRE(m.eta2(0, j + 1) == Catch::Approx(mean[j]));

  const QuarticIndex qi(3);
  for (int j = 0; j < 3; ++j)
    for (int k = j; k < 3; ++k)
      REQUIRE(m.eta4[qi.rank(0, 0, j, k)] == Catch::Approx(m.eta2(j, k)).margin(1e-12));
  REQUIRE_NOTHROW(m.validate());
}

TEST_CASE("prior Monte Carlo moments agree with closed-form Gaussian moments") {
  Eigen::VectorXd mean(1);
  mean << 0.5;
  Eigen::MatrixXd cov(1, 1);
  cov << 0.4;
  const CovariateMoments exact = mvn_fourth_moments_with_bias(mean, cov);

  RandomStream rng(89);
  const CovariateMoments mc = moments_from_prior_mc(
      [&](RandomStream& r) {
        Eigen::VectorXd x(2);
        x[0] = 1.0;
        x[1] = r.normal(0.5, std::sqrt(0.4));
        return x;
      },
      2, true, 400000, rng);
  REQUIRE((mc.eta2 - exact.eta2).cwiseAbs().maxCoeff() < 0.01);
  REQUIRE((mc.eta4 - exact.eta4).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("noisy-release moments reduce to sample moments at zero noise") {
  RandomStream rng(97);
  const long n = 40;
  Dataset data;
  data.bounds = {-1.0, 1.0, -1.0, 1.0};
  data.has_bias = true;
  data.x.resize(n, 2);
  data.y.resize(n);
  for (long i = 0; i < n; ++i) {
    data.x(i, 0) = 1.0;
    data.x(i, 1) = rng.uniform() * 2.0 - 1.0;
    data.y[i] = rng.uniform() * 2.0 - 1.0;
  }
  NoisyFourthMoments noisy;
  noisy.d = 2;
  noisy.n = n;
  noisy.bias = true;
  noisy.scale = 1e-12;
  noisy.sums = fourth_moment_sums(data);

  const CovariateMoments repaired = moments_from_noisy_release(noisy, 1.0);
  const CovariateMoments direct = moments_from_samples(data);
  REQUIRE((repaired.eta2 - direct.eta2).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE((repaired.eta4 - direct.eta4).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE_NOTHROW(repaired.validate());
}

TEST_CASE("noisy-release moments stay bounded under extreme noise") {
  RandomStream rng(101);
  NoisyFourthMoments noisy;
  noisy.d = 2;
  noisy.n = 10;
  noisy.bias = true;
  noisy.scale = 1600.0;
  noisy.sums.resize(5);
  noisy.sums << 4000.0, -2500.0, 900.0, -3100.0, 2200.0;  // pure noise

  const CovariateMoments m = moments_from_noisy_release(noisy, 1.0);
  REQUIRE_NOTHROW(m.validate());
  // clipped to |sum| <= n * max|x|^4 = 10, then normalized and repaired;
  // the PSD repair floors the centered block at 1e-8, which can push the
  // normalized entries that far past 1
  REQUIRE(m.eta4.cwiseAbs().maxCoeff() <= 1.0 + 2e-8);
  REQUIRE(m.eta2(0, 0) == Catch::Approx(1.0));
  REQUIRE(min_eigenvalue(m.eta2) > 0.0);

  SECTION("repair keeps the second-moment matrix consistent with eta4") {
    const QuarticIndex qi(2);
    for (int j = 0; j < 2; ++j)
      for (int k = j; k < 2; ++k)
        REQUIRE(m.eta4[qi.rank(0, 0, j, k)] == Catch::Approx(m.eta2(j, k)).margin(1e-12));
  }
}

TEST_CASE("xi matrix is symmetric") {
  RandomStream rng(103);
  Eigen::VectorXd mean(2);
  mean << 0.2, -0.4;
  Eigen::MatrixXd cov(2, 2);
  cov << 0.5, 0.1, 0.1, 0.4;
  const CovariateMoments m = mvn_fourth_moments(mean, cov);
  const Eigen::MatrixXd xi = xi_matrix(m);
  REQUIRE(xi.rows() == pair_count(2));
  REQUIRE((xi - xi.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("moment validation catches inconsistent shapes") {
  CovariateMoments m;
  m.d = 2;
  m.bias = false;
  m.eta2 = Eigen::MatrixXd::Identity(2, 2);
  m.eta4 = Eigen::VectorXd::Zero(4);  // should be 5
  REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
}
