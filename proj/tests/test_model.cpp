#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "dpreg/model.hpp"

using namespace dpreg;

namespace {

Dataset two_point_dataset() {
  Dataset d;
  d.bounds = {-1.0, 1.0, -1.0, 1.0};
  d.has_bias = true;
  d.x.resize(2, 2);
  d.x << 1.0, 0.5, 1.0, -0.5;
  d.y.resize(2);
  d.y << 1.0, -1.0;
  return d;
}

}  // namespace

TEST_CASE("sufficient statistics of a two-point dataset") {
  const SuffStats s = compute_suff_stats(two_point_dataset());
  REQUIRE(s.d == 2);
  REQUIRE(s.n == 2);
  REQUIRE(s.xtx_uniq.size() == 3);
  REQUIRE(s.xtx_uniq[0] == Catch::Approx(2.0));   // sum 1*1
  REQUIRE(s.xtx_uniq[1] == Catch::Approx(0.0));   // sum 1*x
  REQUIRE(s.xtx_uniq[2] == Catch::Approx(0.5));   // sum x*x
  REQUIRE(s.xty[0] == Catch::Approx(0.0));
  REQUIRE(s.xty[1] == Catch::Approx(1.0));
  REQUIRE(s.yty == Catch::Approx(2.0));
}

TEST_CASE("flatten and unflatten are inverse") {
  const SuffStats s = compute_suff_stats(two_point_dataset());
  const Eigen::VectorXd v = flatten(s);
  REQUIRE(v.size() == stat_dim(2));
  const SuffStats back = unflatten(v, 2, s.n);
  REQUIRE((back.xtx_uniq - s.xtx_uniq).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((back.xty - s.xty).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.yty == s.yty);
  REQUIRE(back.n == s.n);
}

TEST_CASE("gram matrix layout is [X, y]'[X, y]") {
  const Eigen::VectorXd v = flatten(compute_suff_stats(two_point_dataset()));
  const Eigen::MatrixXd g = gram_matrix(v, 2);
  Eigen::MatrixXd expected(3, 3);
  expected << 2.0, 0.0, 0.0,
              0.0, 0.5, 1.0,
              0.0, 1.0, 2.0;
  REQUIRE((g - expected).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((stats_from_gram(g) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conjugate posterior update on a one-point problem") {
  // prior NIG(mu=0, lambda=1, a=2, b=1); data x=1, y=2
  NigParams prior;
  prior.mu = Eigen::VectorXd::Zero(1);
  prior.lambda = Eigen::MatrixXd::Identity(1, 1);
  prior.a = 2.0;
  prior.b = 1.0;
  SuffStats s;
  s.d = 1;
  s.n = 1;
  s.xtx_uniq = Eigen::VectorXd::Constant(1, 1.0);
  s.xty = Eigen::VectorXd::Constant(1, 2.0);
  s.yty = 4.0;

  const NigParams post = nig_posterior_update(prior, s);
  REQUIRE(post.lambda(0, 0) == Catch::Approx(2.0));
  REQUIRE(post.mu[0] == Catch::Approx(1.0));
  REQUIRE(post.a == Catch::Approx(2.5));
  REQUIRE(post.b == Catch::Approx(2.0));
}

TEST_CASE("posterior b never shrinks below the prior b for PSD statistics") {
  RandomStream rng(17);
  NigParams prior;
  prior.mu = Eigen::VectorXd::Zero(2);
  prior.lambda = 0.2 * Eigen::MatrixXd::Identity(2, 2);
  prior.a = 2.0;
  prior.b = 0.7;
  for (int trial = 0; trial < 200; ++trial) {
    const long n = 1 + static_cast<long>(rng.uniform() * 20);
    Dataset data;
    data.bounds = {-5.0, 5.0, -5.0, 5.0};
    data.has_bias = true;
    data.x.resize(n, 2);
    data.y.resize(n);
    for (long i = 0; i < n; ++i) {
      data.x(i, 0) = 1.0;
      data.x(i, 1) = rng.normal();
      data.y[i] = rng.normal();
    }
    const NigParams post = nig_posterior_update(prior, compute_suff_stats(data));
    REQUIRE(post.b >= prior.b - 1e-10);
    REQUIRE(post.a == Catch::Approx(prior.a + 0.5 * static_cast<double>(n)));
  }
}

TEST_CASE("update rejects statistics whose precision is not positive definite") {
  NigParams prior;
  prior.mu = Eigen::VectorXd::Zero(1);
  prior.lambda = Eigen::MatrixXd::Identity(1, 1);
  prior.a = 2.0;
  prior.b = 1.0;
  Eigen::VectorXd bad(3);
  bad << -10.0, 0.0, 4.0;  // x'x = -10 (a possible noisy release)
  REQUIRE_THROWS_AS(nig_posterior_update(prior, unflatten(bad, 1, 5)), std::runtime_error);
}

TEST_CASE("prior sampling reproduces the analytic marginal moments") {
  NigParams prior;
  prior.mu = Eigen::VectorXd::Zero(2);
  prior.mu << 0.5, -1.0;
  prior.lambda = Eigen::MatrixXd::Identity(2, 2) * 0.5;
  prior.a = 6.0;
  prior.b = 2.0;
  // E[sigma2] = b/(a-1); Var(theta_j) = E[sigma2] * (lambda^-1)_jj
  const double ev_sigma2 = prior.b / (prior.a - 1.0);
  const double var_theta = ev_sigma2 * 2.0;

  RandomStream rng(23);
  const long n = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(2);
  double s_mean = 0.0;
  for (long i = 0; i < n; ++i) {
    const ParamDraw draw = nig_sample(prior, rng);
    mean += draw.theta;
    m2 += draw.theta.cwiseAbs2();
    s_mean += draw.sigma2;
  }
  mean /= static_cast<double>(n);
  s_mean /= static_cast<double>(n);
  const Eigen::VectorXd var = m2 / static_cast<double>(n) - mean.cwiseAbs2();

  for (int j = 0; j < 2; ++j) {
    REQUIRE(mean[j] == Catch::Approx(prior.mu[j]).margin(4.0 * std::sqrt(var_theta / n)));
    REQUIRE(var[j] == Catch::Approx(var_theta).epsilon(0.1));
  }
  REQUIRE(s_mean == Catch::Approx(ev_sigma2).epsilon(0.05));
}

TEST_CASE("dataset validation catches structural problems") {
  Dataset d = two_point_dataset();
  REQUIRE_NOTHROW(validate_dataset(d));

  SECTION("bias column must be all ones") {
    d.x(0, 0) = 2.0;
    REQUIRE_THROWS_AS(validate_dataset(d), std::invalid_argument);
  }
  SECTION("bounds must cover the bias value 1") {
    d.bounds = {-0.5, 0.5, -1.0, 1.0};
    REQUIRE_THROWS_AS(validate_dataset(d), std::invalid_argument);
  }
  SECTION("non-finite values are rejected") {
    d.y[0] = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(validate_dataset(d), std::invalid_argument);
  }
  SECTION("shape mismatch is rejected") {
    d.y.resize(3);
    d.y.setZero();
    REQUIRE_THROWS_AS(validate_dataset(d), std::invalid_argument);
  }
}

TEST_CASE("raw data scans are counted") {
  const auto before = raw_scan_count().load();
  compute_suff_stats(two_point_dataset());
  REQUIRE(raw_scan_count().load() == before + 1);
}

TEST_CASE("bounds validation") {
  REQUIRE_NOTHROW(Bounds{-1.0, 1.0, 0.0, 2.0}.validate());
  REQUIRE_THROWS_AS((Bounds{1.0, -1.0, 0.0, 2.0}.validate()), std::invalid_argument);
  REQUIRE(Bounds{-1.0, 1.0, 0.0, 2.0}.wx() == Catch::Approx(2.0));
  REQUIRE(Bounds{-1.0, 1.0, 0.0, 2.0}.wy() == Catch::Approx(2.0));
}
