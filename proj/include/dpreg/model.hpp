#pragma once

// Core Bayesian linear regression model: datasets with a-priori bounds,
// sufficient statistics in a fixed canonical layout, and the conjugate
// normal-inverse-gamma (NIG) posterior update
//   Lambda_n = X'X + Lambda_0
//   mu_n     = Lambda_n^-1 (X'y + Lambda_0 mu_0)
//   a_n      = a_0 + n/2
//   b_n      = b_0 + (y'y + mu_0' Lambda_0 mu_0 - mu_n' Lambda_n mu_n) / 2

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "dpreg/linalg.hpp"
#include "dpreg/random.hpp"

namespace dpreg {

// Counts full passes over raw individual-level data. Lets tests audit that
// private pipelines touch the raw data exactly once (at release time).
inline std::atomic<std::uint64_t>& raw_scan_count() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

// A-priori intervals assumed for covariates (every dimension, including a
// bias column when present) and for the response. Used for sensitivity and
// scaling; never derived from the data itself.
struct Bounds {
  double x_lo = -1.0, x_hi = 1.0;
  double y_lo = -1.0, y_hi = 1.0;

  double wx() const { return x_hi - x_lo; }
  double wy() const { return y_hi - y_lo; }

  void validate() const {
    if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw std::invalid_argument("Bounds: intervals must have positive width");
  }
};

struct Dataset {
  Eigen::MatrixXd x;  // n rows, d columns; column 0 identically 1 when has_bias
  Eigen::VectorXd y;  // n
  Bounds bounds;
  bool has_bias = false;

  long n() const { return static_cast<long>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

inline void validate_dataset(const Dataset& data) {
  if (data.dim() < 1) throw std::invalid_argument("Dataset: need at least one covariate column");
  if (data.x.rows() != data.y.size()) throw std::invalid_argument("Dataset: x rows and y length differ");
  if (!data.x.allFinite() || !data.y.allFinite()) throw std::invalid_argument("Dataset: non-finite values");
  data.bounds.validate();
  if (data.has_bias && data.n() > 0 && (data.x.col(0).array() != 1.0).any())
    throw std::invalid_argument("Dataset: bias column must be identically one");
  if (data.has_bias && (data.bounds.x_lo > 1.0 || data.bounds.x_hi < 1.0))
    throw std::invalid_argument("Dataset: covariate bounds must cover the bias value 1");
}

// Sufficient statistics of the regression: unique entries of X'X in
// row-major upper-triangle order, X'y, and y'y. The public count n rides
// along; it is not part of the released vector.
struct SuffStats {
  int d = 0;
  long n = 0;
  Eigen::VectorXd xtx_uniq;
  Eigen::VectorXd xty;
  double yty = 0.0;
};

// Dimension of the flattened statistic vector [uniq(X'X), X'y, y'y].
inline int stat_dim(int d) { return pair_count(d) + d + 1; }

inline SuffStats compute_suff_stats(const Dataset& data) {
  validate_dataset(data);
  raw_scan_count()++;
  SuffStats s;
  s.d = data.dim();
  s.n = data.n();
  s.xtx_uniq = upper_from_sym(data.x.transpose() * data.x);
  s.xty = data.x.transpose() * data.y;
  s.yty = data.y.squaredNorm();
  return s;
}

inline Eigen::VectorXd flatten(const SuffStats& s) {
  Eigen::VectorXd v(stat_dim(s.d));
  v.head(s.xtx_uniq.size()) = s.xtx_uniq;
  v.segment(s.xtx_uniq.size(), s.d) = s.xty;
  v[v.size() - 1] = s.yty;
  return v;
}

inline SuffStats unflatten(const Eigen::VectorXd& v, int d, long n) {
  if (v.size() != stat_dim(d)) throw std::invalid_argument("unflatten: size mismatch");
  SuffStats s;
  s.d = d;
  s.n = n;
  s.xtx_uniq = v.head(pair_count(d));
  s.xty = v.segment(pair_count(d), d);
  s.yty = v[v.size() - 1];
  return s;
}

// (d+1) x (d+1) Gram matrix [[X'X, X'y], [y'X, y'y]] of a flattened
// statistic vector; PSD whenever the statistics come from a real dataset.
inline Eigen::MatrixXd gram_matrix(const Eigen::VectorXd& v, int d) {
  if (v.size() != stat_dim(d)) throw std::invalid_argument("gram_matrix: size mismatch");
  Eigen::MatrixXd g(d + 1, d + 1);
  g.topLeftCorner(d, d) = sym_from_upper(v.head(pair_count(d)), d);
  g.block(0, d, d, 1) = v.segment(pair_count(d), d);
  g.block(d, 0, 1, d) = v.segment(pair_count(d), d).transpose();
  g(d, d) = v[v.size() - 1];
  return g;
}

inline Eigen::VectorXd stats_from_gram(const Eigen::MatrixXd& g) {
  const int d = static_cast<int>(g.rows()) - 1;
  Eigen::VectorXd v(stat_dim(d));
  v.head(pair_count(d)) = upper_from_sym(g.topLeftCorner(d, d));
  v.segment(pair_count(d), d) = g.block(0, d, d, 1);
  v[v.size() - 1] = g(d, d);
  return v;
}

// NIG(mu, lambda, a, b): theta | sigma2 ~ N(mu, sigma2 * lambda^-1),
// sigma2 ~ InverseGamma(a, b). lambda is a precision-scaling matrix.
struct NigParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd lambda;
  double a = 0.0;
  double b = 0.0;

  void validate() const {
    const int d = static_cast<int>(mu.size());
    if (lambda.rows() != d || lambda.cols() != d) throw std::invalid_argument("NigParams: shape mismatch");
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("NigParams: a and b must be > 0");
  }
};

struct ParamDraw {
  Eigen::VectorXd theta;
  double sigma2 = 0.0;
};

// Conjugate update from (possibly noisy or latent) statistics. Throws if
// Lambda_n is not positive definite; the returned b may be non-positive when
// the statistics are inconsistent -- callers decide how to repair.
inline NigParams nig_posterior_update(const NigParams& prior, const SuffStats& stats) {
  const int d = static_cast<int>(prior.mu.size());
  if (stats.d != d) throw std::invalid_argument("nig_posterior_update: dimension mismatch");
  NigParams post;
  post.lambda = sym_from_upper(stats.xtx_uniq, d) + prior.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(post.lambda);
  if (llt.info() != Eigen::Success) throw std::runtime_error("nig_posterior_update: Lambda_n not positive definite");
  post.mu = llt.solve(stats.xty + prior.lambda * prior.mu);
  post.a = prior.a + 0.5 * static_cast<double>(stats.n);
  post.b = prior.b + 0.5 * (stats.yty + prior.mu.dot(prior.lambda * prior.mu) -
                            post.mu.dot(post.lambda * post.mu));
  return post;
}

// Joint draw (theta, sigma2) ~ NIG(params).
inline ParamDraw nig_sample(const NigParams& params, RandomStream& rng) {
  params.validate();
  const int d = static_cast<int>(params.mu.size());
  ParamDraw draw;
  draw.sigma2 = params.b / rng.gamma(params.a, 1.0);  // 1/Gamma(a, 1/b)
  Eigen::LLT<Eigen::MatrixXd> llt(params.lambda);
  if (llt.info() != Eigen::Success) throw std::runtime_error("nig_sample: lambda not positive definite");
  Eigen::VectorXd zvec(d);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (int i = 0; i < d; ++i) zvec[i] = std_normal(rng.engine());
  // cov = sigma2 * lambda^-1; L' x = z gives x ~ N(0, lambda^-1)
  draw.theta = params.mu + std::sqrt(draw.sigma2) *
                               llt.matrixU().solve(zvec);
  return draw;
}

}  // namespace dpreg
