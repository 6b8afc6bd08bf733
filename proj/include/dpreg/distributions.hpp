#pragma once

// Samplers beyond the scalar basics: multivariate normal with PSD repair,
// Laplace, inverse Gaussian (Michael-Schucany-Haas), and the
// normal-inverse-Wishart conjugate family used for covariate models.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "dpreg/linalg.hpp"
#include "dpreg/random.hpp"

namespace dpreg {

// Draw from N(mean, cov). cov must be symmetric up to round-off; tiny
// negative eigenvalues (within 1e-10 * trace) are floored before factoring.
// A zero covariance returns the mean exactly.
inline Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                  RandomStream& rng) {
  const int d = static_cast<int>(mean.size());
  if (cov.rows() != d || cov.cols() != d) throw std::invalid_argument("mvn_sample: shape mismatch");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (((cov - cov.transpose()).cwiseAbs().maxCoeff()) > 1e-6 * scale)
    throw std::invalid_argument("mvn_sample: covariance not symmetric");

  Eigen::VectorXd zvec(d);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (int i = 0; i < d; ++i) zvec[i] = std_normal(rng.engine());

  Eigen::MatrixXd sym = (cov + cov.transpose()) * 0.5;
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return mean + llt.matrixL() * zvec;

  // Not numerically PD: floor the spectrum and use the eigen square root.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("mvn_sample: eigensolver failed");
  const double floor = 1e-10 * std::max(sym.trace(), 0.0);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  if (ev.maxCoeff() <= 0.0) return mean;  // zero covariance
  return mean + es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * zvec;
}

inline double laplace_sample(double loc, double scale, RandomStream& rng) {
  if (!(scale > 0.0)) throw std::invalid_argument("laplace_sample: scale must be > 0");
  const double u = rng.uniform() - 0.5;
  const double mag = std::log(1.0 - 2.0 * std::abs(u));
  return loc + (u < 0.0 ? scale * mag : -scale * mag);
}

inline Eigen::VectorXd laplace_sample(const Eigen::VectorXd& loc, double scale, RandomStream& rng) {
  Eigen::VectorXd out(loc.size());
  for (Eigen::Index i = 0; i < loc.size(); ++i) out[i] = laplace_sample(loc[i], scale, rng);
  return out;
}

// Inverse Gaussian IG(mu, lambda) via the Michael-Schucany-Haas
// transformation with the final uniform choice between roots.
inline double inverse_gaussian_sample(double mu, double lambda, RandomStream& rng) {
  if (!(mu > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("inverse_gaussian_sample: mu and lambda must be > 0");
  const double nu = rng.normal();
  const double y = nu * nu;
  const double x = mu + mu * mu * y / (2.0 * lambda) -
                   (mu / (2.0 * lambda)) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  if (rng.uniform() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

inline double inverse_gamma_sample(double shape, double scale, RandomStream& rng) {
  return scale / rng.gamma(shape, 1.0);
}

// NIW(mu0, kappa0, psi0, nu0): tau2 ~ InverseWishart(psi0, nu0),
// mu | tau2 ~ N(mu0, tau2 / kappa0).
struct NiwParams {
  Eigen::VectorXd mu0;
  double kappa0 = 1.0;
  Eigen::MatrixXd psi0;
  double nu0 = 0.0;

  int p() const { return static_cast<int>(mu0.size()); }

  void validate() const {
    if (psi0.rows() != p() || psi0.cols() != p()) throw std::invalid_argument("NiwParams: shape mismatch");
    if (!(kappa0 > 0.0)) throw std::invalid_argument("NiwParams: kappa0 must be > 0");
    if (!(nu0 > p() - 1)) throw std::invalid_argument("NiwParams: nu0 must exceed p - 1");
  }
};

struct NiwDraw {
  Eigen::VectorXd mu;
  Eigen::MatrixXd tau2;
};

// Inverse Wishart IW(psi, nu) via the Bartlett decomposition: with
// W = F A A' F' ~ Wishart(psi^-1, nu), the inverse is X'X for the
// triangular solve A X = L' where psi = L L'.
inline Eigen::MatrixXd inverse_wishart_sample(const Eigen::MatrixXd& psi, double nu,
                                              RandomStream& rng) {
  const int p = static_cast<int>(psi.rows());
  if (psi.cols() != p) throw std::invalid_argument("inverse_wishart_sample: psi not square");
  if (!(nu > p - 1)) throw std::invalid_argument("inverse_wishart_sample: nu must exceed p - 1");
  Eigen::LLT<Eigen::MatrixXd> llt((psi + psi.transpose()) * 0.5);
  if (llt.info() != Eigen::Success) throw std::runtime_error("inverse_wishart_sample: psi not positive definite");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (int i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(nu - i));
    for (int j = 0; j < i; ++j) a(i, j) = std_normal(rng.engine());
  }
  Eigen::MatrixXd lt = llt.matrixL().transpose();
  Eigen::MatrixXd x = a.triangularView<Eigen::Lower>().solve(lt);
  Eigen::MatrixXd out = x.transpose() * x;
  symmetrize(out);
  return out;
}

inline NiwDraw niw_sample(const NiwParams& params, RandomStream& rng) {
  params.validate();
  NiwDraw draw;
  draw.tau2 = inverse_wishart_sample(params.psi0, params.nu0, rng);
  draw.mu = mvn_sample(params.mu0, draw.tau2 / params.kappa0, rng);
  return draw;
}

// Conjugate NIW update from the summaries (n, sum_x, scatter_xx) with
// scatter_xx = sum_i x_i x_i'. n = 0 returns the prior unchanged.
inline NiwParams niw_posterior_update(const NiwParams& prior, long n, const Eigen::VectorXd& sum_x,
                                      const Eigen::MatrixXd& scatter_xx) {
  prior.validate();
  const int p = prior.p();
  if (sum_x.size() != p || scatter_xx.rows() != p || scatter_xx.cols() != p)
    throw std::invalid_argument("niw_posterior_update: shape mismatch");
  if (n < 0) throw std::invalid_argument("niw_posterior_update: n must be >= 0");
  if (n == 0) return prior;

  const double nd = static_cast<double>(n);
  NiwParams post;
  post.kappa0 = prior.kappa0 + nd;
  post.mu0 = (prior.kappa0 * prior.mu0 + sum_x) / post.kappa0;
  post.nu0 = prior.nu0 + nd;
  const Eigen::VectorXd xbar = sum_x / nd;
  Eigen::MatrixXd centered = scatter_xx - sum_x * sum_x.transpose() / nd;
  post.psi0 = prior.psi0 + centered +
              (prior.kappa0 * nd / post.kappa0) * (xbar - prior.mu0) * (xbar - prior.mu0).transpose();
  symmetrize(post.psi0);
  return post;
}

}  // namespace dpreg
