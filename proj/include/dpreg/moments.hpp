#pragma once

// Population moments of the covariate vector and the central-limit normal
// approximation to the sufficient-statistic distribution.
//
// With eta_ij = E[x_i x_j], eta_ijkl = E[x_i x_j x_k x_l] and
// xi_{ij,kl} = eta_ijkl - eta_ij eta_kl, a single observation's statistic
// t(x, y) = [x_i x_j (i<=j), x_i y, y^2] under y = theta'x + N(0, sigma2) has
//   E[x_i y]            = sum_j theta_j eta_ij
//   E[y^2]              = sigma2 + theta' eta2 theta
//   Cov(x_i x_j, x_k x_l) = xi_{ij,kl}
//   Cov(x_i x_j, x_k y) = sum_l theta_l xi_{ij,kl}
//   Cov(x_i x_j, y^2)   = sum_{k,l} theta_k theta_l xi_{ij,kl}
//   Cov(x_i y, x_j y)   = sigma2 eta_ij + sum_{k,l} theta_k theta_l xi_{ik,jl}
//   Cov(x_i y, y^2)     = sum_{j,k,l} theta_j theta_k theta_l xi_{ij,kl}
//                         + 2 sigma2 sum_j theta_j eta_ij
//   Var(y^2)            = 2 sigma2^2
//                         + sum_{i,j,k,l} theta_i theta_j theta_k theta_l xi_{ij,kl}
//                         + 4 sigma2 theta' eta2 theta
// The statistic of n records is approximately N(n mu_t, n Sigma_t).

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "dpreg/linalg.hpp"
#include "dpreg/model.hpp"
#include "dpreg/privacy.hpp"
#include "dpreg/random.hpp"

namespace dpreg {

struct CovariateMoments {
  int d = 0;
  bool bias = false;          // coordinate 0 is the constant 1
  Eigen::MatrixXd eta2;       // d x d second moments
  Eigen::VectorXd eta4;       // fourth moments in multiset order

  void validate() const {
    if (eta2.rows() != d || eta2.cols() != d) throw std::invalid_argument("CovariateMoments: eta2 shape");
    if (eta4.size() != QuarticIndex(d).size()) throw std::invalid_argument("CovariateMoments: eta4 size");
  }
};

// Per-record mean and covariance of t(x, y).
struct CltParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

namespace detail {

// Enforce the identities implied by a constant bias coordinate: eta_00 = 1,
// eta_00jk = eta_jk (covers eta_000j = eta_0j), and keep eta2 PSD by
// flooring the Schur complement of the bias entry -- clamping the centered
// covariate block guarantees PSD without disturbing eta_00 afterwards.
inline void repair_bias_moments(CovariateMoments& m) {
  const int d = m.d;
  const int p = d - 1;
  Eigen::MatrixXd eta2 = (m.eta2 + m.eta2.transpose()) * 0.5;
  Eigen::MatrixXd fixed(d, d);
  fixed(0, 0) = 1.0;
  if (p > 0) {
    const Eigen::VectorXd mean = eta2.block(1, 0, p, 1);
    Eigen::MatrixXd centered = eta2.block(1, 1, p, p) - mean * mean.transpose();
    centered = clamp_eigenvalues(centered, 1e-8);
    fixed.block(1, 0, p, 1) = mean;
    fixed.block(0, 1, 1, p) = mean.transpose();
    fixed.block(1, 1, p, p) = centered + mean * mean.transpose();
  }
  m.eta2 = fixed;

  const QuarticIndex qi(d);
  for (int e = 0; e < qi.size(); ++e) {
    const auto& q = qi.entry(e);
    if (q[0] == 0 && q[1] == 0) m.eta4[e] = m.eta2(q[2], q[3]);
  }
}

}  // namespace detail

// Exact fourth moments of a multivariate normal x ~ N(mean, cov) by the
// non-central Isserlis expansion
//   E[x_i x_j x_k x_l] = C_ij C_kl + C_ik C_jl + C_il C_jk
//                      + m_i m_j C_kl + ... (6 terms) + m_i m_j m_k m_l.
// A constant coordinate (bias) is encoded as zero covariance rows.
inline CovariateMoments mvn_fourth_moments(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                           bool bias = false) {
  const int d = static_cast<int>(mean.size());
  if (cov.rows() != d || cov.cols() != d) throw std::invalid_argument("mvn_fourth_moments: shape mismatch");
  if (bias) {
    if (d < 1 || mean[0] != 1.0 || cov.row(0).cwiseAbs().maxCoeff() > 0.0 ||
        cov.col(0).cwiseAbs().maxCoeff() > 0.0)
      throw std::invalid_argument("mvn_fourth_moments: bias coordinate must be the constant 1");
  }
  CovariateMoments m;
  m.d = d;
  m.bias = bias;
  m.eta2 = cov + mean * mean.transpose();
  symmetrize(m.eta2);
  const QuarticIndex qi(d);
  m.eta4.resize(qi.size());
  const auto& mu = mean;
  const auto& c = cov;
  for (int e = 0; e < qi.size(); ++e) {
    const auto& q = qi.entry(e);
    const int i = q[0], j = q[1], k = q[2], l = q[3];
    m.eta4[e] = c(i, j) * c(k, l) + c(i, k) * c(j, l) + c(i, l) * c(j, k) +
                mu[i] * mu[j] * c(k, l) + mu[i] * mu[k] * c(j, l) + mu[i] * mu[l] * c(j, k) +
                mu[j] * mu[k] * c(i, l) + mu[j] * mu[l] * c(i, k) + mu[k] * mu[l] * c(i, j) +
                mu[i] * mu[j] * mu[k] * mu[l];
  }
  return m;
}

// Convenience: moments of [1, x_real] with x_real ~ N(mean, cov).
inline CovariateMoments mvn_fourth_moments_with_bias(const Eigen::VectorXd& mean,
                                                     const Eigen::MatrixXd& cov) {
  const int p = static_cast<int>(mean.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p + 1);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p + 1, p + 1);
  m[0] = 1.0;
  m.tail(p) = mean;
  c.bottomRightCorner(p, p) = cov;
  return mvn_fourth_moments(m, c, true);
}

// Empirical (non-private) moments of a dataset's covariates.
inline CovariateMoments moments_from_samples(const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("moments_from_samples: need at least one record");
  validate_dataset(data);
  raw_scan_count()++;
  CovariateMoments m;
  m.d = data.dim();
  m.bias = data.has_bias;
  const double nd = static_cast<double>(data.n());
  m.eta2 = data.x.transpose() * data.x / nd;
  symmetrize(m.eta2);
  const QuarticIndex qi(m.d);
  m.eta4 = Eigen::VectorXd::Zero(qi.size());
  for (long r = 0; r < data.n(); ++r)
    for (int e = 0; e < qi.size(); ++e) {
      const auto& q = qi.entry(e);
      m.eta4[e] += data.x(r, q[0]) * data.x(r, q[1]) * data.x(r, q[2]) * data.x(r, q[3]);
    }
  m.eta4 /= nd;
  return m;
}

// Moment estimates from a private fourth-moment release (bias required: the
// second moments come from the {0,0,j,k} slice). Noisy sums are first
// clipped to the a-priori feasible box |sum| <= n * max_abs_x^4 -- free
// post-processing that keeps small-budget estimates from exploding -- then
// divided by n and repaired for bias consistency and PSD.
inline CovariateMoments moments_from_noisy_release(
    const NoisyFourthMoments& noisy,
    double max_abs_x = std::numeric_limits<double>::infinity()) {
  if (!noisy.bias) throw std::invalid_argument("moments_from_noisy_release: release must include a bias column");
  if (noisy.n < 1) throw std::invalid_argument("moments_from_noisy_release: need n >= 1");
  const QuarticIndex qi(noisy.d);
  if (noisy.sums.size() != qi.size()) throw std::invalid_argument("moments_from_noisy_release: size mismatch");

  CovariateMoments m;
  m.d = noisy.d;
  m.bias = true;
  const double nd = static_cast<double>(noisy.n);
  const double cap = std::pow(max_abs_x, 4) * nd;
  m.eta4 = noisy.sums.cwiseMin(cap).cwiseMax(-cap) / nd;
  m.eta2.resize(m.d, m.d);
  for (int j = 0; j < m.d; ++j)
    for (int k = j; k < m.d; ++k) m.eta2(j, k) = m.eta2(k, j) = m.eta4[qi.rank(0, 0, j, k)];
  detail::repair_bias_moments(m);
  return m;
}

// Monte-Carlo moments of a covariate prior: average monomials over draws of
// x from `draw_x` (which must include the bias coordinate when bias is set).
inline CovariateMoments moments_from_prior_mc(
    const std::function<Eigen::VectorXd(RandomStream&)>& draw_x, int d, bool bias, long draws,
    RandomStream& rng) {
  if (draws < 1) throw std::invalid_argument("moments_from_prior_mc: draws must be >= 1");
  CovariateMoments m;
  m.d = d;
  m.bias = bias;
  m.eta2 = Eigen::MatrixXd::Zero(d, d);
  const QuarticIndex qi(d);
  m.eta4 = Eigen::VectorXd::Zero(qi.size());
  for (long k = 0; k < draws; ++k) {
    const Eigen::VectorXd x = draw_x(rng);
    if (x.size() != d) throw std::invalid_argument("moments_from_prior_mc: draw has wrong dimension");
    if (bias && x[0] != 1.0) throw std::invalid_argument("moments_from_prior_mc: bias coordinate must be 1");
    m.eta2.noalias() += x * x.transpose();
    for (int e = 0; e < qi.size(); ++e) {
      const auto& q = qi.entry(e);
      m.eta4[e] += x[q[0]] * x[q[1]] * x[q[2]] * x[q[3]];
    }
  }
  m.eta2 /= static_cast<double>(draws);
  m.eta4 /= static_cast<double>(draws);
  symmetrize(m.eta2);
  if (bias) detail::repair_bias_moments(m);
  return m;
}

// The xi matrix over unique pairs, M_{(ij),(kl)} = xi_{ij,kl}; symmetric by
// construction, used directly in the covariance assembly below and exposed
// for validation.
inline Eigen::MatrixXd xi_matrix(const CovariateMoments& m) {
  m.validate();
  const int d = m.d;
  const QuarticIndex qi(d);
  Eigen::MatrixXd xi(pair_count(d), pair_count(d));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l)
          xi(pair_index(i, j, d), pair_index(k, l, d)) =
              m.eta4[qi.rank(i, j, k, l)] - m.eta2(i, j) * m.eta2(k, l);
  return xi;
}

// Mean and covariance of a single record's statistic t(x, y) at the given
// regression parameters; layout matches flatten(). The covariance is
// symmetrized and eigenvalue-floored at 1e-10 * trace.
inline CltParams assemble_clt_params(const Eigen::VectorXd& theta, double sigma2,
                                     const CovariateMoments& m) {
  m.validate();
  const int d = m.d;
  if (theta.size() != d) throw std::invalid_argument("assemble_clt_params: theta dimension mismatch");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("assemble_clt_params: sigma2 must be >= 0");
  const int np = pair_count(d);
  const int dim = stat_dim(d);
  const QuarticIndex qi(d);
  const auto xi = [&](int i, int j, int k, int l) {
    return m.eta4[qi.rank(i, j, k, l)] - m.eta2(i, j) * m.eta2(k, l);
  };

  CltParams clt;
  clt.mean.resize(dim);
  const Eigen::VectorXd eta_theta = m.eta2 * theta;
  const double quad = theta.dot(eta_theta);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) clt.mean[pair_index(i, j, d)] = m.eta2(i, j);
  clt.mean.segment(np, d) = eta_theta;
  clt.mean[dim - 1] = sigma2 + quad;

  Eigen::MatrixXd cov(dim, dim);
  // quartic accumulators over theta contractions
  double x4 = 0.0;                                   // sum theta_i..theta_l xi_{ij,kl}
  Eigen::VectorXd x3 = Eigen::VectorXd::Zero(d);     // x3_i = sum theta_j theta_k theta_l xi_{ij,kl}
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          const double v = theta[j] * theta[k] * theta[l] * xi(i, j, k, l);
          x3[i] += v;
          x4 += theta[i] * v;
        }

  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const int a = pair_index(i, j, d);
      // pair-pair block
      for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) cov(a, pair_index(k, l, d)) = xi(i, j, k, l);
      // pair vs x_k y and vs y^2
      double py = 0.0;
      for (int k = 0; k < d; ++k) {
        double v = 0.0;
        for (int l = 0; l < d; ++l) v += theta[l] * xi(i, j, k, l);
        cov(a, np + k) = cov(np + k, a) = v;
        py += theta[k] * v;
      }
      cov(a, dim - 1) = cov(dim - 1, a) = py;
    }
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      double v = sigma2 * m.eta2(i, j);
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) v += theta[k] * theta[l] * xi(i, k, j, l);
      cov(np + i, np + j) = cov(np + j, np + i) = v;
    }
    cov(np + i, dim - 1) = cov(dim - 1, np + i) = x3[i] + 2.0 * sigma2 * eta_theta[i];
  }
  cov(dim - 1, dim - 1) = 2.0 * sigma2 * sigma2 + x4 + 4.0 * sigma2 * quad;

  symmetrize(cov);
  clt.cov = clamp_eigenvalues(cov, 1e-10 * std::max(cov.trace(), 0.0));
  return clt;
}

}  // namespace dpreg
