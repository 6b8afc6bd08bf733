#pragma once

// Reference methods: the non-private conjugate posterior, the naive method
// that treats the released statistics as exact, and a Metropolis-within-Gibbs
// sampler over latent individuals (x_i, y_i) that targets the exact
// Laplace-likelihood posterior without any CLT approximation.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dpreg/distributions.hpp"
#include "dpreg/gibbs.hpp"
#include "dpreg/model.hpp"
#include "dpreg/privacy.hpp"
#include "dpreg/random.hpp"
#include "dpreg/samples.hpp"

namespace dpreg {

namespace detail {

inline PosteriorSamples draw_iid_nig(const NigParams& posterior, long count, RandomStream& rng) {
  PosteriorSamples out;
  out.theta.resize(count, posterior.mu.size());
  out.sigma2.resize(count);
  for (long i = 0; i < count; ++i) {
    const ParamDraw draw = nig_sample(posterior, rng);
    out.theta.row(i) = draw.theta.transpose();
    out.sigma2[i] = draw.sigma2;
  }
  return out;
}

}  // namespace detail

// Exact posterior from the raw data; the yardstick everything else is
// compared against.
inline PosteriorSamples run_non_private(const Dataset& data, const NigParams& prior, long count,
                                        RandomStream& rng) {
  if (count < 1) throw std::invalid_argument("run_non_private: count must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const NigParams post = nig_posterior_update(prior, compute_suff_stats(data));
  PosteriorSamples out = detail::draw_iid_nig(post, count, rng);
  out.meta.method = "non-private";
  out.meta.seed = rng.seed();
  out.meta.n = data.n();
  out.meta.d = data.dim();
  out.meta.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Conjugate update pretending z is exact. Only if that update is undefined
// (Lambda_n not PD or b_n <= 0) is z projected to the PSD cone first; the
// repair is recorded in the metadata.
inline PosteriorSamples run_naive(const NoisyStats& z, const NigParams& prior, long count,
                                  RandomStream& rng) {
  if (count < 1) throw std::invalid_argument("run_naive: count must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  bool repaired = false;
  NigParams post;
  bool ok = true;
  try {
    post = nig_posterior_update(prior, unflatten(z.z, z.d, z.n));
    if (!(post.b > 0.0)) ok = false;
  } catch (const std::runtime_error&) {
    ok = false;
  }
  if (!ok) {
    repaired = true;
    post = nig_posterior_update(prior, unflatten(project_psd_stats(z.z, z.d), z.d, z.n));
    if (!(post.b > 0.0)) throw std::runtime_error("run_naive: update undefined even after projection");
  }
  PosteriorSamples out = detail::draw_iid_nig(post, count, rng);
  out.meta.method = "naive";
  out.meta.seed = rng.seed();
  out.meta.n = z.n;
  out.meta.d = z.d;
  out.meta.info["psd_repair"] = repaired ? 1.0 : 0.0;
  out.meta.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct IndConfig {
  long burnin = 500;
  long samples = 2000;
  long thin = 1;
  long adapt_interval = 50;    // sweeps between proposal-scale adjustments
  double accept_lo = 0.25;     // adaptation targets this acceptance band
  double accept_hi = 0.40;
  long refresh_every = 100;    // accepted moves between full stat recomputes
  double init_scale = 0.25;
  bool clamp_x = false;        // validation aid: propose y only
  std::string method_label = "mcmc-ind";

  void validate() const {
    if (burnin < 0 || samples < 1 || thin < 1) throw std::invalid_argument("IndConfig: bad chain settings");
    if (adapt_interval < 1 || refresh_every < 1 || !(init_scale > 0.0))
      throw std::invalid_argument("IndConfig: bad adaptation settings");
  }
};

// Latent-individual sampler. Per sweep: a joint Gaussian random-walk
// Metropolis move on each (x_i, y_i) against
//   p(x_i | mu_x, tau2) p(y_i | x_i, theta, sigma2) Lap(z | t(X, y), b),
// then conjugate NIG and NIW parameter draws given the latent data. The
// update blocks are exposed separately so tests can exercise them in
// isolation (detailed balance, clamped validation).
class IndSampler {
 public:
  IndSampler(const NoisyStats& z, const NigParams& prior, const NiwParams& covariate_prior,
             IndConfig cfg)
      : z_(z), prior_(prior), cov_prior_(covariate_prior), cfg_(cfg) {
    cfg_.validate();
    prior_.validate();
    cov_prior_.validate();
    d_ = z_.d;
    p_ = z_.bias ? d_ - 1 : d_;
    if (p_ < 1) throw std::invalid_argument("IndSampler: need at least one real covariate");
    if (cov_prior_.p() != p_) throw std::invalid_argument("IndSampler: covariate prior dimension mismatch");
    if (static_cast<int>(prior_.mu.size()) != d_) throw std::invalid_argument("IndSampler: prior dimension mismatch");
    if (z_.z.size() != stat_dim(d_)) throw std::invalid_argument("IndSampler: statistic size mismatch");
    scale_ = Eigen::VectorXd::Constant(p_ + 1, cfg_.init_scale);
  }

  void init(RandomStream& rng) {
    const ParamDraw draw = nig_sample(prior_, rng);
    theta_ = draw.theta;
    sigma2_ = draw.sigma2;
    const NiwDraw hyper = niw_sample(cov_prior_, rng);
    set_covariate_params(hyper.mu, hyper.tau2);
    x_.resize(z_.n, d_);
    y_.resize(z_.n);
    for (long r = 0; r < z_.n; ++r) {
      Eigen::VectorXd xr(d_);
      const Eigen::VectorXd real = mvn_sample(mu_x_, tau2_, rng);
      if (z_.bias) {
        xr[0] = 1.0;
        xr.tail(p_) = real;
      } else {
        xr = real;
      }
      x_.row(r) = xr.transpose();
      y_[r] = rng.normal(theta_.dot(xr), std::sqrt(sigma2_));
    }
    recompute_stats();
  }

  void set_params(const Eigen::VectorXd& theta, double sigma2) {
    theta_ = theta;
    sigma2_ = sigma2;
  }

  void set_covariate_params(const Eigen::VectorXd& mu, const Eigen::MatrixXd& tau2) {
    mu_x_ = mu;
    tau2_ = tau2;
    tau2_llt_.compute(tau2_);
    if (tau2_llt_.info() != Eigen::Success)
      throw std::runtime_error("IndSampler: covariate covariance not positive definite");
  }

  void set_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != z_.n || x.cols() != d_ || y.size() != z_.n)
      throw std::invalid_argument("IndSampler: data shape mismatch");
    x_ = x;
    y_ = y;
    recompute_stats();
  }

  // One Metropolis pass over all individuals; returns accepted moves.
  long sweep_individuals(RandomStream& rng) {
    long accepted = 0;
    std::normal_distribution<double> std_normal(0.0, 1.0);
    for (long r = 0; r < z_.n; ++r) {
      Eigen::VectorXd xr = x_.row(r).transpose();
      Eigen::VectorXd xr_new = xr;
      if (!cfg_.clamp_x) {
        for (int j = 0; j < p_; ++j)
          xr_new[z_.bias ? j + 1 : j] += scale_[j] * std_normal(rng.engine());
      }
      const double y_new = y_[r] + scale_[p_] * std_normal(rng.engine());

      const Eigen::VectorXd t_old = row_stat(xr, y_[r]);
      const Eigen::VectorXd t_new = row_stat(xr_new, y_new);
      double delta = log_row_density(xr_new, y_new) - log_row_density(xr, y_[r]);
      for (Eigen::Index j = 0; j < s_.size(); ++j) {
        const double resid = z_.z[j] - s_[j];
        delta -= (std::abs(resid - (t_new[j] - t_old[j])) - std::abs(resid)) / z_.scale;
      }
      if (std::log(rng.uniform()) < delta) {
        x_.row(r) = xr_new.transpose();
        y_[r] = y_new;
        s_ += t_new - t_old;
        ++accepted;
        if (++since_refresh_ >= cfg_.refresh_every) refresh();
      }
    }
    proposed_ += z_.n;  // one joint proposal per individual
    accepted_ += accepted;
    return accepted;
  }

  void update_params(RandomStream& rng) {
    long clamps = 0;
    const ParamDraw draw = draw_params_given_stats(s_, z_.n, d_, prior_, 1e-8, rng, &clamps);
    theta_ = draw.theta;
    sigma2_ = draw.sigma2;
  }

  void update_covariate_params(RandomStream& rng) {
    const Eigen::MatrixXd real = z_.bias ? x_.rightCols(p_) : x_;
    const Eigen::VectorXd sum_x = real.colwise().sum().transpose();
    const Eigen::MatrixXd scatter = real.transpose() * real;
    const NiwParams post = niw_posterior_update(cov_prior_, z_.n, sum_x, scatter);
    const NiwDraw hyper = niw_sample(post, rng);
    set_covariate_params(hyper.mu, hyper.tau2);
  }

  // Multiply all proposal scales toward the target acceptance band; callers
  // must only adapt during burn-in to preserve detailed balance afterwards.
  void adapt(double rate) {
    double factor = 1.0;
    if (rate > cfg_.accept_hi) factor = 1.3;
    else if (rate < cfg_.accept_lo) factor = 1.0 / 1.3;
    scale_ = (scale_ * factor).cwiseMax(1e-6).cwiseMin(1e3);
  }

  const Eigen::VectorXd& theta() const { return theta_; }
  double sigma2() const { return sigma2_; }
  const Eigen::VectorXd& mu_x() const { return mu_x_; }
  const Eigen::MatrixXd& tau2() const { return tau2_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& stats() const { return s_; }
  const Eigen::VectorXd& proposal_scale() const { return scale_; }
  double max_refresh_drift() const { return max_refresh_drift_; }
  double acceptance_rate() const {
    return proposed_ > 0 ? static_cast<double>(accepted_) / static_cast<double>(proposed_) : 0.0;
  }
  void reset_acceptance() { accepted_ = proposed_ = 0; }

 private:
  Eigen::VectorXd row_stat(const Eigen::VectorXd& xr, double yr) const {
    Eigen::VectorXd t(stat_dim(d_));
    for (int i = 0; i < d_; ++i)
      for (int j = i; j < d_; ++j) t[pair_index(i, j, d_)] = xr[i] * xr[j];
    for (int i = 0; i < d_; ++i) t[pair_count(d_) + i] = xr[i] * yr;
    t[t.size() - 1] = yr * yr;
    return t;
  }

  // log p(x_real | mu_x, tau2) + log p(y | x, theta, sigma2), up to constants
  double log_row_density(const Eigen::VectorXd& xr, double yr) const {
    const Eigen::VectorXd real = z_.bias ? xr.tail(p_).eval() : xr;
    const Eigen::VectorXd centered = real - mu_x_;
    const double quad = centered.dot(tau2_llt_.solve(centered));
    const double resid = yr - theta_.dot(xr);
    return -0.5 * quad - 0.5 * resid * resid / sigma2_;
  }

  void recompute_stats() {
    SuffStats stats;
    stats.d = d_;
    stats.n = z_.n;
    stats.xtx_uniq = upper_from_sym(x_.transpose() * x_);
    stats.xty = x_.transpose() * y_;
    stats.yty = y_.squaredNorm();
    s_ = flatten(stats);
    since_refresh_ = 0;
  }

  void refresh() {
    const Eigen::VectorXd incremental = s_;
    recompute_stats();
    const double denom = std::max(1.0, s_.cwiseAbs().maxCoeff());
    max_refresh_drift_ =
        std::max(max_refresh_drift_, (incremental - s_).cwiseAbs().maxCoeff() / denom);
  }

  NoisyStats z_;
  NigParams prior_;
  NiwParams cov_prior_;
  IndConfig cfg_;
  int d_ = 0, p_ = 0;

  Eigen::VectorXd theta_;
  double sigma2_ = 1.0;
  Eigen::VectorXd mu_x_;
  Eigen::MatrixXd tau2_;
  Eigen::LLT<Eigen::MatrixXd> tau2_llt_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd s_;
  Eigen::VectorXd scale_;
  long since_refresh_ = 0;
  long accepted_ = 0, proposed_ = 0;
  double max_refresh_drift_ = 0.0;
};

inline PosteriorSamples run_mcmc_ind(const NoisyStats& z, const NigParams& prior,
                                     const NiwParams& covariate_prior, const IndConfig& cfg,
                                     RandomStream& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  IndSampler sampler(z, prior, covariate_prior, cfg);
  sampler.init(rng);

  long window_accepted = 0;
  long window_proposed = 0;
  for (long sweep = 0; sweep < cfg.burnin; ++sweep) {
    window_accepted += sampler.sweep_individuals(rng);
    window_proposed += z.n;
    sampler.update_params(rng);
    sampler.update_covariate_params(rng);
    if ((sweep + 1) % cfg.adapt_interval == 0 && window_proposed > 0) {
      sampler.adapt(static_cast<double>(window_accepted) / static_cast<double>(window_proposed));
      window_accepted = window_proposed = 0;
    }
  }

  sampler.reset_acceptance();  // report post-burn-in acceptance only
  PosteriorSamples out;
  out.theta.resize(cfg.samples, z.d);
  out.sigma2.resize(cfg.samples);
  for (long i = 0; i < cfg.samples; ++i) {
    for (long t = 0; t < cfg.thin; ++t) {
      sampler.sweep_individuals(rng);
      sampler.update_params(rng);
      sampler.update_covariate_params(rng);
    }
    out.theta.row(i) = sampler.theta().transpose();
    out.sigma2[i] = sampler.sigma2();
  }

  out.meta.method = cfg.method_label;
  out.meta.seed = rng.seed();
  out.meta.n = z.n;
  out.meta.d = z.d;
  out.meta.burnin = cfg.burnin;
  out.meta.thin = cfg.thin;
  out.meta.info["accept_rate"] = sampler.acceptance_rate();
  out.meta.info["max_refresh_drift"] = sampler.max_refresh_drift();
  out.meta.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace dpreg
