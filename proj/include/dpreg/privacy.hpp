#pragma once

// Laplace releases of the regression sufficient statistics and of fourth
// data moments, with sensitivities derived from the a-priori bounds under
// bounded neighbours (one record replaced). Raw data is touched exactly once
// per release call.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "dpreg/distributions.hpp"
#include "dpreg/model.hpp"

namespace dpreg {

struct PrivacySpec {
  double epsilon = 1.0;
  Bounds bounds;
  // Fraction of epsilon spent on the sufficient statistics; the remainder
  // goes to the fourth-moment release.
  double budget_split = 1.0;

  double eps_stats() const { return epsilon * budget_split; }
  // Complement computed by subtraction so eps_stats + eps_moments == epsilon
  // exactly in floating point.
  double eps_moments() const { return epsilon - eps_stats(); }

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacySpec: epsilon must be > 0");
    if (!(budget_split > 0.0) || budget_split > 1.0)
      throw std::invalid_argument("PrivacySpec: budget_split must be in (0, 1]");
    bounds.validate();
  }
};

// L1 sensitivity of [uniq(X'X), X'y, y'y] when one record moves anywhere in
// the bounding box: wx^2 per unique X'X entry, wx*wy per X'y entry, wy^2.
inline double suff_stat_sensitivity(int d, const Bounds& bounds) {
  if (d < 1) throw std::invalid_argument("suff_stat_sensitivity: d must be >= 1");
  bounds.validate();
  const double wx = bounds.wx(), wy = bounds.wy();
  return wx * wx * pair_count(d) + wx * wy * d + wy * wy;
}

// L1 sensitivity of the vector of unique fourth-moment sums: wx^4 for each
// of the C(d+3, 4) monomials.
inline double fourth_moment_sensitivity(int d, const Bounds& bounds) {
  if (d < 1) throw std::invalid_argument("fourth_moment_sensitivity: d must be >= 1");
  bounds.validate();
  const double wx = bounds.wx();
  return QuarticIndex::multichoose(d, 4) * wx * wx * wx * wx;
}

// A released statistic vector: z = flatten(stats) + Laplace(0, scale) iid.
struct NoisyStats {
  int d = 0;
  long n = 0;  // public record count
  bool bias = false;
  Eigen::VectorXd z;
  double scale = 0.0;  // Laplace scale of every entry
};

// Released fourth-moment sums sum_i x_i x_j x_k x_l in multiset order.
struct NoisyFourthMoments {
  int d = 0;
  long n = 0;
  bool bias = false;
  Eigen::VectorXd sums;
  double scale = 0.0;
};

inline NoisyStats release_suff_stats(const SuffStats& stats, const PrivacySpec& spec,
                                     RandomStream& rng, bool bias = false) {
  spec.validate();
  NoisyStats out;
  out.d = stats.d;
  out.n = stats.n;
  out.bias = bias;
  out.scale = suff_stat_sensitivity(stats.d, spec.bounds) / spec.eps_stats();
  out.z = laplace_sample(flatten(stats), out.scale, rng);
  return out;
}

// Exact fourth-moment sums of the covariates; one pass over the raw data.
inline Eigen::VectorXd fourth_moment_sums(const Dataset& data) {
  validate_dataset(data);
  raw_scan_count()++;
  const QuarticIndex idx(data.dim());
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(idx.size());
  for (long r = 0; r < data.n(); ++r) {
    for (int e = 0; e < idx.size(); ++e) {
      const auto& q = idx.entry(e);
      sums[e] += data.x(r, q[0]) * data.x(r, q[1]) * data.x(r, q[2]) * data.x(r, q[3]);
    }
  }
  return sums;
}

inline NoisyFourthMoments release_fourth_moments(const Dataset& data, const PrivacySpec& spec,
                                                 RandomStream& rng) {
  spec.validate();
  if (!(spec.eps_moments() > 0.0))
    throw std::invalid_argument("release_fourth_moments: budget_split leaves no moment budget");
  NoisyFourthMoments out;
  out.d = data.dim();
  out.n = data.n();
  out.bias = data.has_bias;
  out.scale = fourth_moment_sensitivity(out.d, spec.bounds) / spec.eps_moments();
  out.sums = laplace_sample(fourth_moment_sums(data), out.scale, rng);
  return out;
}

}  // namespace dpreg
