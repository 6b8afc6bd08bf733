#pragma once

// Small dense-matrix helpers shared across the library: canonical indexing of
// symmetric-matrix unique entries and of degree-4 monomial multisets, plus
// eigenvalue clamping for near-PSD repairs.

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

namespace dpreg {

// Number of unique entries of a symmetric d x d matrix.
inline int pair_count(int d) { return d * (d + 1) / 2; }

// Canonical position of entry (i, j) in row-major upper-triangle order:
// (0,0), (0,1), ..., (0,d-1), (1,1), ..., (d-1,d-1).
inline int pair_index(int i, int j, int d) {
  if (i > j) std::swap(i, j);
  return i * d - i * (i - 1) / 2 + (j - i);
}

inline Eigen::MatrixXd sym_from_upper(const Eigen::VectorXd& uniq, int d) {
  if (uniq.size() != pair_count(d)) throw std::invalid_argument("sym_from_upper: size mismatch");
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m(i, j) = m(j, i) = uniq[pair_index(i, j, d)];
  return m;
}

inline Eigen::VectorXd upper_from_sym(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::VectorXd uniq(pair_count(d));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) uniq[pair_index(i, j, d)] = m(i, j);
  return uniq;
}

// Multisets {i <= j <= k <= l} over {0..d-1} in lexicographic order; these
// index the unique degree-4 monomials x_i x_j x_k x_l.
class QuarticIndex {
 public:
  explicit QuarticIndex(int d) : d_(d) {
    if (d < 1) throw std::invalid_argument("QuarticIndex: d must be >= 1");
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        for (int k = j; k < d; ++k)
          for (int l = k; l < d; ++l) entries_.push_back({i, j, k, l});
  }

  int dim() const { return d_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::array<int, 4>& entry(int r) const { return entries_[r]; }

  // Rank of the sorted quadruple via counts of lexicographically smaller
  // multisets; multichoose(a, m) = C(a + m - 1, m).
  int rank(int i, int j, int k, int l) const {
    std::array<int, 4> q{i, j, k, l};
    std::sort(q.begin(), q.end());
    const int d = d_;
    int r = multichoose(d, 4) - multichoose(d - q[0], 4);
    r += multichoose(d - q[0], 3) - multichoose(d - q[1], 3);
    r += multichoose(d - q[1], 2) - multichoose(d - q[2], 2);
    r += q[3] - q[2];
    return r;
  }

  static int multichoose(int a, int m) {
    // C(a + m - 1, m) with small m
    long num = 1;
    for (int t = 0; t < m; ++t) num *= a + t;
    for (int t = 2; t <= m; ++t) num /= t;
    return static_cast<int>(num);
  }

 private:
  int d_;
  std::vector<std::array<int, 4>> entries_;
};

inline void symmetrize(Eigen::MatrixXd& m) { m = ((m + m.transpose()) * 0.5).eval(); }

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Reconstruct `m` with eigenvalues clamped from below. With only_negative,
// eigenvalues in [0, floor) are left alone so valid inputs pass through
// unchanged up to round-off.
inline Eigen::MatrixXd clamp_eigenvalues(const Eigen::MatrixXd& m, double floor,
                                         bool only_negative = false) {
  Eigen::MatrixXd sym = (m + m.transpose()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("clamp_eigenvalues: eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues();
  bool touched = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const bool low = only_negative ? (ev[i] < 0.0) : (ev[i] < floor);
    if (low) {
      ev[i] = floor;
      touched = true;
    }
  }
  if (!touched) return sym;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace dpreg
