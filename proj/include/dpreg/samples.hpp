#pragma once

// Posterior sample container shared by every inference method, with enough
// metadata to reproduce and audit a run.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace dpreg {

struct SampleMeta {
  std::string method;
  std::uint64_t seed = 0;
  std::optional<double> epsilon;  // absent for non-private runs
  long n = 0;
  int d = 0;
  long burnin = 0;
  long thin = 1;
  double runtime_seconds = 0.0;
  // method-specific diagnostics (acceptance rates, repair flags, ...)
  std::map<std::string, double> info;
};

struct PosteriorSamples {
  Eigen::MatrixXd theta;   // one row per retained draw
  Eigen::VectorXd sigma2;  // matching draws
  SampleMeta meta;

  long count() const { return static_cast<long>(theta.rows()); }
};

}  // namespace dpreg
