#pragma once

// File formats: versioned JSON for releases, moments and priors; CSV with a
// JSON sidecar for posterior samples; CSV ingestion with a-priori-bounds
// scaling; tidy metrics output; SHA-256 for dataset checksum pins.

#include <Eigen/Dense>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpreg/model.hpp"
#include "dpreg/moments.hpp"
#include "dpreg/privacy.hpp"
#include "dpreg/samples.hpp"

namespace dpreg {

inline constexpr int kFormatVersion = 1;

namespace detail {

// Shortest decimal form that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c)
      throw std::invalid_argument("matrix_from_json: ragged rows");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

inline void check_header(const nlohmann::json& j, const std::string& kind) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion)
    throw std::invalid_argument("file format: unsupported or missing format_version");
  if (!j.contains("kind") || j["kind"].get<std::string>() != kind)
    throw std::invalid_argument("file format: expected kind '" + kind + "'");
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("failed to parse " + path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

// Compact SHA-256, FIPS 180-4.
inline std::string sha256_hex(const std::string& data) {
  static constexpr std::array<std::uint32_t, 64> k = {
      0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
      0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
      0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
      0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
      0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
      0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
      0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
      0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
      0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
      0xc67178f2};
  std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                    0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::string msg = data;
  const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
  msg.push_back(static_cast<char>(0x80));
  while (msg.size() % 64 != 56) msg.push_back('\0');
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bit_len >> (8 * i)) & 0xff));

  const auto rotr = [](std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); };
  for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
    std::array<std::uint32_t, 64> w{};
    for (int i = 0; i < 16; ++i)
      w[i] = (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[chunk + 4 * i])) << 24) |
             (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[chunk + 4 * i + 1])) << 16) |
             (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[chunk + 4 * i + 2])) << 8) |
             static_cast<std::uint32_t>(static_cast<unsigned char>(msg[chunk + 4 * i + 3]));
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    auto [a, b, c, dd, e, f, g, hh] = h;
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = s0 + maj;
      hh = g; g = f; f = e; e = dd + t1;
      dd = c; c = b; b = a; a = t1 + t2;
    }
    h = {h[0] + a, h[1] + b, h[2] + c, h[3] + dd, h[4] + e, h[5] + f, h[6] + g, h[7] + hh};
  }
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (std::uint32_t word : h) hex << std::setw(8) << word;
  return hex.str();
}

}  // namespace detail

// --- releases and priors ----------------------------------------------------

inline nlohmann::json noisy_stats_to_json(const NoisyStats& z) {
  return {{"format_version", kFormatVersion},
          {"kind", "noisy_suff_stats"},
          {"canonical_order", "xtx-upper-row-major,xty,yty"},
          {"d", z.d},
          {"n", z.n},
          {"bias", z.bias},
          {"scale", z.scale},
          {"z", detail::to_json(z.z)}};
}

inline NoisyStats noisy_stats_from_json(const nlohmann::json& j) {
  detail::check_header(j, "noisy_suff_stats");
  NoisyStats z;
  z.d = j.at("d").get<int>();
  z.n = j.at("n").get<long>();
  z.bias = j.at("bias").get<bool>();
  z.scale = j.at("scale").get<double>();
  z.z = detail::vector_from_json(j.at("z"));
  if (z.z.size() != stat_dim(z.d)) throw std::invalid_argument("noisy_suff_stats: size mismatch");
  return z;
}

inline nlohmann::json noisy_fourth_to_json(const NoisyFourthMoments& m) {
  return {{"format_version", kFormatVersion},
          {"kind", "noisy_fourth_moments"},
          {"canonical_order", "multiset-lex"},
          {"d", m.d},
          {"n", m.n},
          {"bias", m.bias},
          {"scale", m.scale},
          {"sums", detail::to_json(m.sums)}};
}

inline NoisyFourthMoments noisy_fourth_from_json(const nlohmann::json& j) {
  detail::check_header(j, "noisy_fourth_moments");
  NoisyFourthMoments m;
  m.d = j.at("d").get<int>();
  m.n = j.at("n").get<long>();
  m.bias = j.at("bias").get<bool>();
  m.scale = j.at("scale").get<double>();
  m.sums = detail::vector_from_json(j.at("sums"));
  if (m.sums.size() != QuarticIndex(m.d).size())
    throw std::invalid_argument("noisy_fourth_moments: size mismatch");
  return m;
}

inline nlohmann::json moments_to_json(const CovariateMoments& m) {
  m.validate();
  return {{"format_version", kFormatVersion},
          {"kind", "covariate_moments"},
          {"d", m.d},
          {"bias", m.bias},
          {"eta2", detail::to_json(m.eta2)},
          {"eta4", detail::to_json(m.eta4)}};
}

inline CovariateMoments moments_from_json(const nlohmann::json& j) {
  detail::check_header(j, "covariate_moments");
  CovariateMoments m;
  m.d = j.at("d").get<int>();
  m.bias = j.at("bias").get<bool>();
  m.eta2 = detail::matrix_from_json(j.at("eta2"));
  m.eta4 = detail::vector_from_json(j.at("eta4"));
  m.validate();
  return m;
}

inline nlohmann::json nig_to_json(const NigParams& p) {
  return {{"format_version", kFormatVersion},
          {"kind", "nig_params"},
          {"mu", detail::to_json(p.mu)},
          {"lambda", detail::to_json(p.lambda)},
          {"a", p.a},
          {"b", p.b}};
}

inline NigParams nig_from_json(const nlohmann::json& j) {
  detail::check_header(j, "nig_params");
  NigParams p;
  p.mu = detail::vector_from_json(j.at("mu"));
  p.lambda = detail::matrix_from_json(j.at("lambda"));
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<double>();
  p.validate();
  return p;
}

inline nlohmann::json niw_to_json(const NiwParams& p) {
  return {{"format_version", kFormatVersion},
          {"kind", "niw_params"},
          {"mu0", detail::to_json(p.mu0)},
          {"kappa0", p.kappa0},
          {"psi0", detail::to_json(p.psi0)},
          {"nu0", p.nu0}};
}

inline NiwParams niw_from_json(const nlohmann::json& j) {
  detail::check_header(j, "niw_params");
  NiwParams p;
  p.mu0 = detail::vector_from_json(j.at("mu0"));
  p.kappa0 = j.at("kappa0").get<double>();
  p.psi0 = detail::matrix_from_json(j.at("psi0"));
  p.nu0 = j.at("nu0").get<double>();
  p.validate();
  return p;
}

// --- posterior samples -------------------------------------------------------

inline void save_samples(const std::string& csv_path, const std::string& meta_path,
                         const PosteriorSamples& samples) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path);
  out << std::setprecision(17);
  out << "iteration";
  for (Eigen::Index j = 0; j < samples.theta.cols(); ++j) out << ",theta_" << j;
  out << ",sigma2\n";
  for (long i = 0; i < samples.count(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < samples.theta.cols(); ++j) out << "," << samples.theta(i, j);
    out << "," << samples.sigma2[i] << "\n";
  }

  nlohmann::json meta{{"format_version", kFormatVersion},
                      {"kind", "posterior_samples_meta"},
                      {"method", samples.meta.method},
                      {"seed", samples.meta.seed},
                      {"n", samples.meta.n},
                      {"d", samples.meta.d},
                      {"burnin", samples.meta.burnin},
                      {"thin", samples.meta.thin},
                      {"count", samples.count()},
                      {"runtime_seconds", samples.meta.runtime_seconds},
                      {"info", samples.meta.info}};
  meta["epsilon"] = samples.meta.epsilon ? nlohmann::json(*samples.meta.epsilon) : nlohmann::json();
  detail::write_json_file(meta_path, meta);
}

inline PosteriorSamples load_samples(const std::string& csv_path, const std::string& meta_path) {
  const nlohmann::json meta = detail::read_json_file(meta_path);
  detail::check_header(meta, "posterior_samples_meta");
  PosteriorSamples samples;
  samples.meta.method = meta.at("method").get<std::string>();
  samples.meta.seed = meta.at("seed").get<std::uint64_t>();
  samples.meta.n = meta.at("n").get<long>();
  samples.meta.d = meta.at("d").get<int>();
  samples.meta.burnin = meta.at("burnin").get<long>();
  samples.meta.thin = meta.at("thin").get<long>();
  samples.meta.runtime_seconds = meta.at("runtime_seconds").get<double>();
  if (!meta.at("epsilon").is_null()) samples.meta.epsilon = meta.at("epsilon").get<double>();
  if (meta.contains("info"))
    samples.meta.info = meta.at("info").get<std::map<std::string, double>>();
  const long count = meta.at("count").get<long>();
  const int d = samples.meta.d;

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv_path + ": empty file");
  samples.theta.resize(count, d);
  samples.sigma2.resize(count);
  long row = 0;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (row >= count) throw std::runtime_error(csv_path + ": more rows than metadata count");
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(csv_path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(vals.size()) != d + 2)
      throw std::runtime_error(csv_path + ":" + std::to_string(line_no) + ": wrong column count");
    for (int j = 0; j < d; ++j) samples.theta(row, j) = vals[j + 1];
    samples.sigma2[row] = vals[d + 1];
    ++row;
  }
  if (row != count) throw std::runtime_error(csv_path + ": fewer rows than metadata count");
  return samples;
}

// --- dataset ingestion -------------------------------------------------------

// Numeric table parser: '#' comments and blank lines skipped; an optional
// single non-numeric header row is allowed. Throws with line numbers.
inline std::vector<std::vector<double>> parse_numeric_table(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = line;
    if (const auto pos = trimmed.find('#'); pos != std::string::npos) trimmed = trimmed.substr(0, pos);
    for (char& ch : trimmed)
      if (ch == ',' || ch == '\t' || ch == '\r') ch = ' ';
    std::stringstream ss(trimmed);
    std::vector<double> vals;
    std::string tok;
    bool numeric = true;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        vals.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw std::runtime_error("line " + std::to_string(line_no) + ": non-numeric value");
    }
    if (vals.empty()) continue;
    header_allowed = false;
    if (!rows.empty() && rows.back().size() != vals.size())
      throw std::runtime_error("line " + std::to_string(line_no) + ": inconsistent column count");
    rows.push_back(std::move(vals));
  }
  return rows;
}

enum class ScaleMode {
  None,         // use values and bounds as given
  BoundsToUnit, // affine map of the a-priori bounds onto [0, 1]
  DataToUnit    // map observed min/max onto [0, 1]; NOT differentially
                // private, gated behind an explicit unsafe flag upstream
};

struct IngestResult {
  Dataset data;
  long clipped = 0;
};

// Load a CSV. By default the last column is the response and all others are
// covariates; `x_cols`/`y_col` (0-based) select columns from wider tables.
// Values are scaled per `mode`, clipped into the (post-scaling) bounds, and a
// bias column is prepended when requested.
inline IngestResult ingest_csv(const std::string& path, Bounds bounds, bool add_bias,
                               ScaleMode mode = ScaleMode::None,
                               std::vector<int> x_cols = {}, int y_col = -1) {
  bounds.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  try {
    rows = parse_numeric_table(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  const int width = static_cast<int>(rows[0].size());
  if (width < 2) throw std::runtime_error(path + ": need at least one covariate and a response");
  if (y_col < 0) y_col = width - 1;
  if (y_col >= width) throw std::runtime_error(path + ": response column out of range");
  if (x_cols.empty()) {
    for (int j = 0; j < width; ++j)
      if (j != y_col) x_cols.push_back(j);
  }
  for (int j : x_cols)
    if (j < 0 || j >= width || j == y_col)
      throw std::runtime_error(path + ": covariate column out of range");
  raw_scan_count()++;

  const long n = static_cast<long>(rows.size());
  const int p = static_cast<int>(x_cols.size());
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rows[i][static_cast<std::size_t>(x_cols[j])];
    y[i] = rows[i][static_cast<std::size_t>(y_col)];
  }

  if (mode == ScaleMode::BoundsToUnit) {
    x = ((x.array() - bounds.x_lo) / bounds.wx()).matrix();
    y = ((y.array() - bounds.y_lo) / bounds.wy()).matrix();
    bounds = {0.0, 1.0, 0.0, 1.0};
  } else if (mode == ScaleMode::DataToUnit) {
    const double x_lo = x.minCoeff(), x_hi = x.maxCoeff();
    const double y_lo = y.minCoeff(), y_hi = y.maxCoeff();
    if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw std::runtime_error(path + ": degenerate data range");
    x = ((x.array() - x_lo) / (x_hi - x_lo)).matrix();
    y = ((y.array() - y_lo) / (y_hi - y_lo)).matrix();
    bounds = {0.0, 1.0, 0.0, 1.0};
  }

  IngestResult result;
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      const double clipped = std::clamp(x(i, j), bounds.x_lo, bounds.x_hi);
      if (clipped != x(i, j)) ++result.clipped;
      x(i, j) = clipped;
    }
    const double clipped = std::clamp(y[i], bounds.y_lo, bounds.y_hi);
    if (clipped != y[i]) ++result.clipped;
    y[i] = clipped;
  }

  result.data.bounds = bounds;
  result.data.has_bias = add_bias;
  result.data.y = y;
  if (add_bias) {
    result.data.x.resize(n, p + 1);
    result.data.x.col(0).setOnes();
    result.data.x.rightCols(p) = x;
  } else {
    result.data.x = x;
  }
  validate_dataset(result.data);
  return result;
}

// --- metrics -----------------------------------------------------------------

struct MetricRow {
  std::string method;
  long n = 0;
  double epsilon = 0.0;
  std::string parameter;
  std::string metric;
  double value = 0.0;
};

inline void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,n,epsilon,parameter,metric,value\n";
  for (const auto& r : rows)
    out << r.method << "," << r.n << "," << detail::format_double(r.epsilon) << "," << r.parameter
        << "," << r.metric << "," << detail::format_double(r.value) << "\n";
}

// Sorted calibration quantiles against the uniform grid (i - 1/2) / M.
inline void write_qq_csv(const std::string& path, std::vector<double> u) {
  std::sort(u.begin(), u.end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "u,uniform\n";
  const double m = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    out << detail::format_double(u[i]) << ","
        << detail::format_double((static_cast<double>(i) + 0.5) / m) << "\n";
}

}  // namespace dpreg
