#pragma once

#include <qmm/space.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

// Canonical example families. Metric families are rescaled to diameter <= scale (default 1)
// so every dyadic level of a pair is >= -1.

namespace qmm::gen {

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidSpec, what);
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

/// n points per axis on [0,1]^dim, Euclidean distance, uniform masses summing to 1.
inline QuasiMetricSpace grid(int n, int dim = 1, double scale = 1.0) {
  detail::require(n >= 2, "grid needs n >= 2");
  detail::require(dim >= 1, "grid needs dim >= 1");
  detail::require(scale > 0, "grid scale must be positive");
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(n);
  detail::require(total <= 4096, "grid too large");

  std::vector<std::vector<double>> coord(total, std::vector<double>(dim));
  std::vector<std::string> labels(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t r = i;
    std::string lab = "(";
    for (int k = 0; k < dim; ++k) {
      const auto c = static_cast<int>(r % n);
      r /= n;
      coord[i][k] = static_cast<double>(c) / (n - 1);
      lab += (k ? "," : "") + std::to_string(c);
    }
    labels[i] = lab + ")";
  }
  const double shrink = scale / std::sqrt(static_cast<double>(dim));
  const auto N = static_cast<Eigen::Index>(total);
  Matrix rho = Matrix::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) {
      double s = 0;
      for (int k = 0; k < dim; ++k) {
        const double t = coord[i][k] - coord[j][k];
        s += t * t;
      }
      rho(i, j) = dim == 1 ? std::abs(coord[i][0] - coord[j][0]) * shrink : std::sqrt(s) * shrink;
    }
  Vector mu = Vector::Constant(N, 1.0 / static_cast<double>(total));
  return QuasiMetricSpace::validate("grid(" + std::to_string(n) + "," + std::to_string(dim) + ")",
                                    std::move(labels), std::move(rho), std::move(mu));
}

/// Leaves of a binary tree of the given depth; two leaves whose paths share L leading
/// steps sit at distance contraction^(L+1). Ultrametric, uniform masses.
inline QuasiMetricSpace cantor(int depth, double contraction, double scale = 1.0) {
  detail::require(depth >= 1 && depth <= 12, "cantor depth must be in [1,12]");
  detail::require(contraction > 0 && contraction < 1, "cantor contraction must be in (0,1)");
  detail::require(scale > 0, "cantor scale must be positive");
  const Eigen::Index N = Eigen::Index{1} << depth;
  Matrix rho = Matrix::Zero(N, N);
  std::vector<std::string> labels(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    std::string lab;
    for (int b = depth - 1; b >= 0; --b) lab += ((i >> b) & 1) ? '1' : '0';
    labels[i] = lab;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (i == j) continue;
      int common = 0;
      for (int b = depth - 1; b >= 0 && (((i >> b) & 1) == ((j >> b) & 1)); --b) ++common;
      rho(i, j) = scale * std::pow(contraction, common + 1);
    }
  }
  Vector mu = Vector::Constant(N, 1.0 / static_cast<double>(N));
  return QuasiMetricSpace::validate(
      "cantor(" + std::to_string(depth) + "," + detail::fmt(contraction) + ")", std::move(labels),
      std::move(rho), std::move(mu));
}

/// rho -> rho^beta pointwise.
inline QuasiMetricSpace snowflake(const QuasiMetricSpace& base, double beta) {
  detail::require(beta > 0, "snowflake exponent must be positive");
  Matrix rho = base.rho().array().pow(beta).matrix();
  return QuasiMetricSpace::validate("snowflake(" + base.name() + "," + detail::fmt(beta) + ")",
                                    base.labels(), std::move(rho), base.mu());
}

/// Disjoint unit-length line grids placed along a line with consecutive islands `gap` apart.
/// No rescaling: the gap is an absolute distance.
inline QuasiMetricSpace islands(const std::vector<int>& sizes, double gap) {
  detail::require(sizes.size() >= 2, "islands needs at least two islands");
  detail::require(gap > 0, "islands gap must be positive");
  std::vector<double> x;
  std::vector<std::string> labels;
  double offset = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    detail::require(sizes[k] >= 1, "island sizes must be positive");
    for (int i = 0; i < sizes[k]; ++i) {
      x.push_back(offset + (sizes[k] == 1 ? 0.0 : static_cast<double>(i) / (sizes[k] - 1)));
      labels.push_back("i" + std::to_string(k) + "." + std::to_string(i));
    }
    offset += 1.0 + gap;
  }
  const auto N = static_cast<Eigen::Index>(x.size());
  Matrix rho(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) rho(i, j) = std::abs(x[i] - x[j]);
  Vector mu = Vector::Constant(N, 1.0 / static_cast<double>(N));
  std::string name = "islands([";
  for (std::size_t k = 0; k < sizes.size(); ++k) name += (k ? "," : "") + std::to_string(sizes[k]);
  return QuasiMetricSpace::validate(name + "]," + detail::fmt(gap) + ")", std::move(labels),
                                    std::move(rho), std::move(mu));
}

/// Symmetric i.i.d. uniform(0,1] distances, entries below `floor` lifted to it; masses uniform
/// on [0.1, 1). With asymmetry > 0 the lower triangle is multiplied by 1 + asymmetry*U.
inline QuasiMetricSpace random_space(std::uint64_t seed, int n, double asymmetry = 0.0,
                                     double floor = 1e-3) {
  detail::require(n >= 2 && n <= 512, "random needs 2 <= n <= 512");
  detail::require(asymmetry >= 0, "asymmetry must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Matrix rho = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = std::max(U(rng), floor);
      rho(i, j) = v;
      rho(j, i) = v;
    }
  if (asymmetry > 0)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) rho(i, j) *= 1.0 + asymmetry * U(rng);
  const double m = rho.maxCoeff();
  if (m > 1) rho /= m;
  Vector mu(n);
  for (int i = 0; i < n; ++i) mu(i) = 0.1 + 0.9 * U(rng);
  return QuasiMetricSpace::validate("random(" + std::to_string(seed) + "," + std::to_string(n) + ")",
                                    {}, std::move(rho), std::move(mu));
}

}  // namespace qmm::gen
