#pragma once

#include <qmm/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace qmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using PointId = std::size_t;
using PointSet = std::vector<PointId>;  // always sorted ascending

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Finite quasi-metric measure space. Immutable once built; every point carries positive mass.
class QuasiMetricSpace {
 public:
  static QuasiMetricSpace validate(std::string name, std::vector<std::string> labels, Matrix rho,
                                   Vector mu);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const Matrix& rho() const { return rho_; }
  const Vector& mu() const { return mu_; }
  std::size_t size() const { return static_cast<std::size_t>(mu_.size()); }
  double d(PointId x, PointId y) const { return rho_(x, y); }
  double mass(PointId x) const { return mu_(x); }

  double measure(const PointSet& s) const {
    double m = 0;
    for (auto i : s) m += mu_(i);
    return m;
  }

  /// The subspace on `members`, keeping the ambient labels. One-point subspaces are allowed
  /// here (they arise as small balls) even though validate() rejects them.
  QuasiMetricSpace subspace(const PointSet& members) const;

 private:
  QuasiMetricSpace() = default;
  std::string name_;
  std::vector<std::string> labels_;
  Matrix rho_;
  Vector mu_;
};

inline QuasiMetricSpace QuasiMetricSpace::validate(std::string name,
                                                   std::vector<std::string> labels, Matrix rho,
                                                   Vector mu) {
  std::vector<ValidationError::Violation> bad;
  const auto n = static_cast<std::size_t>(rho.rows());
  if (rho.rows() != rho.cols())
    bad.push_back({ErrorCode::ShapeMismatch, "rho is not square"});
  if (static_cast<std::size_t>(mu.size()) != n)
    bad.push_back({ErrorCode::ShapeMismatch, "mu length " + std::to_string(mu.size()) +
                                                 " does not match " + std::to_string(n) +
                                                 " points"});
  if (!labels.empty() && labels.size() != n)
    bad.push_back({ErrorCode::ShapeMismatch, "points length " + std::to_string(labels.size()) +
                                                 " does not match " + std::to_string(n) +
                                                 " rows"});
  if (!bad.empty()) throw ValidationError(bad);

  if (n < 2) bad.push_back({ErrorCode::TooFewPoints, "cardinality must be at least 2"});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = rho(i, j);
      const std::string at = "rho[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (!std::isfinite(v)) {
        bad.push_back({ErrorCode::NonFinite, at + " is not finite"});
      } else if (v < 0) {
        bad.push_back({ErrorCode::NegativeDistance, at + " is negative"});
      } else if (i != j && v == 0) {
        bad.push_back({ErrorCode::ZeroOffDiagonal, at + " = 0 violates nondegeneracy"});
      } else if (i == j && v != 0) {
        bad.push_back({ErrorCode::ZeroOffDiagonal, at + " != 0 violates nondegeneracy"});
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(mu(i)))
      bad.push_back({ErrorCode::NonFinite, "mu[" + std::to_string(i) + "] is not finite"});
    else if (mu(i) <= 0)
      bad.push_back({ErrorCode::NonpositiveMass, "mu[" + std::to_string(i) + "] must be > 0"});
  }
  if (!bad.empty()) throw ValidationError(bad);

  if (labels.empty())
    for (std::size_t i = 0; i < n; ++i) labels.push_back("x" + std::to_string(i));

  QuasiMetricSpace s;
  s.name_ = std::move(name);
  s.labels_ = std::move(labels);
  s.rho_ = std::move(rho);
  s.mu_ = std::move(mu);
  return s;
}

inline QuasiMetricSpace QuasiMetricSpace::subspace(const PointSet& members) const {
  if (members.empty()) throw Error(ErrorCode::EmptyBall, "empty subspace");
  const auto m = static_cast<Eigen::Index>(members.size());
  QuasiMetricSpace s;
  s.name_ = name_;
  s.rho_.resize(m, m);
  s.mu_.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    s.labels_.push_back(labels_[members[a]]);
    s.mu_(a) = mu_(members[a]);
    for (Eigen::Index b = 0; b < m; ++b) s.rho_(a, b) = rho_(members[a], members[b]);
  }
  return s;
}

struct SpaceSummary {
  double C_rho = 1;
  double C_tilde_rho = 1;
  double diameter = 0;
  double min_positive_distance = kInf;
  double total_mass = 0;
};

/// Least quasi-triangle constant of a distance matrix (exact max over triples).
inline double quasi_triangle_constant(const Matrix& rho) {
  const auto n = rho.rows();
  double c = 1;
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y) {
      if (x == y) continue;
      const double dxy = rho(x, y);
      for (Eigen::Index z = 0; z < n; ++z) {
        const double m = std::max(rho(x, z), rho(z, y));
        c = std::max(c, dxy / m);
      }
    }
  return c;
}

inline double quasi_symmetry_constant(const Matrix& rho) {
  double c = 1;
  for (Eigen::Index x = 0; x < rho.rows(); ++x)
    for (Eigen::Index y = 0; y < rho.cols(); ++y)
      if (x != y) c = std::max(c, rho(y, x) / rho(x, y));
  return c;
}

inline SpaceSummary space_summary(const QuasiMetricSpace& sp) {
  SpaceSummary s;
  s.C_rho = quasi_triangle_constant(sp.rho());
  s.C_tilde_rho = quasi_symmetry_constant(sp.rho());
  s.diameter = sp.rho().maxCoeff();
  for (std::size_t x = 0; x < sp.size(); ++x)
    for (std::size_t y = 0; y < sp.size(); ++y)
      if (x != y) s.min_positive_distance = std::min(s.min_positive_distance, sp.d(x, y));
  s.total_mass = sp.mu().sum();
  return s;
}

inline double diameter(const QuasiMetricSpace& sp) { return sp.rho().maxCoeff(); }

struct Ball {
  PointId center = 0;
  double radius = 0;
  bool closed = false;
};

/// Membership uses rho(center, y) only, with exact comparisons.
inline PointSet ball_members(const Matrix& rho, PointId center, double radius, bool closed = false) {
  PointSet out;
  for (Eigen::Index y = 0; y < rho.cols(); ++y) {
    const double d = rho(static_cast<Eigen::Index>(center), y);
    if (closed ? d <= radius : d < radius) out.push_back(static_cast<PointId>(y));
  }
  return out;
}

inline PointSet ball_members(const QuasiMetricSpace& sp, PointId center, double radius,
                             bool closed = false) {
  return ball_members(sp.rho(), center, radius, closed);
}

inline PointSet ball_members(const QuasiMetricSpace& sp, const Ball& b) {
  return ball_members(sp.rho(), b.center, b.radius, b.closed);
}

inline double ball_measure(const QuasiMetricSpace& sp, PointId center, double radius,
                           bool closed = false) {
  return sp.measure(ball_members(sp, center, radius, closed));
}

inline bool is_subset(const PointSet& a, const PointSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline PointSet set_difference(const PointSet& a, const PointSet& b) {
  PointSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Sorted distinct positive distances rho(x, .) from a center.
inline std::vector<double> distance_profile(const Matrix& rho, PointId x) {
  std::vector<double> d;
  for (Eigen::Index y = 0; y < rho.cols(); ++y)
    if (static_cast<PointId>(y) != x) d.push_back(rho(static_cast<Eigen::Index>(x), y));
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

inline PointSet all_points(std::size_t n) {
  PointSet s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

}  // namespace qmm
