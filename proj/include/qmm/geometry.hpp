#pragma once

#include <qmm/regularization.hpp>
#include <qmm/space.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

// Every ball function r -> mu(B_open(x,r)) is a left-continuous step function with jumps just
// after the distances from x. All scans below evaluate it at the breakpoints, which is exact.

namespace qmm {

// ---------------------------------------------------------------------------
// half-mass radius

inline double half_mass_radius(const QuasiMetricSpace& sp, PointId x, double r) {
  if (!(r >= 0)) throw Error(ErrorCode::Precondition, "radius must be nonnegative");
  if (r == 0) return 0;
  const double half = ball_measure(sp, x, r) / 2;
  // Candidates t are the distances below r: for t just above d the ball gains {rho = d}.
  std::vector<std::pair<double, double>> dm;  // (distance, mass) inside B(x,r)
  for (PointId y = 0; y < sp.size(); ++y)
    if (sp.d(x, y) < r) dm.emplace_back(sp.d(x, y), sp.mass(y));
  std::sort(dm.begin(), dm.end());
  double acc = 0;
  for (std::size_t i = 0; i < dm.size();) {
    const double d = dm[i].first;
    while (i < dm.size() && dm[i].first == d) acc += dm[i++].second;
    if (acc > half) return d;  // B_open(x,d) still <= half; anything past d exceeds it
  }
  return r;  // unreachable for r > 0: the full ball has mass > half
}

// ---------------------------------------------------------------------------
// uniform perfectness

struct PerfectnessReport {
  double lambda_star = 1;
  bool perfect = true;
  PointId witness_x = 0;
  double witness_r = 0;  // radius at which the widest empty annulus sits
  double threshold = 0.125;
};

/// Radii at or below the nearest-neighbour distance of x are outside the finite scale set
/// (there every finite space fails). For r in (d_i, d_{i+1}] the annulus condition reads
/// lambda <= d_i / r, worst at r = d_{i+1}.
inline PerfectnessReport uniform_perfectness(const QuasiMetricSpace& sp, double threshold = 0.125) {
  PerfectnessReport rep;
  rep.threshold = threshold;
  for (PointId x = 0; x < sp.size(); ++x) {
    const auto d = distance_profile(sp.rho(), x);
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      const double ratio = d[i] / d[i + 1];
      if (ratio < rep.lambda_star) {
        rep.lambda_star = ratio;
        rep.witness_x = x;
        rep.witness_r = d[i + 1];
      }
    }
  }
  rep.perfect = rep.lambda_star >= threshold;
  return rep;
}

// ---------------------------------------------------------------------------
// Ahlfors-type fits

struct RegularityFit {
  double Q = 1;
  double kappa = kInf;
  double upper_c = kInf;  // atoms make mu(B(x,r))/r^Q unbounded as r -> 0
  PointId witness_x = 0;
  double witness_r = 0;
};

/// Radii at which mu(B_open(x,.))/r^Q can attain its infimum over (0, rmax]: the distances
/// from x not exceeding rmax, plus rmax itself.
inline std::vector<double> critical_radii(const Matrix& rho, PointId x, double rmax) {
  std::vector<double> r;
  for (double d : distance_profile(rho, x))
    if (d <= rmax) r.push_back(d);
  if (r.empty() || r.back() != rmax) r.push_back(rmax);
  return r;
}

inline RegularityFit regularity_fit(const QuasiMetricSpace& sp, double Q) {
  if (!(Q > 0)) throw Error(ErrorCode::Precondition, "Q must be positive");
  RegularityFit fit;
  fit.Q = Q;
  const double diam = diameter(sp);
  for (PointId x = 0; x < sp.size(); ++x)
    for (double r : critical_radii(sp.rho(), x, diam)) {
      const double v = ball_measure(sp, x, r) / std::pow(r, Q);
      if (v < fit.kappa) {
        fit.kappa = v;
        fit.witness_x = x;
        fit.witness_r = r;
      }
    }
  return fit;
}

/// The constant b of the V(sigma B0, Q, b) condition: min of mu(B(x,r))/r^Q over balls with
/// r in (0, sigma R0] contained in sigma B0.
inline RegularityFit v_constant(const QuasiMetricSpace& sp, double Q, PointId center, double R0,
                                double sigma) {
  if (!(Q > 0) || !(sigma >= 1) || !(R0 > 0))
    throw Error(ErrorCode::Precondition, "need Q > 0, R0 > 0, sigma >= 1");
  RegularityFit fit;
  fit.Q = Q;
  const double big = sigma * R0;
  const PointSet outer = ball_members(sp, center, big);
  for (PointId x : outer)
    for (double r : critical_radii(sp.rho(), x, big)) {
      const PointSet b = ball_members(sp, x, r);
      if (!is_subset(b, outer)) continue;
      const double v = sp.measure(b) / std::pow(r, Q);
      if (v < fit.kappa) {
        fit.kappa = v;
        fit.witness_x = x;
        fit.witness_r = r;
      }
    }
  return fit;
}

// ---------------------------------------------------------------------------
// doubling

struct DoublingReport {
  double Q = 1;
  double C_doub = 1;
  PointId doub_x = 0;
  double doub_r = 0;
  double kappa_Q = kInf;
  // Extremal containment B(x, r) in B(y, R); R is the infimum of its constancy interval.
  PointId kappa_x = 0, kappa_y = 0;
  double kappa_r = 0, kappa_R = 0;
};

namespace detail {

/// Constancy intervals of r -> B_open(x,r): interval i is (lo_i, hi_i] with lo_0 = 0 and
/// hi_last = inf; members are {rho(x,.) <= lo_i}.
struct BallLadder {
  std::vector<double> lo, hi;
  std::vector<PointSet> members;
  std::vector<double> mass;
};

inline BallLadder ball_ladder(const QuasiMetricSpace& sp, PointId x) {
  BallLadder L;
  std::vector<double> d = distance_profile(sp.rho(), x);
  d.insert(d.begin(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    L.lo.push_back(d[i]);
    L.hi.push_back(i + 1 < d.size() ? d[i + 1] : kInf);
    L.members.push_back(ball_members(sp, x, d[i], true));
    L.mass.push_back(sp.measure(L.members.back()));
  }
  return L;
}

}  // namespace detail

inline DoublingReport doubling_analysis(const QuasiMetricSpace& sp, double Q) {
  if (!(Q > 0)) throw Error(ErrorCode::Precondition, "Q must be positive");
  DoublingReport rep;
  rep.Q = Q;
  const std::size_t n = sp.size();

  for (PointId x = 0; x < n; ++x) {
    std::vector<double> br;
    for (double d : distance_profile(sp.rho(), x)) {
      br.push_back(d);
      br.push_back(d / 2);
    }
    for (double r : br) {
      const double v = ball_measure(sp, x, 2 * r) / ball_measure(sp, x, r);
      if (v > rep.C_doub) {
        rep.C_doub = v;
        rep.doub_x = x;
        rep.doub_r = r;
      }
    }
  }

  std::vector<detail::BallLadder> lad;
  for (PointId x = 0; x < n; ++x) lad.push_back(detail::ball_ladder(sp, x));

  for (PointId x = 0; x < n; ++x) {
    const auto& Lx = lad[x];
    for (std::size_t i = 0; i < Lx.lo.size(); ++i) {
      for (PointId y = 0; y < n; ++y) {
        // Containment of B(x, r) in the y-ladder: the smallest admissible y-interval.
        double far = 0;
        for (PointId z : Lx.members[i]) far = std::max(far, sp.d(y, z));
        const auto& Ly = lad[y];
        for (std::size_t j = 0; j < Ly.lo.size(); ++j) {
          if (Ly.lo[j] < far) continue;
          double factor;
          if (Lx.lo[i] < Ly.hi[j] && Ly.lo[j] < Lx.hi[i]) {
            factor = 1;  // a common radius r = R exists
          } else if (Lx.hi[i] <= Ly.lo[j]) {
            factor = std::pow(Ly.lo[j] / Lx.hi[i], Q);
          } else {
            continue;  // every admissible R is below every admissible r
          }
          const double v = Lx.mass[i] / Ly.mass[j] * factor;
          if (v < rep.kappa_Q) {
            rep.kappa_Q = v;
            rep.kappa_x = x;
            rep.kappa_y = y;
            rep.kappa_r = std::isfinite(Lx.hi[i]) ? Lx.hi[i] : Ly.lo[j];
            rep.kappa_R = std::max(Ly.lo[j], rep.kappa_r);
          }
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// smoothness-index lower bound and chain sums

struct IndexBounds {
  double smoothness_lb = kInf;
  std::vector<double> alphas;
  std::vector<Matrix> chain_table;  // chain_table[a](x, y) = min chain sum of rho^alphas[a]
};

inline IndexBounds index_bounds(const QuasiMetricSpace& sp, const std::vector<double>& alpha_grid,
                                const RegularizedMetric* reg = nullptr) {
  IndexBounds ib;
  const RegularizedMetric own = reg ? RegularizedMetric{} : regularize(sp);
  const RegularizedMetric& R = reg ? *reg : own;
  const double c1 = quasi_triangle_constant(sp.rho());
  const double c2 = quasi_triangle_constant(R.rho_sharp);
  auto inv = [](double c) { return c <= 1 ? kInf : 1.0 / std::log2(c); };
  ib.smoothness_lb = std::max(inv(c1), inv(c2));
  for (double a : alpha_grid) {
    if (!(a > 0)) throw Error(ErrorCode::Precondition, "alpha grid must be positive");
    ib.alphas.push_back(a);
    ib.chain_table.push_back(chain_power_sums(sp.rho(), a));
  }
  return ib;
}

}  // namespace qmm
