#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "kacmf/errors.hpp"
#include "kacmf/pairsum.hpp"

namespace kacmf {

// Riesz convolution constant c(s,d) = Gamma((d-s)/2) / ((2 pi)^{d/2} Gamma(s/2)).
// Requires s in (0, d) so both Gamma arguments are positive.
inline double riesz_constant(int d, double r) {
  if (d < 1) throw std::domain_error("riesz_constant: dimension must be >= 1");
  const double s = 0.5 * d + r;
  if (!(s > 0.0) || !(s < static_cast<double>(d)))
    throw std::domain_error(
        "riesz_constant: requires s = d/2 + r in (0, d), i.e. r < d/2");
  return std::tgamma(0.5 * (d - s)) /
         (std::pow(2.0 * 3.14159265358979323846, 0.5 * d) *
          std::tgamma(0.5 * s));
}

// Norm of a unit dipole delta_x - delta_y, |x-y| = 1. Closed form from the
// radial reduction of 2 (2pi)^{-d} Int (1 - cos xi_1) |xi|^{-d-2r} dxi:
// the integral equals pi^{d/2} |Gamma(-r)| / (2^{2r} Gamma(d/2 + r)).
inline double dipole_constant(int d, double r) {
  if (d < 2) throw std::domain_error("dipole_constant: dimension must be >= 2");
  if (!(r > 0.0) || !(r < 1.0))
    throw std::domain_error("dipole_constant: r must lie in (0, 1)");
  const double pi = 3.14159265358979323846;
  const double abs_gamma_minus_r = std::tgamma(1.0 - r) / r;
  const double integral = std::pow(pi, 0.5 * d) * abs_gamma_minus_r /
                          (std::pow(2.0, 2.0 * r) * std::tgamma(0.5 * d + r));
  const double c2 = 2.0 * std::pow(2.0 * pi, -static_cast<double>(d)) * integral;
  return std::sqrt(c2);
}

// Index data for one homogeneous negative-Sobolev space: dimension d,
// regularity r in (0,1), s = d/2 + r, and the two derived constants.
struct SobolevIndex {
  int d = 0;
  double r = 0.0;
  double s = 0.0;
  double c_sd = 0.0;    // Riesz constant
  double dipole = 0.0;  // C_r

  static SobolevIndex make(int d, double r) {
    if (d < 2) throw std::domain_error("SobolevIndex: dimension must be >= 2");
    if (!(r > 0.0) || !(r < 1.0))
      throw std::domain_error("SobolevIndex: r must lie in (0, 1)");
    SobolevIndex idx;
    idx.d = d;
    idx.r = r;
    idx.s = 0.5 * d + r;
    idx.c_sd = riesz_constant(d, r);
    idx.dipole = dipole_constant(d, r);
    return idx;
  }
};

inline double riesz_constant(const SobolevIndex& idx) { return idx.c_sd; }
inline double dipole_constant(const SobolevIndex& idx) { return idx.dipole; }

// Finite signed combination of point masses on R^d.
struct AtomicSignedMeasure {
  int dim = 0;
  std::vector<double> coords;   // n * dim, row-major
  std::vector<double> weights;  // n

  AtomicSignedMeasure() = default;
  explicit AtomicSignedMeasure(int d) : dim(d) {}

  std::size_t size() const { return weights.size(); }

  void add(const double* x, double w) {
    coords.insert(coords.end(), x, x + dim);
    weights.push_back(w);
  }
  void add(std::initializer_list<double> x, double w) {
    if (static_cast<int>(x.size()) != dim)
      throw std::invalid_argument("atom dimension mismatch");
    coords.insert(coords.end(), x.begin(), x.end());
    weights.push_back(w);
  }

  double total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  double abs_mass() const {
    double s = 0.0;
    for (double w : weights) s += std::abs(w);
    return s;
  }
  bool finite() const {
    for (double x : coords)
      if (!std::isfinite(x)) return false;
    for (double w : weights)
      if (!std::isfinite(w)) return false;
    return true;
  }
};

inline constexpr double kMassToleranceFactor = 1e-9;

inline void require_zero_mass(const AtomicSignedMeasure& m) {
  if (std::abs(m.total_mass()) > kMassToleranceFactor * m.abs_mass())
    throw std::domain_error("H^{-s} norm undefined for nonzero total mass");
}

// Squared norm via the pairwise kernel identity
//   ||m||^2 = -(C_r^2 / 2) sum_{i,j} a_i a_j |x_i - x_j|^{2r},
// valid on zero-mass measures. Tiny negative round-off is clamped to zero;
// anything below -1e-9 * scale means the quadratic form failed and raises.
inline double hnorm_squared(const AtomicSignedMeasure& m,
                            const SobolevIndex& idx, int threads = 0) {
  if (m.size() == 0) return 0.0;
  if (m.dim != idx.d)
    throw std::invalid_argument("measure dimension does not match index");
  if (!m.finite())
    throw std::invalid_argument("measure has non-finite atoms");
  require_zero_mass(m);
  const PlanarCloud cloud =
      PlanarCloud::from_rowmajor(m.dim, m.coords.data(), m.size());
  const WeightedPairSums sums =
      weighted_pair_sums(cloud, m.weights.data(), 2.0 * idx.r, threads);
  const double c2 = idx.dipole * idx.dipole;
  const double q = -c2 * sums.signed_sum;  // off-diagonal doubled; diag is 0
  const double scale = c2 * sums.abs_sum;
  if (q < -1e-9 * scale)
    throw numeric_error("kernel quadratic form negative beyond round-off");
  return q < 0.0 ? 0.0 : q;
}

inline double hnorm(const AtomicSignedMeasure& m, const SobolevIndex& idx,
                    int threads = 0) {
  return std::sqrt(hnorm_squared(m, idx, threads));
}

// Empirical measure with uniform weights 1/n; caches its self pair sum so
// repeated distance evaluations against the same cloud stay O(n*m).
struct EmpiricalCloud {
  PlanarCloud pts;
  double self_sum = -1.0;  // sum_{i<j} |x_i-x_j|^{2r}, lazily filled

  static EmpiricalCloud from_rowmajor(int dim, const double* xs,
                                      std::size_t n) {
    EmpiricalCloud c;
    c.pts = PlanarCloud::from_rowmajor(dim, xs, n);
    return c;
  }

  double ensure_self_sum(double two_r, int threads) {
    if (self_sum < 0.0) self_sum = pair_self_sum(pts, two_r, threads);
    return self_sum;
  }
};

// ||(1/N) sum_i delta_{x_i} - (1/M) sum_j delta_{y_j}||_{H^{-s}}
inline double empirical_distance(EmpiricalCloud& a, EmpiricalCloud& b,
                                 const SobolevIndex& idx, int threads = 0) {
  const double two_r = 2.0 * idx.r;
  const double n = static_cast<double>(a.pts.n);
  const double m = static_cast<double>(b.pts.n);
  const double saa = a.ensure_self_sum(two_r, threads);
  const double sbb = b.ensure_self_sum(two_r, threads);
  const double sab = pair_cross_sum(a.pts, b.pts, two_r, threads);
  const double c2 = idx.dipole * idx.dipole;
  const double q = c2 * (sab / (n * m) - saa / (n * n) - sbb / (m * m));
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

}  // namespace kacmf
