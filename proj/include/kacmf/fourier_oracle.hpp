#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "kacmf/errors.hpp"
#include "kacmf/quadrature.hpp"
#include "kacmf/sobolev.hpp"

namespace kacmf {

// Quadrature controls for the Fourier-side norm evaluation. Refinement stops
// when two successive refinements agree to rel_agree (relative).
struct QuadratureSpec {
  double rel_agree = 1e-4;
  int max_doublings = 16;
  double tail_phase = 32.0;  // switch to series tails once rho*dist >= this
};

struct OracleResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error on the norm
};

namespace oracle_detail {

constexpr double kPi = 3.14159265358979323846;

// Spherical mean of cos(xi . delta) over |xi| = t for |delta| = 1.
inline double sphere_mean(int d, double t) {
  if (t == 0.0) return 1.0;
  if (d == 3) return std::sin(t) / t;
  return std::cyl_bessel_j(0, t);  // d == 2
}

struct TailValue {
  double value = 0.0;
  double bound = 0.0;  // rigorous remainder bound
};

// S(y, m) = Int_y^inf t^{-m} sin t dt, three integration-by-parts levels.
inline TailValue sin_tail(double y, double m) {
  double value = 0.0, coef = 1.0;
  for (int level = 0; level < 3; ++level) {
    const double ym = std::pow(y, -m);
    value += coef * (ym * std::cos(y) + m * ym / y * std::sin(y));
    coef *= -m * (m + 1.0);
    m += 2.0;
  }
  TailValue out;
  out.value = value;
  out.bound = std::abs(coef) * std::pow(y, 1.0 - m) / (m - 1.0);
  return out;
}

// Int_y^inf t^{-nu} sin(t)/t dt  (d = 3 tail)
inline TailValue g3_tail(double y, double nu) { return sin_tail(y, nu + 1.0); }

// Int_y^inf t^{-nu} J_0(t) dt, using (t J_1)' = t J_0 and J_0' = -J_1.
inline TailValue g2_tail(double y, double nu) {
  double value = 0.0, coef = 1.0;
  for (int level = 0; level < 3; ++level) {
    const double yn = std::pow(y, -nu);
    value += coef * (-yn * std::cyl_bessel_j(1, y) +
                     (nu + 1.0) * yn / y * std::cyl_bessel_j(0, y));
    coef *= -(nu + 1.0) * (nu + 1.0);
    nu += 2.0;
  }
  TailValue out;
  out.value = value;
  // |J_0(t)| <= sqrt(2/(pi t))
  out.bound = std::abs(coef) * std::sqrt(2.0 / kPi) *
              std::pow(y, 0.5 - nu) / (nu - 0.5);
  return out;
}

inline TailValue g_tail(int d, double y, double nu) {
  return d == 3 ? g3_tail(y, nu) : g2_tail(y, nu);
}

struct PairTable {
  std::vector<double> dist;  // distinct pair distances (i<j), may repeat
  std::vector<double> coef;  // 2 w_i w_j for each pair
  double diag = 0.0;         // sum_i w_i^2
  double dmax = 0.0;
  double abs_coef = 0.0;
  double d2_moment = 0.0;  // sum coef * dist^2
  double d4_moment = 0.0;  // sum coef * dist^4
};

inline PairTable build_pairs(const AtomicSignedMeasure& m) {
  PairTable t;
  const std::size_t n = m.size();
  const int d = m.dim;
  // project out the float-level mass defect so the rho -> 0 cancellation
  // is exact
  double mean_w = 0.0;
  for (double w : m.weights) mean_w += w;
  mean_w /= static_cast<double>(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = m.weights[i] - mean_w;
  t.dist.reserve(n * (n - 1) / 2);
  t.coef.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    t.diag += w[i] * w[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double dx = m.coords[i * d + k] - m.coords[j * d + k];
        d2 += dx * dx;
      }
      const double dist = std::sqrt(d2);
      const double c = 2.0 * w[i] * w[j];
      t.dist.push_back(dist);
      t.coef.push_back(c);
      t.dmax = std::max(t.dmax, dist);
      t.abs_coef += std::abs(c);
      t.d2_moment += c * d2;
      t.d4_moment += c * d2 * d2;
    }
  }
  return t;
}

// G(rho) = sum_{i,j} w_i w_j g_d(rho |x_i - x_j|); a two-term Taylor branch
// avoids catastrophic cancellation when every phase is tiny.
inline double eval_G(int d, const PairTable& t, double rho) {
  if (rho * t.dmax < 1e-3) {
    const double r2 = rho * rho;
    if (d == 3) return r2 * (-t.d2_moment / 6.0 + r2 * t.d4_moment / 120.0);
    return r2 * (-t.d2_moment / 4.0 + r2 * t.d4_moment / 64.0);
  }
  double s = t.diag;
  for (std::size_t p = 0; p < t.dist.size(); ++p)
    s += t.coef[p] * sphere_mean(d, rho * t.dist[p]);
  return s;
}

}  // namespace oracle_detail

// Independent Fourier-side evaluation of the H^{-s} norm:
//   ||m||^2 = (2 pi)^{-d} Int |sum_j a_j e^{-i xi . x_j}|^2 |xi|^{-2s} d xi,
// reduced to a radial integral (the spherical factor is sinc for d=3 and J_0
// for d=2), with series tails carrying explicit remainder bounds. Never
// touches the pairwise kernel identity or the dipole constant.
inline OracleResult hnorm_fourier_oracle(const AtomicSignedMeasure& m,
                                         const SobolevIndex& idx,
                                         const QuadratureSpec& spec = {}) {
  using namespace oracle_detail;
  if (idx.d != 2 && idx.d != 3)
    throw std::invalid_argument("fourier oracle supports d = 2 and d = 3");
  if (m.size() == 0) return {};
  if (m.dim != idx.d)
    throw std::invalid_argument("measure dimension does not match index");
  if (std::abs(m.total_mass()) > kMassToleranceFactor * m.abs_mass())
    throw std::domain_error(
        "Fourier integral diverges at xi -> 0 for nonzero total mass");

  const int d = idx.d;
  const double r = idx.r;
  const double two_r = 2.0 * r;
  const double nu = 1.0 + two_r;
  const PairTable table = build_pairs(m);
  if (table.dmax == 0.0 || table.abs_coef == 0.0) return {};

  double integral = 0.0, err = 0.0;
  const double R = std::max(1.0, spec.tail_phase / table.dmax);

  // [0, 1]: substitute rho = t^mm to flatten the rho^{1-2r} endpoint.
  {
    const int mm = static_cast<int>(std::ceil(3.0 / (2.0 - two_r)));
    auto f = [&](double t) {
      if (t <= 0.0) return 0.0;
      const double rho = std::pow(t, mm);
      return mm * std::pow(t, -(two_r * mm + 1.0)) * eval_G(d, table, rho);
    };
    const double floor_scale =
        table.abs_coef + table.diag;  // envelope of |G|
    const int n0 = std::max(64, static_cast<int>(8.0 * std::min(table.dmax, spec.tail_phase)));
    const QuadResult q = simpson_refine(f, 0.0, 1.0, spec.rel_agree,
                                        1e-6 * floor_scale, n0,
                                        spec.max_doublings);
    if (!q.converged)
      throw numeric_error("fourier oracle: radial quadrature on [0,1] did not converge");
    integral += q.value;
    err += q.error;
  }

  // [1, R]: direct, with the node count sized to the fastest oscillation.
  if (R > 1.0) {
    auto f = [&](double rho) {
      return std::pow(rho, -nu) * eval_G(d, table, rho);
    };
    const int n0 = std::max(
        64, static_cast<int>(std::ceil((R - 1.0) * table.dmax * 1.5)));
    const QuadResult q = simpson_refine(f, 1.0, R, spec.rel_agree,
                                        1e-6 * (table.abs_coef + table.diag),
                                        n0, spec.max_doublings);
    if (!q.converged)
      throw numeric_error("fourier oracle: radial quadrature on [1,R] did not converge");
    integral += q.value;
    err += q.error;
  }

  // [R, inf): diagonal exactly, off-diagonal pair by pair. Each pair is
  // integrated numerically up to phase Y and by parts beyond it.
  integral += table.diag * std::pow(R, -two_r) / two_r;
  const double Y = spec.tail_phase;
  for (std::size_t p = 0; p < table.dist.size(); ++p) {
    const double delta = table.dist[p];
    if (delta == 0.0) {
      integral += table.coef[p] * std::pow(R, -two_r) / two_r;
      continue;
    }
    const double scale = table.coef[p] * std::pow(delta, two_r);
    const double y0 = R * delta;
    double piece = 0.0, piece_err = 0.0;
    double ytail = y0;
    if (y0 < Y) {
      auto f = [&](double t) { return std::pow(t, -nu) * sphere_mean(d, t); };
      const int n0 = std::max(16, static_cast<int>((Y - y0) * 1.5));
      const QuadResult q =
          simpson_refine(f, y0, Y, spec.rel_agree, 1e-8, n0, spec.max_doublings);
      piece += q.value;
      piece_err += q.error;
      ytail = Y;
    }
    const TailValue tail = g_tail(d, ytail, nu);
    piece += tail.value;
    piece_err += tail.bound;
    integral += scale * piece;
    err += std::abs(scale) * piece_err;
  }

  const double pref =
      (d == 3) ? 1.0 / (2.0 * kPi * kPi) : 1.0 / (2.0 * kPi);
  const double q2 = pref * integral;
  const double q2err = pref * err;
  OracleResult out;
  if (q2 <= 0.0) {
    out.value = 0.0;
    out.error = std::sqrt(q2err);
    return out;
  }
  out.value = std::sqrt(q2);
  out.error = 0.5 * q2err / out.value;
  return out;
}

// Dipole constant by the Fourier route: the oracle applied to a unit dipole.
inline double dipole_constant_fourier(int d, double r,
                                      const QuadratureSpec& spec = {}) {
  const SobolevIndex idx = SobolevIndex::make(d, r);
  AtomicSignedMeasure m(d);
  std::vector<double> x0(d, 0.0), x1(d, 0.0);
  x1[0] = 1.0;
  m.add(x0.data(), 1.0);
  m.add(x1.data(), -1.0);
  return hnorm_fourier_oracle(m, idx, spec).value;
}

}  // namespace kacmf
