#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kacmf/errors.hpp"
#include "kacmf/quadrature.hpp"
#include "kacmf/rng.hpp"

namespace kacmf {

namespace vec {
inline double dot(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}
inline double norm(const double* a, int d) { return std::sqrt(dot(a, a, d)); }
}  // namespace vec

// Angular collision measure on (0, pi]: a density plus optional point
// masses (the latter are only used by test kernels). For Maxwellian models
// the measure does not depend on the relative speed.
struct AngularKernel {
  std::string name;
  double lambda = 0.0;  // total rate, Int density + sum of atom masses
  bool maxwellian = true;
  double support_lo = 0.0;
  double support_hi = 3.14159265358979323846;
  std::function<double(double)> density;       // d gamma / d theta
  std::function<double(double)> inverse_cdf;   // u in [0,1) -> theta
  std::vector<std::pair<double, double>> atoms;  // (theta, mass)
};

namespace kernel_detail {

constexpr double kPi = 3.14159265358979323846;

// sin^{d-2} normalization making the total mass exactly 1.
inline double kac_norm(int d) {
  return std::exp(std::lgamma(d - 1.0) - (d - 2.0) * std::log(2.0) -
                  2.0 * std::lgamma(0.5 * (d - 1.0)));
}

// Numeric inverse CDF table for sin^{d-2} with d >= 4.
struct CdfTable {
  std::vector<double> theta, cdf;
  int d = 0;
};

inline CdfTable build_kac_table(int d) {
  CdfTable t;
  t.d = d;
  const int cells = 4096;
  const double norm = kac_norm(d);
  auto dens = [&](double th) {
    return norm * std::pow(std::sin(th), d - 2.0);
  };
  t.theta.resize(cells + 1);
  t.cdf.resize(cells + 1);
  t.cdf[0] = 0.0;
  const double h = kPi / cells;
  for (int i = 0; i < cells; ++i) {
    const double a = i * h, b = a + h;
    t.theta[i] = a;
    t.cdf[i + 1] =
        t.cdf[i] + h / 6.0 * (dens(a) + 4.0 * dens(0.5 * (a + b)) + dens(b));
  }
  t.theta[cells] = kPi;
  const double total = t.cdf[cells];
  for (double& c : t.cdf) c /= total;
  return t;
}

inline double invert_table(const CdfTable& t, double u) {
  const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
  std::size_t hi = static_cast<std::size_t>(it - t.cdf.begin());
  if (hi == 0) hi = 1;
  if (hi >= t.cdf.size()) hi = t.cdf.size() - 1;
  const std::size_t lo = hi - 1;
  const double span = t.cdf[hi] - t.cdf[lo];
  const double frac = span > 0.0 ? (u - t.cdf[lo]) / span : 0.0;
  double th = t.theta[lo] + frac * (t.theta[hi] - t.theta[lo]);
  // one Newton polish against the exact density
  const double norm = kac_norm(t.d);
  for (int it2 = 0; it2 < 2; ++it2) {
    const double dens = norm * std::pow(std::sin(th), t.d - 2.0);
    if (dens <= 0.0) break;
    const double approx_cdf =
        t.cdf[lo] + (th - t.theta[lo]) / (t.theta[hi] - t.theta[lo]) * span;
    th -= (approx_cdf - u) / dens;
    th = std::clamp(th, t.theta[lo], t.theta[hi]);
  }
  return th;
}

}  // namespace kernel_detail

// Uniform-scattering kernel: total rate 1, density sin^{d-2} normalized.
inline AngularKernel kac_kernel(int d) {
  using namespace kernel_detail;
  if (d < 2) throw std::domain_error("kac_kernel: dimension must be >= 2");
  AngularKernel k;
  k.name = "kac";
  k.lambda = 1.0;
  const double norm = kac_norm(d);
  k.density = [norm, d](double th) {
    return norm * std::pow(std::sin(th), d - 2.0);
  };
  if (d == 2) {
    k.inverse_cdf = [](double u) { return kPi * u; };
  } else if (d == 3) {
    k.inverse_cdf = [](double u) {
      return std::acos(std::clamp(1.0 - 2.0 * u, -1.0, 1.0));
    };
  } else {
    auto table = std::make_shared<CdfTable>(build_kac_table(d));
    k.inverse_cdf = [table](double u) { return invert_table(*table, u); };
  }
  return k;
}

// Grazing-collision surrogate: pure power density theta^{-3/2} cut below
// epsilon. The cutoff keeps the total rate finite.
inline AngularKernel maxwell_potential_surrogate(int d, double eps) {
  using namespace kernel_detail;
  if (d < 2)
    throw std::domain_error("maxwell_potential_surrogate: dimension must be >= 2");
  if (eps >= kPi)
    throw std::domain_error("maxwell_potential_surrogate: empty kernel, cutoff >= pi");
  if (eps <= 0.0)
    throw std::domain_error("maxwell_potential_surrogate: divergent total rate, cutoff <= 0");
  AngularKernel k;
  k.name = "surrogate";
  k.support_lo = eps;
  const double a = 1.0 / std::sqrt(eps);
  const double b = 1.0 / std::sqrt(kPi);
  k.lambda = 2.0 * (a - b);
  k.density = [eps](double th) {
    return (th >= eps) ? std::pow(th, -1.5) : 0.0;
  };
  k.inverse_cdf = [a, b](double u) {
    const double x = a - u * (a - b);
    return 1.0 / (x * x);
  };
  return k;
}

// Multiply the angular measure by c > 0 (rates are linear in the measure).
inline AngularKernel scale_kernel(const AngularKernel& k, double c) {
  AngularKernel out = k;
  out.lambda = k.lambda * c;
  if (k.density) {
    auto base = k.density;
    out.density = [base, c](double th) { return c * base(th); };
  }
  for (auto& atom : out.atoms) atom.second *= c;
  return out;
}

// Deviation angle with law density/lambda; a deterministic function of u.
inline double sample_angle(const AngularKernel& k, double u) {
  if (!k.atoms.empty()) {
    double acc = 0.0;
    const double target = u * k.lambda;
    for (const auto& [theta, mass] : k.atoms) {
      acc += mass;
      if (target < acc) return theta;
    }
    return k.atoms.back().first;
  }
  return k.inverse_cdf(u);
}

// Center-of-mass collision update. With u = w - v and
// u' = |u| (cos(theta) uhat + sin(theta) ehat):
//   v' = (v+w)/2 - u'/2,  w' = (v+w)/2 + u'/2,
// so momentum is conserved exactly as computed and |w'-v'| = |w-v|.
inline void collide(const double* v, const double* w, int d, double theta,
                    const double* ehat, double* v_out, double* w_out) {
  double u2 = 0.0;
  for (int k = 0; k < d; ++k) {
    const double du = w[k] - v[k];
    u2 += du * du;
  }
  if (u2 == 0.0) {  // zero relative speed, null collision
    for (int k = 0; k < d; ++k) {
      v_out[k] = v[k];
      w_out[k] = w[k];
    }
    return;
  }
  const double unorm = std::sqrt(u2);
  const double e2 = vec::dot(ehat, ehat, d);
  if (std::abs(e2 - 1.0) > 1e-9)
    throw std::invalid_argument("collide: ehat is not a unit vector");
  double edotu = 0.0;
  for (int k = 0; k < d; ++k) edotu += ehat[k] * (w[k] - v[k]);
  if (std::abs(edotu) > 1e-9 * unorm)
    throw std::invalid_argument("collide: ehat is not orthogonal to w - v");
  const double ct = std::cos(theta), st = std::sin(theta);
  for (int k = 0; k < d; ++k) {
    const double c = 0.5 * (v[k] + w[k]);
    const double uk = (w[k] - v[k]) / unorm;
    const double upk = unorm * (ct * uk + st * ehat[k]);
    v_out[k] = c - 0.5 * upk;
    w_out[k] = c + 0.5 * upk;
  }
}

// Uniform unit vector orthogonal to u (u != 0): Gram-Schmidt of a standard
// Gaussian draw. Isotropic around the u axis by rotational symmetry.
inline void random_unit_orthogonal(const double* u, int d, Philox& rng,
                                   double* e_out) {
  const double un = vec::norm(u, d);
  for (;;) {
    double proj = 0.0;
    for (int k = 0; k < d; ++k) {
      e_out[k] = rng.next_gaussian();
      proj += e_out[k] * u[k];
    }
    proj /= un * un;
    double n2 = 0.0;
    for (int k = 0; k < d; ++k) {
      e_out[k] -= proj * u[k];
      n2 += e_out[k] * e_out[k];
    }
    if (n2 > 1e-24) {
      const double inv = 1.0 / std::sqrt(n2);
      for (int k = 0; k < d; ++k) e_out[k] *= inv;
      return;
    }
  }
}

// Contraction constant kappa = Int [1 - cos(theta/2)^r - sin(theta/2)^r]
// d gamma(theta). Evaluated by two unrelated quadrature schemes which must
// agree to 1e-9 absolute.
inline double kappa(const AngularKernel& k, double r) {
  using kernel_detail::kPi;
  if (!(r > 0.0) || !(r < 1.0))
    throw std::domain_error("kappa: r must lie in (0, 1)");
  auto integrand = [r](double th) {
    // cos(th/2) written as sin((pi - th)/2) so both factors vanish exactly
    // at the endpoints of (0, pi]
    const double c = std::max(0.0, std::sin(0.5 * (kPi - th)));
    const double s = std::max(0.0, std::sin(0.5 * th));
    return 1.0 - std::pow(c, r) - std::pow(s, r);
  };
  double atom_part = 0.0;
  for (const auto& [theta, mass] : k.atoms) atom_part += mass * integrand(theta);

  double v_gauss = atom_part, v_mid = atom_part;
  if (k.density) {
    auto f = [&](double th) { return integrand(th) * k.density(th); };
    const QuadResult a =
        adaptive_gauss(f, k.support_lo, k.support_hi, 1e-12, 40000);
    const QuadResult b =
        midpoint_refine(f, k.support_lo, k.support_hi, 1e-10, 17);
    if (!a.converged || !b.converged)
      throw numeric_error("kappa: quadrature did not converge");
    v_gauss += a.value;
    v_mid += b.value;
  }
  if (std::abs(v_gauss - v_mid) > 1e-9)
    throw numeric_error("kappa: quadrature schemes disagree beyond 1e-9");
  return v_gauss;
}

// One application of the post-collision redistribution with a standing
// particle: v' = v/2 + (|v|/2)(cos(theta) vhat + sin(theta) ehat), ehat
// uniform among unit vectors orthogonal to v. |v'| = |v| cos(theta/2).
inline void qtheta_sample(const double* v, int d, double theta, Philox& rng,
                          double* out) {
  const double vn = vec::norm(v, d);
  if (vn == 0.0) {
    for (int k = 0; k < d; ++k) out[k] = 0.0;
    return;
  }
  std::vector<double> e(d);
  random_unit_orthogonal(v, d, rng, e.data());
  const double ct = std::cos(theta), st = std::sin(theta);
  for (int k = 0; k < d; ++k)
    out[k] = 0.5 * v[k] + 0.5 * vn * (ct * v[k] / vn + st * e[k]);
}

}  // namespace kacmf
