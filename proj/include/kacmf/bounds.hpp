#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kacmf/collision.hpp"
#include "kacmf/errors.hpp"
#include "kacmf/particles.hpp"
#include "kacmf/rng.hpp"
#include "kacmf/sobolev.hpp"

namespace kacmf {

// e1(t) = (e^t - 1)/t and e2(t) = (e^t - 1 - t)/t^2, extended continuously
// by e1(0) = 1, e2(0) = 1/2. Series evaluation below |t| = 1e-4 keeps the
// switchover continuous to better than 1e-12.
inline double e1(double t) {
  if (std::abs(t) < 1e-4)
    return 1.0 + t * (0.5 + t * (1.0 / 6.0 + t / 24.0));
  return std::expm1(t) / t;
}

inline double e2(double t) {
  if (std::abs(t) < 1e-4)
    return 0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0));
  return (std::expm1(t) - t) / (t * t);
}

// Everything the synthetic bound needs about the model itself.
// ell and omega are the N-free jump coefficients:
//   L = ell N^{r/2 - 1}, V = omega / N when the total energy is N k1.
struct ModelConstants {
  SobolevIndex index;
  double kappa = 0.0;  // contraction constant of the kernel
  double k1 = 0.0;     // per-particle energy cap
  double ell = 0.0;
  double omega = 0.0;
  bool strict_cubic = false;  // use e^{3|kappa|T} on the cubic term

  static ModelConstants make(const SobolevIndex& idx, const AngularKernel& kernel,
                             double k1, bool strict_cubic = false) {
    ModelConstants c;
    c.index = idx;
    c.kappa = kacmf::kappa(kernel, idx.r);
    c.k1 = k1;
    const double r = idx.r;
    c.ell = std::pow(2.0, 1.0 + r) * std::sqrt(std::pow(2.0, 1.0 - r) - 1.0) *
            idx.dipole * std::pow(k1, 0.5 * r);
    c.omega = (std::pow(2.0, 1.0 - r) - 1.0) * std::pow(2.0, 1.0 + 2.0 * r) *
              idx.dipole * idx.dipole * std::pow(k1, r);
    c.strict_cubic = strict_cubic;
    return c;
  }
};

// Fluctuation data of the initial law: sigma^2 is the variance of
// delta_v - mu in H^{-s}, A the exponential-moment constant at parameter a.
struct InitialFluctuation {
  double sigma2 = 0.0;
  double a = 1.0;
  double A = 0.0;
};

// Jump amplitude bound L = 2^{1+r} sqrt(2^{1-r} - 1) C_r K^{r/2} / N.
inline double jump_amplitude_L(double total_energy, std::size_t n,
                               const ModelConstants& c) {
  if (total_energy < 0.0)
    throw std::domain_error("jump_amplitude_L: negative energy");
  const double r = c.index.r;
  return std::pow(2.0, 1.0 + r) * std::sqrt(std::pow(2.0, 1.0 - r) - 1.0) *
         c.index.dipole * std::pow(total_energy, 0.5 * r) /
         static_cast<double>(n);
}

// Jump variance bound V = (2^{1-r} - 1) 2^{1+2r} C_r^2 K^r N^{-(1+r)}.
inline double jump_variance_V(double total_energy, std::size_t n,
                              const ModelConstants& c) {
  if (total_energy < 0.0)
    throw std::domain_error("jump_variance_V: negative energy");
  const double r = c.index.r;
  return (std::pow(2.0, 1.0 - r) - 1.0) * std::pow(2.0, 1.0 + 2.0 * r) *
         c.index.dipole * c.index.dipole * std::pow(total_energy, r) *
         std::pow(static_cast<double>(n), -(1.0 + r));
}

// ||delta_v - mu||^2 for one atom v of a discrete law, by the kernel
// identity.
inline double atom_deviation_norm(const InitialLaw& law, std::size_t atom,
                                  const SobolevIndex& idx) {
  AtomicSignedMeasure m(law.dim);
  m.add(law.atom_coords.data() + atom * law.dim, 1.0);
  for (std::size_t j = 0; j < law.atom_probs.size(); ++j)
    m.add(law.atom_coords.data() + j * law.dim, -law.atom_probs[j]);
  return hnorm(m, idx, 1);
}

struct MonteCarloValue {
  double value = 0.0;
  double stderr_ = 0.0;
};

// sigma^2 = Int ||delta_v - mu||^2 dmu(v). Exact for discrete laws; for
// continuous laws use sigma2_mc below.
inline double sigma2(const InitialLaw& law, const SobolevIndex& idx) {
  if (law.kind != InitialLaw::Kind::Discrete)
    throw std::invalid_argument("sigma2: exact evaluation needs a discrete law");
  double s = 0.0;
  for (std::size_t i = 0; i < law.atom_probs.size(); ++i) {
    const double nrm = atom_deviation_norm(law, i, idx);
    s += law.atom_probs[i] * nrm * nrm;
  }
  return s;
}

// Unbiased Monte-Carlo route for any samplable law, via
// sigma^2 = (C_r^2 / 2) E |W - W'|^{2r} with W, W' i.i.d. mu.
inline MonteCarloValue sigma2_mc(const InitialLaw& law, const SobolevIndex& idx,
                                 std::size_t samples, Philox& rng) {
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> w1(law.dim), w2(law.dim);
  for (std::size_t i = 0; i < samples; ++i) {
    law.sample(rng, w1.data());
    law.sample(rng, w2.data());
    double d2 = 0.0;
    for (int k = 0; k < law.dim; ++k) {
      const double d = w1[k] - w2[k];
      d2 += d * d;
    }
    const double x = (d2 > 0.0) ? std::pow(d2, idx.r) : 0.0;
    sum += x;
    sum2 += x * x;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  const double c2h = 0.5 * idx.dipole * idx.dipole;
  return {c2h * mean, c2h * std::sqrt(var / n)};
}

// A(mu) = Int (e^{a||nu||} - a||nu|| - 1) dD_mu(nu); exact for discrete laws.
inline double bigA(const InitialLaw& law, double a, const SobolevIndex& idx) {
  if (!(a > 0.0)) throw std::domain_error("bigA: a must be positive");
  if (law.kind != InitialLaw::Kind::Discrete)
    throw std::invalid_argument("bigA: exact evaluation needs a discrete law");
  double s = 0.0;
  for (std::size_t i = 0; i < law.atom_probs.size(); ++i) {
    const double nrm = atom_deviation_norm(law, i, idx);
    s += law.atom_probs[i] * (std::expm1(a * nrm) - a * nrm);
  }
  return s;
}

// Monte-Carlo route for continuous laws: outer samples of v, inner pair
// samples for ||delta_v - mu||. The inner estimate carries O(1/inner) bias
// through the nonlinearity; the reported stderr is the outer spread.
inline MonteCarloValue bigA_mc(const InitialLaw& law, double a,
                               const SobolevIndex& idx, std::size_t outer,
                               std::size_t inner, Philox& rng) {
  if (!(a > 0.0)) throw std::domain_error("bigA_mc: a must be positive");
  std::vector<double> v(law.dim), w1(law.dim), w2(law.dim);
  double cross_ww = 0.0;
  for (std::size_t i = 0; i < inner; ++i) {
    law.sample(rng, w1.data());
    law.sample(rng, w2.data());
    double d2 = 0.0;
    for (int k = 0; k < law.dim; ++k) {
      const double d = w1[k] - w2[k];
      d2 += d * d;
    }
    cross_ww += (d2 > 0.0) ? std::pow(d2, idx.r) : 0.0;
  }
  cross_ww /= static_cast<double>(inner);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < outer; ++i) {
    law.sample(rng, v.data());
    double cross_vw = 0.0;
    for (std::size_t j = 0; j < inner; ++j) {
      law.sample(rng, w1.data());
      double d2 = 0.0;
      for (int k = 0; k < law.dim; ++k) {
        const double d = v[k] - w1[k];
        d2 += d * d;
      }
      cross_vw += (d2 > 0.0) ? std::pow(d2, idx.r) : 0.0;
    }
    cross_vw /= static_cast<double>(inner);
    const double c2 = idx.dipole * idx.dipole;
    const double nrm2 = std::max(0.0, c2 * (cross_vw - 0.5 * cross_ww));
    const double nrm = std::sqrt(nrm2);
    if (!std::isfinite(std::exp(a * nrm)))
      throw numeric_error("bigA_mc: exponential moment appears divergent");
    const double x = std::expm1(a * nrm) - a * nrm;
    sum += x;
    sum2 += x * x;
  }
  const double n = static_cast<double>(outer);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

struct InitialTermResult {
  double value = 0.0;
  bool valid = true;  // lambda <= a N
};

// ln bound on E U(lambda (muhat - mu)) for N i.i.d. initial particles:
// ln 2 + lambda^2 sigma^2 / (2N) + lambda^3 A / (N^2 a^3), valid for
// lambda <= a N (still computed, flagged, outside that range).
inline InitialTermResult initial_term(double lambda, std::size_t n,
                                      const InitialFluctuation& fl) {
  InitialTermResult out;
  const double N = static_cast<double>(n);
  out.value = std::log(2.0) + lambda * lambda * fl.sigma2 / (2.0 * N) +
              lambda * lambda * lambda * fl.A / (N * N * fl.a * fl.a * fl.a);
  out.valid = lambda <= fl.a * N;
  return out;
}

// Dynamic fluctuation term lambda^2 e2(lambda e^{2 kappa_- T} L)
// e1(-2 kappa T) V T, kappa_- = max(-kappa, 0).
inline double dynamic_term(double lambda, double T, double kappa, double L,
                           double V) {
  if (L < 0.0 || V < 0.0 || T < 0.0)
    throw std::domain_error("dynamic_term: L, V, T must be nonnegative");
  const double kminus = std::max(-kappa, 0.0);
  return lambda * lambda * e2(lambda * std::exp(2.0 * kminus * T) * L) *
         e1(-2.0 * kappa * T) * V * T;
}

// Full evaluation of the synthetic bound for one (N, T, lambda) query.
struct BoundQuery {
  std::size_t N = 0;
  double T = 0.0;
  double lambda = 0.0;
};

struct BoundReport {
  double lambda = 0.0;
  double T = 0.0;
  std::size_t N = 0;
  double term_static = 0.0;     // ln 2
  double term_quadratic = 0.0;  // e^{2|k|T} lambda^2 sigma^2 / (2N)
  double term_cubic = 0.0;      // e^{2|k|T} lambda^3 A / (N^2 a^3)
  double term_dynamic = 0.0;
  double total = 0.0;
  bool valid = false;  // lambda <= a e^{-|kappa|T} N
  std::vector<std::pair<double, double>> tails;  // (epsilon, probability)
};

inline BoundReport synthetic_bound(const BoundQuery& q, const ModelConstants& c,
                                   const InitialFluctuation& fl) {
  if (!(q.lambda > 0.0)) throw std::domain_error("synthetic_bound: lambda must be > 0");
  if (q.T < 0.0) throw std::domain_error("synthetic_bound: T must be >= 0");
  if (q.N < 2) throw std::domain_error("synthetic_bound: N must be >= 2");
  const double N = static_cast<double>(q.N);
  const double r = c.index.r;
  const double kabs = std::abs(c.kappa);
  const double boost = std::exp(2.0 * kabs * q.T);
  const double cubic_boost =
      c.strict_cubic ? std::exp(3.0 * kabs * q.T) : boost;
  BoundReport rep;
  rep.lambda = q.lambda;
  rep.T = q.T;
  rep.N = q.N;
  rep.term_static = std::log(2.0);
  rep.term_quadratic = boost * q.lambda * q.lambda * fl.sigma2 / (2.0 * N);
  rep.term_cubic = cubic_boost * q.lambda * q.lambda * q.lambda * fl.A /
                   (N * N * fl.a * fl.a * fl.a);
  rep.term_dynamic = (q.lambda * q.lambda * c.omega * q.T / N) *
                     e1(2.0 * kabs * q.T) *
                     e2(q.lambda * boost * c.ell * std::pow(N, 0.5 * r - 1.0));
  rep.total = rep.term_static + rep.term_quadratic + rep.term_cubic +
              rep.term_dynamic;
  rep.valid = q.lambda <= fl.a * std::exp(-kabs * q.T) * N;
  return rep;
}

// Markov step: P(||.|| >= eps) <= min(1, exp(ln_bound - lambda eps)).
inline double tail_probability(double ln_bound, double lambda, double eps) {
  if (lambda < 0.0 || eps < 0.0)
    throw std::domain_error("tail_probability: lambda, eps must be >= 0");
  return std::min(1.0, std::exp(ln_bound - lambda * eps));
}

struct OptimizedTail {
  double lambda_star = 0.0;
  double probability = 1.0;
};

// Minimize ln synthetic_bound(lambda) - lambda eps over the validity range
// (0, a e^{-|kappa|T} N] by golden-section search. The objective is convex
// in lambda (sum of convex terms minus a linear one).
inline OptimizedTail optimize_lambda(std::size_t N, double T, double eps,
                                     const ModelConstants& c,
                                     const InitialFluctuation& fl) {
  if (!(eps > 0.0)) throw std::domain_error("optimize_lambda: eps must be > 0");
  const double kabs = std::abs(c.kappa);
  const double hi = fl.a * std::exp(-kabs * T) * static_cast<double>(N);
  if (!(hi > 0.0)) throw std::domain_error("optimize_lambda: empty validity range");
  const double lo = 1e-12 * hi;
  auto objective = [&](double lam) {
    return synthetic_bound({N, T, lam}, c, fl).total - lam * eps;
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  while (b - a > 1e-6 * std::max(1.0, b)) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = objective(x2);
    }
  }
  OptimizedTail out;
  out.lambda_star = 0.5 * (a + b);
  out.probability = std::min(1.0, std::exp(objective(out.lambda_star)));
  return out;
}

// Large-N Gaussian form of the bound:
//   2 exp(-x^2 / (2 [e^{2|kappa|T} sigma^2 + e1(2|kappa|T) omega T])).
inline double asymptotic_gaussian_bound(double x, double T,
                                        const ModelConstants& c,
                                        const InitialFluctuation& fl) {
  if (x < 0.0) throw std::domain_error("asymptotic_gaussian_bound: x must be >= 0");
  const double kabs = std::abs(c.kappa);
  const double denom =
      std::exp(2.0 * kabs * T) * fl.sigma2 + e1(2.0 * kabs * T) * c.omega * T;
  return 2.0 * std::exp(-x * x / (2.0 * denom));
}

}  // namespace kacmf
