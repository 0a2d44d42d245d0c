#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <utility>

#include "kacmf/collision.hpp"
#include "kacmf/errors.hpp"
#include "kacmf/particles.hpp"
#include "kacmf/rng.hpp"
#include "kacmf/sobolev.hpp"

namespace kacmf {

// Recursive branching sampler for the mean-field evolution
//   d/dt mu = lambda (Qplus(mu, mu) - mu)
// of a cutoff Maxwellian kernel. Each sample is unbiased; the expected tree
// size is e^{lambda t}.
struct WildTreeSpec {
  AngularKernel kernel;
  InitialLaw law;
  double t = 0.0;
  int max_depth = 64;
};

struct WildStats {
  std::uint64_t nodes = 0;
  std::uint64_t depth_exceeded = 0;  // whole-tree retries
};

namespace wild_detail {

struct DepthExceeded {};

inline void sample_node(const WildTreeSpec& spec, double t, int depth,
                        Philox& rng, double* out, WildStats& stats) {
  if (depth > spec.max_depth) throw DepthExceeded{};
  ++stats.nodes;
  const int d = spec.law.dim;
  const double lam = spec.kernel.lambda;
  const double p0 = std::exp(-lam * t);
  const double u = rng.next_double();
  if (t <= 0.0 || u < p0) {
    spec.law.sample(rng, out);
    return;
  }
  // branch time: density lam e^{-lam (t - tau)} / (1 - p0) on [0, t]
  const double w = rng.next_double();
  const double tau = t + std::log(p0 + w * (1.0 - p0)) / lam;
  double vbuf[particle_detail::kMaxDim], wbuf[particle_detail::kMaxDim];
  sample_node(spec, tau, depth + 1, rng, vbuf, stats);
  sample_node(spec, tau, depth + 1, rng, wbuf, stats);
  const double theta = sample_angle(spec.kernel, rng.next_double());
  double u_rel[particle_detail::kMaxDim];
  double u2 = 0.0;
  for (int k = 0; k < d; ++k) {
    u_rel[k] = wbuf[k] - vbuf[k];
    u2 += u_rel[k] * u_rel[k];
  }
  if (u2 == 0.0) {  // zero relative speed: collision is a no-op
    for (int k = 0; k < d; ++k) out[k] = vbuf[k];
    return;
  }
  double ehat[particle_detail::kMaxDim];
  random_unit_orthogonal(u_rel, d, rng, ehat);
  double wout[particle_detail::kMaxDim];
  collide(vbuf, wbuf, d, theta, ehat, out, wout);
}

}  // namespace wild_detail

// One unbiased draw from mu_t. If the recursion exceeds max_depth (expected
// never in practice), the whole tree is resampled with fresh randomness and
// the event is counted.
inline void wild_sample(const WildTreeSpec& spec, Philox& rng, double* out,
                        WildStats* stats = nullptr) {
  if (spec.law.dim > particle_detail::kMaxDim)
    throw config_error("dimension too large for the wild sampler");
  if (!spec.kernel.maxwellian)
    throw std::invalid_argument("wild_sample: kernel must be Maxwellian");
  WildStats local;
  WildStats& st = stats ? *stats : local;
  for (;;) {
    try {
      wild_detail::sample_node(spec, spec.t, 0, rng, out, st);
      return;
    } catch (const wild_detail::DepthExceeded&) {
      ++st.depth_exceeded;
    }
  }
}

// M i.i.d. samples of mu_t as an empirical measure with weights 1/M.
// Sample i uses its own derived stream, so generation order is irrelevant.
inline AtomicSignedMeasure reference_measure(const WildTreeSpec& spec,
                                             std::size_t m,
                                             std::uint64_t master_seed,
                                             std::uint64_t stream_kind,
                                             WildStats* stats = nullptr) {
  if (m < 1) throw config_error("reference measure needs at least one sample");
  AtomicSignedMeasure out(spec.law.dim);
  out.coords.resize(m * spec.law.dim);
  out.weights.assign(m, 1.0 / static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    Philox rng = Philox::stream(master_seed, stream_tag(stream_kind, i));
    wild_sample(spec, rng, out.coords.data() + i * spec.law.dim, stats);
  }
  return out;
}

// CSV export of an atomic measure: weight,v1,...,vd
inline void write_measure_csv(std::ostream& os, const AtomicSignedMeasure& m) {
  os << "weight";
  for (int k = 1; k <= m.dim; ++k) os << ",v" << k;
  os << "\n";
  char buf[64];
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", m.weights[i]);
    os << buf;
    for (int k = 0; k < m.dim; ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", m.coords[i * m.dim + k]);
      os << buf;
    }
    os << "\n";
  }
}

// Per-coordinate variance and fourth moment of the Gaussian equilibrium with
// energy k per particle: variance 2k/d, fourth moment 3 (2k/d)^2.
inline std::pair<double, double> equilibrium_moments(double k, int d) {
  if (!(k >= 0.0)) throw std::domain_error("equilibrium_moments: k must be >= 0");
  if (d < 1) throw std::domain_error("equilibrium_moments: d must be >= 1");
  const double var = 2.0 * k / d;
  return {var, 3.0 * var * var};
}

}  // namespace kacmf
