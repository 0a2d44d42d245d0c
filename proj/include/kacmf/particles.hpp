#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "kacmf/collision.hpp"
#include "kacmf/errors.hpp"
#include "kacmf/rng.hpp"

namespace kacmf {

// Initial velocity distribution: discrete atoms or an isotropic Gaussian
// with prescribed energy per particle.
struct InitialLaw {
  enum class Kind { Discrete, GaussianIso };
  Kind kind = Kind::Discrete;
  int dim = 0;
  std::vector<double> atom_coords;  // n * dim
  std::vector<double> atom_probs;   // n, sums to 1
  double energy_k = 0.0;            // Gaussian: E[|v|^2]/2

  static InitialLaw two_atom(int d) {
    InitialLaw law;
    law.dim = d;
    law.atom_coords.assign(2 * d, 0.0);
    law.atom_coords[0] = -1.0;
    law.atom_coords[d] = 1.0;
    law.atom_probs = {0.5, 0.5};
    return law;
  }

  static InitialLaw discrete(int d, std::vector<double> coords,
                             std::vector<double> probs) {
    InitialLaw law;
    law.dim = d;
    law.atom_coords = std::move(coords);
    law.atom_probs = std::move(probs);
    law.validate();
    return law;
  }

  static InitialLaw gaussian(int d, double k) {
    InitialLaw law;
    law.kind = Kind::GaussianIso;
    law.dim = d;
    law.energy_k = k;
    law.validate();
    return law;
  }

  void validate() const {
    if (dim < 1) throw config_error("initial law: dimension must be positive");
    if (kind == Kind::Discrete) {
      if (atom_probs.empty())
        throw config_error("initial law: no atoms given");
      if (atom_coords.size() != atom_probs.size() * static_cast<std::size_t>(dim))
        throw config_error("initial law: atom coordinate count mismatch");
      double s = 0.0;
      for (double p : atom_probs) {
        if (!(p >= 0.0)) throw config_error("initial law: negative probability");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9)
        throw config_error("initial law: probabilities must sum to 1");
      for (double x : atom_coords)
        if (!std::isfinite(x))
          throw config_error("initial law: non-finite atom coordinate");
    } else {
      if (!(energy_k >= 0.0) || !std::isfinite(energy_k))
        throw config_error("initial law: Gaussian energy must be >= 0");
    }
  }

  void sample(Philox& rng, double* out) const {
    if (kind == Kind::Discrete) {
      const double u = rng.next_double();
      double acc = 0.0;
      std::size_t pick = atom_probs.size() - 1;
      for (std::size_t i = 0; i < atom_probs.size(); ++i) {
        acc += atom_probs[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      for (int k = 0; k < dim; ++k) out[k] = atom_coords[pick * dim + k];
    } else {
      const double sd = std::sqrt(2.0 * energy_k / dim);
      for (int k = 0; k < dim; ++k) out[k] = sd * rng.next_gaussian();
    }
  }
};

// N particle velocities plus the jump-chain bookkeeping. The generator state
// makes a trajectory a deterministic function of (seed, stream).
struct Ensemble {
  int dim = 0;
  std::size_t n = 0;
  std::vector<double> v;  // n * dim, row-major
  double time = 0.0;
  std::uint64_t collisions = 0;
  Philox rng{0};

  double* vel(std::size_t i) { return v.data() + i * dim; }
  const double* vel(std::size_t i) const { return v.data() + i * dim; }
};

struct Observables {
  std::vector<double> momentum;  // P
  double energy = 0.0;           // K
  double internal = 0.0;         // Ktilde = K - |P|^2 / (2N)
};

inline Ensemble sample_initial(const InitialLaw& law, std::size_t n,
                               std::uint64_t master_seed,
                               std::uint64_t stream_id = 0) {
  if (n < 2) throw config_error("ensemble needs at least 2 particles");
  law.validate();
  Ensemble e;
  e.dim = law.dim;
  e.n = n;
  e.v.resize(n * law.dim);
  e.rng = Philox::stream(master_seed, stream_id);
  for (std::size_t i = 0; i < n; ++i) law.sample(e.rng, e.vel(i));
  return e;
}

inline Observables observables(const Ensemble& e) {
  if (e.n == 0) throw std::invalid_argument("observables: empty ensemble");
  Observables o;
  o.momentum.assign(e.dim, 0.0);
  for (std::size_t i = 0; i < e.n; ++i) {
    const double* vi = e.vel(i);
    double sq = 0.0;
    for (int k = 0; k < e.dim; ++k) {
      o.momentum[k] += vi[k];
      sq += vi[k] * vi[k];
    }
    o.energy += 0.5 * sq;
  }
  double p2 = 0.0;
  for (double pk : o.momentum) p2 += pk * pk;
  o.internal = o.energy - p2 / (2.0 * static_cast<double>(e.n));
  return o;
}

// Total jump rate (N-1) Lambda / 2: all C(N,2) unordered pairs at rate
// Lambda/N each. Only valid for Maxwellian kernels, whose pair rates do not
// depend on the pair state.
inline double total_rate(const Ensemble& e, const AngularKernel& k) {
  if (!k.maxwellian)
    throw std::invalid_argument("total_rate: only Maxwellian kernels supported");
  return 0.5 * static_cast<double>(e.n - 1) * k.lambda;
}

namespace particle_detail {

inline constexpr int kMaxDim = 16;

// One collision event: uniform unordered pair, kernel angle, isotropic
// azimuth. Consumes randomness in a fixed order. Returns the chosen pair.
inline std::pair<std::size_t, std::size_t> apply_collision(
    Ensemble& e, const AngularKernel& k) {
  const std::size_t n = e.n;
  std::size_t i = e.rng.uniform_below(n);
  std::size_t j = e.rng.uniform_below(n);
  while (j == i) j = e.rng.uniform_below(n);
  if (i > j) std::swap(i, j);
  const double theta = sample_angle(k, e.rng.next_double());
  double* vi = e.vel(i);
  double* vj = e.vel(j);
  double u[kMaxDim];
  double u2 = 0.0;
  for (int c = 0; c < e.dim; ++c) {
    u[c] = vj[c] - vi[c];
    u2 += u[c] * u[c];
  }
  ++e.collisions;
  if (u2 == 0.0) return {i, j};  // null collision, relative speed 0
  double ehat[kMaxDim];
  random_unit_orthogonal(u, e.dim, e.rng, ehat);
  double vo[kMaxDim], wo[kMaxDim];
  collide(vi, vj, e.dim, theta, ehat, vo, wo);
  for (int c = 0; c < e.dim; ++c) {
    vi[c] = vo[c];
    vj[c] = wo[c];
  }
  return {i, j};
}

}  // namespace particle_detail

struct StepOutcome {
  bool absorbed = false;  // rate was zero; time pushed to +infinity
  std::size_t i = 0, j = 0;  // the pair that collided
};

// One jump of the chain: exponential holding time, then a collision.
inline StepOutcome step(Ensemble& e, const AngularKernel& k) {
  if (e.dim > particle_detail::kMaxDim)
    throw config_error("dimension too large for the particle engine");
  const double rate = total_rate(e, k);
  if (!(rate > 0.0)) {
    e.time = std::numeric_limits<double>::infinity();
    return {true, 0, 0};
  }
  const double u = e.rng.next_double();
  e.time += -std::log1p(-u) / rate;
  const auto [i, j] = particle_detail::apply_collision(e, k);
  return {false, i, j};
}

struct CheckpointSnapshot {
  double time = 0.0;
  std::uint64_t collisions = 0;
  std::vector<double> momentum;
  double energy = 0.0;
  double internal = 0.0;
  std::vector<double> velocities;  // optional copy of the state
};

struct TrajectoryRecord {
  bool absorbed = false;
  std::vector<CheckpointSnapshot> snapshots;
};

// Exact jump chain over [0, T]; each snapshot is the state at the last jump
// at or before the checkpoint time (the chain is piecewise constant).
// Checkpoints never consume randomness, so the trajectory does not depend
// on where they are placed.
inline TrajectoryRecord simulate(Ensemble& e, const AngularKernel& k, double T,
                                 const std::vector<double>& checkpoints,
                                 bool store_velocities = true) {
  if (e.dim > particle_detail::kMaxDim)
    throw config_error("dimension too large for the particle engine");
  if (T < 0.0) throw config_error("simulate: negative horizon");
  double prev = 0.0;
  for (double c : checkpoints) {
    if (c < prev || c > T)
      throw config_error("simulate: checkpoints must be sorted within [0, T]");
    prev = c;
  }
  TrajectoryRecord rec;
  const double rate = total_rate(e, k);
  auto snap = [&](double at) {
    CheckpointSnapshot s;
    s.time = at;
    s.collisions = e.collisions;
    const Observables o = observables(e);
    s.momentum = o.momentum;
    s.energy = o.energy;
    s.internal = o.internal;
    if (store_velocities) s.velocities = e.v;
    rec.snapshots.push_back(std::move(s));
  };
  if (!(rate > 0.0)) {
    rec.absorbed = true;
    for (double c : checkpoints) snap(c);
    e.time = std::numeric_limits<double>::infinity();
    return rec;
  }
  double t_next = e.time - std::log1p(-e.rng.next_double()) / rate;
  for (double c : checkpoints) {
    while (t_next <= c) {
      particle_detail::apply_collision(e, k);
      e.time = t_next;
      t_next += -std::log1p(-e.rng.next_double()) / rate;
    }
    snap(c);
  }
  while (t_next <= T) {
    particle_detail::apply_collision(e, k);
    e.time = t_next;
    t_next += -std::log1p(-e.rng.next_double()) / rate;
  }
  e.time = T;
  return rec;
}

// CSV export of one snapshot: index,v1,...,vd
inline void write_snapshot_csv(std::ostream& os, const CheckpointSnapshot& s,
                               int dim) {
  os << "index";
  for (int k = 1; k <= dim; ++k) os << ",v" << k;
  os << "\n";
  char buf[64];
  const std::size_t n = s.velocities.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    os << i;
    for (int k = 0; k < dim; ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", s.velocities[i * dim + k]);
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace kacmf
