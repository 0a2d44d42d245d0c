#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

namespace kacmf {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Coordinate-planar point storage; the pair loops below vectorize on it.
struct PlanarCloud {
  int dim = 0;
  std::size_t n = 0;
  std::vector<std::vector<double>> plane;

  static PlanarCloud from_rowmajor(int dim, const double* xs, std::size_t n) {
    PlanarCloud c;
    c.dim = dim;
    c.n = n;
    c.plane.assign(dim, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < dim; ++k) c.plane[k][i] = xs[i * dim + k];
    return c;
  }
};

namespace detail {

constexpr std::size_t kPairBlock = 1024;

// Runs f(block_index) for block_index in [0, nblocks). Work is pulled from a
// shared counter; results must be stored per block so the reduction order is
// fixed and independent of scheduling.
template <class F>
void run_blocks(std::size_t nblocks, int threads, F&& f) {
  threads = resolve_threads(threads);
  if (threads == 1 || nblocks <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) f(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      f(b);
    }
  };
  std::vector<std::thread> pool;
  const int nt = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(threads), nblocks));
  pool.reserve(nt - 1);
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

// sum over j in [j0, j1) of coef_j * |x_i - x_j|^{2r}.
// two_r == 1 is the hot case and compiles to a vectorized sqrt loop.
template <int D>
inline double row_sum(const PlanarCloud& a, std::size_t i, const PlanarCloud& b,
                      std::size_t j0, std::size_t j1, double two_r,
                      const double* coef) {
  double xi[D > 0 ? D : 1];
  const int dim = (D > 0) ? D : a.dim;
  for (int k = 0; k < dim; ++k) xi[k] = a.plane[k][i];
  double s = 0.0;
  if (two_r == 1.0) {
    if constexpr (D == 3) {
      const double *x = b.plane[0].data(), *y = b.plane[1].data(),
                   *z = b.plane[2].data();
      const double x0 = xi[0], y0 = xi[1], z0 = xi[2];
      if (coef) {
        for (std::size_t j = j0; j < j1; ++j) {
          const double dx = x[j] - x0, dy = y[j] - y0, dz = z[j] - z0;
          s += coef[j] * std::sqrt(dx * dx + dy * dy + dz * dz);
        }
      } else {
        for (std::size_t j = j0; j < j1; ++j) {
          const double dx = x[j] - x0, dy = y[j] - y0, dz = z[j] - z0;
          s += std::sqrt(dx * dx + dy * dy + dz * dz);
        }
      }
      return s;
    } else if constexpr (D == 2) {
      const double *x = b.plane[0].data(), *y = b.plane[1].data();
      const double x0 = xi[0], y0 = xi[1];
      if (coef) {
        for (std::size_t j = j0; j < j1; ++j) {
          const double dx = x[j] - x0, dy = y[j] - y0;
          s += coef[j] * std::sqrt(dx * dx + dy * dy);
        }
      } else {
        for (std::size_t j = j0; j < j1; ++j) {
          const double dx = x[j] - x0, dy = y[j] - y0;
          s += std::sqrt(dx * dx + dy * dy);
        }
      }
      return s;
    }
  }
  const double r = 0.5 * two_r;
  for (std::size_t j = j0; j < j1; ++j) {
    double d2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = b.plane[k][j] - xi[k];
      d2 += d * d;
    }
    double v;
    if (two_r == 1.0)
      v = std::sqrt(d2);
    else if (two_r == 2.0)
      v = d2;
    else
      v = (d2 > 0.0) ? std::pow(d2, r) : 0.0;
    s += coef ? coef[j] * v : v;
  }
  return s;
}

template <int D>
double self_sum_impl(const PlanarCloud& c, double two_r, int threads) {
  const std::size_t n = c.n;
  if (n < 2) return 0.0;
  const std::size_t nblocks = (n + kPairBlock - 1) / kPairBlock;
  std::vector<double> partial(nblocks, 0.0);
  run_blocks(nblocks, threads, [&](std::size_t b) {
    const std::size_t i0 = b * kPairBlock;
    const std::size_t i1 = std::min(n, i0 + kPairBlock);
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i)
      acc += row_sum<D>(c, i, c, i + 1, n, two_r, nullptr);
    partial[b] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <int D>
double cross_sum_impl(const PlanarCloud& a, const PlanarCloud& b, double two_r,
                      int threads) {
  if (a.n == 0 || b.n == 0) return 0.0;
  const std::size_t nblocks = (a.n + kPairBlock - 1) / kPairBlock;
  std::vector<double> partial(nblocks, 0.0);
  run_blocks(nblocks, threads, [&](std::size_t blk) {
    const std::size_t i0 = blk * kPairBlock;
    const std::size_t i1 = std::min(a.n, i0 + kPairBlock);
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i)
      acc += row_sum<D>(a, i, b, 0, b.n, two_r, nullptr);
    partial[blk] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <int D>
void weighted_self_impl(const PlanarCloud& c, const double* w, double two_r,
                        int threads, double& signed_sum, double& abs_sum) {
  const std::size_t n = c.n;
  signed_sum = abs_sum = 0.0;
  if (n < 2) return;
  std::vector<double> wabs(n);
  for (std::size_t i = 0; i < n; ++i) wabs[i] = std::abs(w[i]);
  const std::size_t nblocks = (n + kPairBlock - 1) / kPairBlock;
  std::vector<double> ps(nblocks, 0.0), pa(nblocks, 0.0);
  run_blocks(nblocks, threads, [&](std::size_t b) {
    const std::size_t i0 = b * kPairBlock;
    const std::size_t i1 = std::min(n, i0 + kPairBlock);
    double accs = 0.0, acca = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
      accs += w[i] * row_sum<D>(c, i, c, i + 1, n, two_r, w);
      acca += wabs[i] * row_sum<D>(c, i, c, i + 1, n, two_r, wabs.data());
    }
    ps[b] = accs;
    pa[b] = acca;
  });
  for (std::size_t b = 0; b < nblocks; ++b) {
    signed_sum += ps[b];
    abs_sum += pa[b];
  }
}

}  // namespace detail

// sum_{i<j} |x_i - x_j|^{2r}
inline double pair_self_sum(const PlanarCloud& c, double two_r,
                            int threads = 0) {
  switch (c.dim) {
    case 2: return detail::self_sum_impl<2>(c, two_r, threads);
    case 3: return detail::self_sum_impl<3>(c, two_r, threads);
    default: return detail::self_sum_impl<0>(c, two_r, threads);
  }
}

// sum_{i in a, j in b} |x_i - y_j|^{2r}
inline double pair_cross_sum(const PlanarCloud& a, const PlanarCloud& b,
                             double two_r, int threads = 0) {
  switch (a.dim) {
    case 2: return detail::cross_sum_impl<2>(a, b, two_r, threads);
    case 3: return detail::cross_sum_impl<3>(a, b, two_r, threads);
    default: return detail::cross_sum_impl<0>(a, b, two_r, threads);
  }
}

struct WeightedPairSums {
  double signed_sum = 0.0;  // sum_{i<j} w_i w_j |x_i-x_j|^{2r}
  double abs_sum = 0.0;     // sum_{i<j} |w_i w_j| |x_i-x_j|^{2r}
};

inline WeightedPairSums weighted_pair_sums(const PlanarCloud& c,
                                           const double* w, double two_r,
                                           int threads = 0) {
  WeightedPairSums out;
  switch (c.dim) {
    case 2:
      detail::weighted_self_impl<2>(c, w, two_r, threads, out.signed_sum,
                                    out.abs_sum);
      break;
    case 3:
      detail::weighted_self_impl<3>(c, w, two_r, threads, out.signed_sum,
                                    out.abs_sum);
      break;
    default:
      detail::weighted_self_impl<0>(c, w, two_r, threads, out.signed_sum,
                                    out.abs_sum);
  }
  return out;
}

}  // namespace kacmf
