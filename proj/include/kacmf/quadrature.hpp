#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <utility>
#include <vector>

#include "kacmf/errors.hpp"

namespace kacmf {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  std::size_t evals = 0;
  bool converged = true;
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

struct GLTable {
  std::vector<double> x, w;
  explicit GLTable(int n) { gauss_legendre(n, x, w); }
};

inline const GLTable& gl10() {
  static const GLTable table(10);
  return table;
}
inline const GLTable& gl21() {
  static const GLTable table(21);
  return table;
}

template <class F>
double gl_panel(const GLTable& t, F&& f, double a, double b,
                std::size_t& evals) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < t.x.size(); ++i) s += t.w[i] * f(c + h * t.x[i]);
  evals += t.x.size();
  return s * h;
}

template <class F>
void adaptive_simpson_rec(F&& f, double a, double b, double fa, double fm,
                          double fb, double whole, double tol, int depth,
                          QuadResult& res) {
  const double c = 0.5 * (a + b);
  const double lm = 0.5 * (a + c), rm = 0.5 * (c + b);
  const double flm = f(lm), frm = f(rm);
  res.evals += 2;
  const double h = b - a;
  const double left = h / 12.0 * (fa + 4.0 * flm + fm);
  const double right = h / 12.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) res.converged = false;
    res.value += left + right + delta / 15.0;
    res.error += std::abs(delta) / 15.0;
    return;
  }
  adaptive_simpson_rec(f, a, c, fa, flm, fm, left, 0.5 * tol, depth - 1, res);
  adaptive_simpson_rec(f, c, b, fm, frm, fb, right, 0.5 * tol, depth - 1, res);
}

}  // namespace detail

// Globally adaptive Gauss-Legendre: each cell carries an embedded
// GL10-vs-GL21 error estimate, and the worst cell is bisected until the
// total estimated error drops below abs_tol. Robust for integrable endpoint
// singularities.
template <class F>
QuadResult adaptive_gauss(F&& f, double a, double b, double abs_tol,
                          int max_cells = 20000) {
  QuadResult res;
  if (a == b) return res;

  struct Cell {
    double a, b, value, error;
    bool operator<(const Cell& o) const { return error < o.error; }
  };
  auto make_cell = [&](double lo, double hi) {
    const double coarse = detail::gl_panel(detail::gl10(), f, lo, hi, res.evals);
    const double fine = detail::gl_panel(detail::gl21(), f, lo, hi, res.evals);
    return Cell{lo, hi, fine, std::abs(fine - coarse)};
  };

  std::priority_queue<Cell> queue;
  Cell whole = make_cell(a, b);
  double total = whole.value, err = whole.error;
  queue.push(whole);
  int cells = 1;
  while (err > abs_tol && cells < max_cells) {
    const Cell worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {  // cannot split further
      queue.push(Cell{worst.a, worst.b, worst.value, 0.0});
      err -= worst.error;
      continue;
    }
    const Cell left = make_cell(worst.a, mid);
    const Cell right = make_cell(mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++cells;
  }
  res.value = total;
  res.error = err;
  res.converged = err <= abs_tol;
  return res;
}

// Adaptive Simpson with the classical Richardson error estimate.
template <class F>
QuadResult adaptive_simpson(F&& f, double a, double b, double abs_tol,
                            int max_depth = 48) {
  QuadResult res;
  if (a == b) return res;
  const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  res.evals += 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth,
                               res);
  return res;
}

// Composite midpoint rule, refined by point tripling (old nodes are reused)
// until two successive estimates differ by at most abs_tol.
template <class F>
QuadResult midpoint_refine(F&& f, double a, double b, double abs_tol,
                           int max_iters = 18) {
  QuadResult res;
  if (a == b) return res;
  const double len = b - a;
  std::size_t n = 1;
  double sum = f(a + 0.5 * len);
  res.evals += 1;
  double prev = len * sum;
  for (int it = 0; it < max_iters; ++it) {
    // triple: each old cell [c-h/2, c+h/2] gains nodes at c-h/3 and c+h/3
    const double h = len / static_cast<double>(n);
    const double d1 = h / 3.0;
    double add = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = a + (static_cast<double>(i) + 0.5) * h;
      add += f(c - d1) + f(c + d1);
    }
    res.evals += 2 * n;
    sum += add;
    n *= 3;
    const double cur = len * sum / static_cast<double>(n);
    res.error = std::abs(cur - prev);
    prev = cur;
    if (res.error <= abs_tol) {
      res.value = cur;
      return res;
    }
  }
  res.value = prev;
  res.converged = false;
  return res;
}

// Composite Simpson with doubling, stopping when two successive refinements
// agree to rel_tol (with abs_floor guarding near-zero integrals).
template <class F>
QuadResult simpson_refine(F&& f, double a, double b, double rel_tol,
                          double abs_floor, int n0 = 16, int max_iters = 16) {
  QuadResult res;
  if (a == b) return res;
  if (n0 < 2) n0 = 2;
  n0 += n0 % 2;  // even
  std::size_t n = static_cast<std::size_t>(n0);
  auto composite = [&](std::size_t m) {
    const double h = (b - a) / static_cast<double>(m);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < m; ++i)
      s += f(a + h * static_cast<double>(i)) * ((i % 2) ? 4.0 : 2.0);
    res.evals += m + 1;
    return s * h / 3.0;
  };
  double prev = composite(n);
  for (int it = 0; it < max_iters; ++it) {
    n *= 2;
    const double cur = composite(n);
    res.error = std::abs(cur - prev);
    const double scale = std::max(std::abs(cur), abs_floor);
    prev = cur;
    if (res.error <= rel_tol * scale) {
      res.value = cur;
      return res;
    }
  }
  res.value = prev;
  res.converged = false;
  return res;
}

}  // namespace kacmf
