#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "kacmf/collision.hpp"
#include "kacmf/quadrature.hpp"
#include "kacmf/rng.hpp"
#include "kacmf/sobolev.hpp"

using namespace kacmf;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Kolmogorov-Smirnov check at the 1% level (critical value 1.6276).
void ks_check(std::vector<double> samples,
              const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    dmax = std::max({dmax, std::abs(F - lo), std::abs(F - hi)});
  }
  const double stat = dmax * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  INFO("KS statistic " << stat);
  CHECK(stat < 1.6276236115189503);
}

AngularKernel point_mass_kernel(double theta, double mass) {
  AngularKernel k;
  k.name = "point";
  k.lambda = mass;
  k.atoms = {{theta, mass}};
  return k;
}

}  // namespace

TEST_CASE("kac kernel densities and total rate", "[collision]") {
  const AngularKernel k3 = kac_kernel(3);
  CHECK(k3.lambda == 1.0);
  for (double th : {0.3, 1.0, 2.0, 3.0})
    CHECK(k3.density(th) == Catch::Approx(0.5 * std::sin(th)).epsilon(1e-14));

  const AngularKernel k2 = kac_kernel(2);
  CHECK(k2.density(1.234) == Catch::Approx(1.0 / kPi).epsilon(1e-14));

  for (int d : {2, 3, 4, 5}) {
    const AngularKernel k = kac_kernel(d);
    const QuadResult q = adaptive_gauss(k.density, 0.0, kPi, 1e-11);
    CHECK(q.value == Catch::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(kac_kernel(1), std::domain_error);
}

TEST_CASE("grazing surrogate kernel", "[collision]") {
  const AngularKernel k = maxwell_potential_surrogate(3, 0.01);
  CHECK(k.lambda == Catch::Approx(18.871620832904487).epsilon(1e-12));
  CHECK(maxwell_potential_surrogate(3, 0.04).lambda ==
        Catch::Approx(8.8716208329044874).epsilon(1e-12));
  CHECK(k.density(0.005) == 0.0);
  CHECK(k.density(0.02) == Catch::Approx(std::pow(0.02, -1.5)).epsilon(1e-14));
  const QuadResult q = adaptive_gauss(k.density, k.support_lo, kPi, 1e-9);
  CHECK(q.value == Catch::Approx(k.lambda).epsilon(1e-9));
  CHECK_THROWS_AS(maxwell_potential_surrogate(3, 3.5), std::domain_error);
  CHECK_THROWS_AS(maxwell_potential_surrogate(3, 0.0), std::domain_error);
  CHECK_THROWS_AS(maxwell_potential_surrogate(3, -1.0), std::domain_error);
}

TEST_CASE("angle sampling quantiles", "[collision]") {
  const AngularKernel k3 = kac_kernel(3);
  CHECK(sample_angle(k3, 0.5) == Catch::Approx(kPi / 2).epsilon(1e-14));
  CHECK(sample_angle(k3, 0.75) ==
        Catch::Approx(2.0943951023931955).epsilon(1e-12));  // acos(-1/2)
  const AngularKernel kp = point_mass_kernel(1.0, 2.0);
  CHECK(sample_angle(kp, 0.3) == 1.0);
}

TEST_CASE("angle sampling distribution (KS at 1%)", "[collision]") {
  const std::size_t n = 100000;
  Philox rng = Philox::stream(555, 0);

  SECTION("kac d=3") {
    const AngularKernel k = kac_kernel(3);
    std::vector<double> s(n);
    for (auto& x : s) x = sample_angle(k, rng.next_double());
    ks_check(std::move(s),
             [](double th) { return 0.5 * (1.0 - std::cos(th)); });
  }
  SECTION("kac d=5, table-based sampler") {
    const AngularKernel k = kac_kernel(5);
    std::vector<double> s(n);
    for (auto& x : s) x = sample_angle(k, rng.next_double());
    // CDF of (3/4) sin^3: (cos^3 - 3 cos + 2) / 4
    ks_check(std::move(s), [](double th) {
      const double c = std::cos(th);
      return (c * c * c - 3.0 * c + 2.0) / 4.0;
    });
  }
  SECTION("surrogate eps=0.01") {
    const AngularKernel k = maxwell_potential_surrogate(3, 0.01);
    std::vector<double> s(n);
    for (auto& x : s) x = sample_angle(k, rng.next_double());
    const double a = 1.0 / std::sqrt(0.01), b = 1.0 / std::sqrt(kPi);
    ks_check(std::move(s), [a, b](double th) {
      return (a - 1.0 / std::sqrt(th)) / (a - b);
    });
  }
}

TEST_CASE("collide hand examples", "[collision]") {
  const double v[3] = {-1.0, 0.0, 0.0}, w[3] = {1.0, 0.0, 0.0};
  const double e[3] = {0.0, 1.0, 0.0};
  double vo[3], wo[3];

  collide(v, w, 3, kPi / 2, e, vo, wo);
  CHECK(vo[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(vo[1] == Catch::Approx(-1.0).epsilon(1e-15));
  CHECK(wo[1] == Catch::Approx(1.0).epsilon(1e-15));

  collide(v, w, 3, 0.0, e, vo, wo);
  for (int k = 0; k < 3; ++k) {
    CHECK(vo[k] == Catch::Approx(v[k]).margin(1e-15));
    CHECK(wo[k] == Catch::Approx(w[k]).margin(1e-15));
  }

  collide(v, w, 3, kPi, e, vo, wo);
  for (int k = 0; k < 3; ++k) {
    CHECK(vo[k] == Catch::Approx(w[k]).margin(1e-12));
    CHECK(wo[k] == Catch::Approx(v[k]).margin(1e-12));
  }

  // equal velocities: null collision
  collide(v, v, 3, 1.0, e, vo, wo);
  for (int k = 0; k < 3; ++k) CHECK(vo[k] == v[k]);
}

TEST_CASE("collide conserves momentum, speed and angle", "[collision]") {
  Philox rng = Philox::stream(808, 1);
  for (int trial = 0; trial < 200; ++trial) {
    double v[3], w[3], u[3];
    for (int k = 0; k < 3; ++k) {
      v[k] = rng.next_gaussian();
      w[k] = rng.next_gaussian();
      u[k] = w[k] - v[k];
    }
    double e[3];
    random_unit_orthogonal(u, 3, rng, e);
    const double theta = kPi * rng.next_double();
    double vo[3], wo[3];
    collide(v, w, 3, theta, e, vo, wo);

    const double un = vec::norm(u, 3);
    double up[3];
    for (int k = 0; k < 3; ++k) up[k] = wo[k] - vo[k];
    CHECK(std::abs(vec::norm(up, 3) - un) <= 1e-12 * un);
    double psum = 0.0;
    for (int k = 0; k < 3; ++k)
      psum += std::abs((vo[k] + wo[k]) - (v[k] + w[k]));
    CHECK(psum <= 1e-13 * (vec::norm(v, 3) + vec::norm(w, 3) + 1.0));
    const double cosang = vec::dot(u, up, 3) / (un * un);
    CHECK(cosang == Catch::Approx(std::cos(theta)).margin(1e-12));
  }
}

TEST_CASE("collide validates the azimuth contract", "[collision]") {
  const double v[3] = {0.0, 0.0, 0.0}, w[3] = {1.0, 0.0, 0.0};
  double vo[3], wo[3];
  const double not_unit[3] = {0.0, 2.0, 0.0};
  CHECK_THROWS_AS(collide(v, w, 3, 1.0, not_unit, vo, wo),
                  std::invalid_argument);
  const double not_orth[3] = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(collide(v, w, 3, 1.0, not_orth, vo, wo),
                  std::invalid_argument);
}

TEST_CASE("kappa closed forms and properties", "[collision]") {
  // Kac d=3: the antiderivative route gives kappa = 1 - 4/(r+2)
  for (double r : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double closed = 1.0 - 4.0 / (r + 2.0);
    CHECK(kappa(kac_kernel(3), r) == Catch::Approx(closed).margin(1e-9));
  }
  CHECK(kappa(kac_kernel(3), 0.5) == Catch::Approx(-0.6).margin(1e-9));
  CHECK(kappa(kac_kernel(2), 0.5) ==
        Catch::Approx(-0.52551952700362638).margin(1e-8));

  // point mass at pi: the integrand vanishes there
  CHECK(std::abs(kappa(point_mass_kernel(kPi, 1.0), 0.5)) < 1e-12);

  // r -> 0: integrand tends to -1 pointwise, total mass 1
  CHECK(kappa(kac_kernel(3), 1e-6) == Catch::Approx(-1.0).margin(1e-3));

  // linearity in the angular measure
  const double base = kappa(kac_kernel(3), 0.5);
  const double scaled = kappa(scale_kernel(kac_kernel(3), 2.5), 0.5);
  CHECK(scaled == Catch::Approx(2.5 * base).epsilon(1e-12));

  // frozen quadrature value for the surrogate kernel
  CHECK(kappa(maxwell_potential_surrogate(3, 0.1), 0.5) ==
        Catch::Approx(-2.1120880215978246).margin(1e-8));

  CHECK_THROWS_AS(kappa(kac_kernel(3), 1.5), std::domain_error);
}

TEST_CASE("qtheta geometry", "[collision]") {
  Philox rng = Philox::stream(321, 7);
  double v[3] = {0.3, -1.2, 2.1};
  double out[3];

  qtheta_sample(v, 3, 0.0, rng, out);
  for (int k = 0; k < 3; ++k)
    CHECK(out[k] == Catch::Approx(v[k]).epsilon(1e-12));

  qtheta_sample(v, 3, kPi, rng, out);
  CHECK(vec::norm(out, 3) <= 1e-12 * vec::norm(v, 3));

  const double zero[3] = {0.0, 0.0, 0.0};
  qtheta_sample(zero, 3, 1.0, rng, out);
  CHECK(vec::norm(out, 3) == 0.0);

  for (int trial = 0; trial < 100; ++trial) {
    double x[3];
    for (double& c : x) c = rng.next_gaussian();
    const double theta = kPi * rng.next_double();
    qtheta_sample(x, 3, theta, rng, out);
    const double expected = vec::norm(x, 3) * std::cos(0.5 * theta);
    CHECK(vec::norm(out, 3) == Catch::Approx(expected).margin(1e-12));
    double diff[3];
    for (int k = 0; k < 3; ++k) diff[k] = out[k] - 0.5 * x[k];
    CHECK(vec::norm(diff, 3) ==
          Catch::Approx(0.5 * vec::norm(x, 3)).epsilon(1e-12));
  }
}

TEST_CASE("qtheta contraction smoke test", "[collision]") {
  // Monte-Carlo estimate of the contracted norm against cos(theta/2)^r;
  // scaled-down version of the acceptance sweep.
  Philox rng = Philox::stream(97, 0);
  const SobolevIndex idx = SobolevIndex::make(3, 0.5);
  const double theta = kPi / 2;
  for (int trial = 0; trial < 3; ++trial) {
    AtomicSignedMeasure f(3);
    const std::size_t n = 5;
    std::vector<double> w(n);
    double mean = 0.0;
    for (auto& x : w) {
      x = 2.0 * rng.next_double() - 1.0;
      mean += x;
    }
    mean /= n;
    for (std::size_t i = 0; i < n; ++i) {
      double x[3];
      for (double& c : x) c = rng.next_gaussian();
      f.add(x, w[i] - mean);
    }
    const double norm_f = hnorm(f, idx);

    const std::size_t draws = 4000;
    double q = 0.0, var_q = 0.0;
    const double c2h = 0.5 * idx.dipole * idx.dipole;
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (std::size_t j = i; j < f.size(); ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < draws; ++k) {
          double yi[3], yj[3];
          qtheta_sample(f.coords.data() + 3 * i, 3, theta, rng, yi);
          qtheta_sample(f.coords.data() + 3 * j, 3, theta, rng, yj);
          double d2 = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double dd = yi[c] - yj[c];
            d2 += dd * dd;
          }
          const double dist = std::sqrt(d2);
          s1 += dist;
          s2 += dist * dist;
        }
        const double mean_d = s1 / draws;
        const double var_d =
            std::max(0.0, s2 / draws - mean_d * mean_d) / draws;
        const double coef = (i == j)
                                ? f.weights[i] * f.weights[j]
                                : 2.0 * f.weights[i] * f.weights[j];
        q += -c2h * coef * mean_d;
        var_q += c2h * c2h * coef * coef * var_d;
      }
    }
    const double est = q > 0.0 ? std::sqrt(q) : 0.0;
    const double se =
        est > 0.0 ? 0.5 * std::sqrt(var_q) / est : std::sqrt(std::sqrt(var_q));
    CHECK(est <= std::pow(std::cos(0.5 * theta), idx.r) * norm_f + 4.0 * se);
  }
}
