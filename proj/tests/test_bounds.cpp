#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kacmf/bounds.hpp"

using namespace kacmf;

namespace {

ModelConstants kac3_constants() {
  const SobolevIndex idx = SobolevIndex::make(3, 0.5);
  return ModelConstants::make(idx, kac_kernel(3), 0.5);
}

InitialFluctuation two_atom_fluctuation(const SobolevIndex& idx) {
  const InitialLaw law = InitialLaw::two_atom(3);
  InitialFluctuation fl;
  fl.a = 1.0;
  fl.sigma2 = sigma2(law, idx);
  fl.A = bigA(law, 1.0, idx);
  return fl;
}

}  // namespace

TEST_CASE("e1 and e2", "[bounds]") {
  CHECK(e1(0.0) == 1.0);
  CHECK(e2(0.0) == 0.5);
  CHECK(e1(1.0) == Catch::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
  CHECK(e2(-1.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
  // series switchover continuity at |t| = 1e-4
  for (double t : {1e-4, -1e-4}) {
    const double direct = std::expm1(t) / t;
    CHECK(std::abs(e1(t) - direct) <= 1e-12);
    const double direct2 = (std::expm1(t) - t) / (t * t);
    CHECK(std::abs(e2(t) - direct2) <= 1e-12);
  }
}

TEST_CASE("model constants for the uniform-scattering model", "[bounds]") {
  const ModelConstants c = kac3_constants();
  CHECK(c.kappa == Catch::Approx(-0.6).margin(1e-9));
  CHECK(c.ell == Catch::Approx(0.43181201267337192).epsilon(1e-12));
  CHECK(c.omega == Catch::Approx(0.093230807144514154).epsilon(1e-12));
  // rounded-above published values, within 1%
  CHECK(std::abs(c.ell - 0.432) <= 0.01 * 0.432);
  CHECK(std::abs(c.omega - 0.0933) <= 0.01 * 0.0933);
}

TEST_CASE("jump amplitude and variance", "[bounds]") {
  const ModelConstants c = kac3_constants();
  const std::size_t n = 800000;
  const double K = static_cast<double>(n) * 0.5;  // total energy N k1
  CHECK(jump_amplitude_L(0.0, n, c) == 0.0);
  CHECK(jump_variance_V(0.0, n, c) == 0.0);
  const double L = jump_amplitude_L(K, n, c);
  const double V = jump_variance_V(K, n, c);
  CHECK(L == Catch::Approx(1.6142739171695223e-05).epsilon(1e-10));
  CHECK(V == Catch::Approx(1.1653850893064269e-07).epsilon(1e-10));
  // consistency with the N-free coefficients
  CHECK(L == Catch::Approx(c.ell * std::pow(static_cast<double>(n), -0.75))
                 .epsilon(1e-12));
  CHECK(V == Catch::Approx(c.omega / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("sigma2 exact and Monte Carlo", "[bounds]") {
  const SobolevIndex idx = SobolevIndex::make(3, 0.5);
  const InitialLaw two = InitialLaw::two_atom(3);
  CHECK(sigma2(two, idx) ==
        Catch::Approx(1.0 / (8.0 * 3.14159265358979323846)).epsilon(1e-13));
  CHECK(std::abs(sigma2(two, idx) - 0.0398) <= 0.01 * 0.0398);

  // point mass
  const InitialLaw point = InitialLaw::discrete(3, {0.3, 0.2, 0.1}, {1.0});
  CHECK(sigma2(point, idx) == 0.0);

  // symmetric three-atom law: exact value cross-checked by brute force
  const InitialLaw three = InitialLaw::discrete(
      3, {-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0}, {0.25, 0.5, 0.25});
  const double exact = sigma2(three, idx);
  CHECK(exact == Catch::Approx(0.029841551829730375).epsilon(1e-12));
  Philox rng = Philox::stream(2718, 0);
  const MonteCarloValue mc = sigma2_mc(three, idx, 1000000, rng);
  CHECK(std::abs(mc.value - exact) <= 4.0 * mc.stderr_);

  // the MC route applies to the Gaussian law too and is self-consistent
  const InitialLaw gauss = InitialLaw::gaussian(3, 0.5);
  const MonteCarloValue g1 = sigma2_mc(gauss, idx, 200000, rng);
  const MonteCarloValue g2 = sigma2_mc(gauss, idx, 200000, rng);
  CHECK(std::abs(g1.value - g2.value) <= 4.0 * (g1.stderr_ + g2.stderr_));
}

TEST_CASE("exponential-moment constant A", "[bounds]") {
  const SobolevIndex idx = SobolevIndex::make(3, 0.5);
  const InitialLaw two = InitialLaw::two_atom(3);
  const double A = bigA(two, 1.0, idx);
  CHECK(A == Catch::Approx(0.021285837920530943).epsilon(1e-12));
  CHECK(std::abs(A - 0.0213) <= 0.01 * 0.0213);

  const InitialLaw point = InitialLaw::discrete(3, {1.0, 1.0, 1.0}, {1.0});
  CHECK(bigA(point, 1.0, idx) == 0.0);

  // a -> 0: A / a^2 -> sigma^2 / 2
  const double a = 1e-4;
  const double ratio = bigA(two, a, idx) / (a * a);
  CHECK(std::abs(ratio - 0.5 * sigma2(two, idx)) <=
        1e-3 * 0.5 * sigma2(two, idx));

  CHECK_THROWS_AS(bigA(two, 0.0, idx), std::domain_error);
}

TEST_CASE("initial term", "[bounds]") {
  const SobolevIndex idx = SobolevIndex::make(3, 0.5);
  const InitialFluctuation fl = two_atom_fluctuation(idx);

  // lambda -> 0 reduces to ln E U(0) = ln 2
  CHECK(initial_term(0.0, 800000, fl).value ==
        Catch::Approx(std::log(2.0)).margin(1e-15));

  const InitialTermResult r = initial_term(500.0, 800000, fl);
  CHECK(r.value == Catch::Approx(0.69936832791469132).epsilon(1e-12));
  CHECK(r.valid);

  const InitialTermResult bad = initial_term(800001.0, 800000, fl);
  CHECK_FALSE(bad.valid);
  CHECK(bad.value > 0.0);  // still computed
}

TEST_CASE("dynamic term", "[bounds]") {
  CHECK(dynamic_term(500.0, 3.0, -0.6, 1e-5, 0.0) == 0.0);
  // kappa = 0, L -> 0: lambda^2 V T / 2
  CHECK(dynamic_term(10.0, 2.0, 0.0, 0.0, 1e-3) ==
        Catch::Approx(100.0 * 1e-3 * 2.0 / 2.0).epsilon(1e-14));
  // frozen evaluation with the rounded inputs
  CHECK(dynamic_term(500.0, 3.0, -0.6, 1.615e-5, 1.166e-7) ==
        Catch::Approx(0.47830556073530990).epsilon(1e-12));
  CHECK_THROWS_AS(dynamic_term(1.0, 1.0, 0.0, -1.0, 1.0), std::domain_error);
}

TEST_CASE("synthetic bound on the flagship scenario", "[bounds]") {
  const ModelConstants c = kac3_constants();
  const SobolevIndex idx = c.index;
  const InitialFluctuation fl = two_atom_fluctuation(idx);

  const BoundReport rep = synthetic_bound({800000, 3.0, 500.0}, c, fl);
  CHECK(rep.total == Catch::Approx(1.3988612732478588).epsilon(1e-6));
  CHECK(rep.total <= 2.692);
  CHECK(rep.total >= std::log(2.0));
  CHECK(rep.valid);  // lambda_max = e^{-1.8} * 8e5 ~ 1.32e5
  CHECK(rep.term_static + rep.term_quadratic + rep.term_cubic +
            rep.term_dynamic ==
        Catch::Approx(rep.total).epsilon(1e-12));

  // tail at eps = 1e-2 beats the 10% target
  CHECK(tail_probability(rep.total, 500.0, 1e-2) < 0.1);

  // validity boundary
  const double lam_max = std::exp(-std::abs(c.kappa) * 3.0) * 800000.0;
  CHECK(synthetic_bound({800000, 3.0, lam_max * 0.9999}, c, fl).valid);
  CHECK_FALSE(synthetic_bound({800000, 3.0, lam_max * 1.0001}, c, fl).valid);

  // lambda -> 0 collapses to ln 2
  CHECK(synthetic_bound({800000, 3.0, 1e-9}, c, fl).total ==
        Catch::Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("strict cubic mode inflates only the cubic term", "[bounds]") {
  const SobolevIndex idx = SobolevIndex::make(3, 0.5);
  ModelConstants c = ModelConstants::make(idx, kac_kernel(3), 0.5, false);
  ModelConstants cs = ModelConstants::make(idx, kac_kernel(3), 0.5, true);
  const InitialFluctuation fl = two_atom_fluctuation(idx);
  const BoundReport a = synthetic_bound({800000, 3.0, 500.0}, c, fl);
  const BoundReport b = synthetic_bound({800000, 3.0, 500.0}, cs, fl);
  CHECK(b.term_cubic ==
        Catch::Approx(a.term_cubic * std::exp(std::abs(c.kappa) * 3.0))
            .epsilon(1e-9));
  CHECK(b.term_quadratic == a.term_quadratic);
  CHECK(b.term_dynamic == a.term_dynamic);
}

TEST_CASE("synthetic bound monotonicity", "[bounds]") {
  const ModelConstants c = kac3_constants();
  const InitialFluctuation fl = two_atom_fluctuation(c.index);
  double prev = 0.0;
  bool first = true;
  for (double T : {0.0, 0.5, 1.0, 2.0, 3.0, 4.0}) {
    const double total = synthetic_bound({2000, T, 100.0}, c, fl).total;
    if (!first) CHECK(total >= prev);
    prev = total;
    first = false;
  }
  // monotone in sigma2, A, omega, ell and |kappa|
  auto total_with = [&](ModelConstants mc, InitialFluctuation f) {
    return synthetic_bound({2000, 1.0, 100.0}, mc, f).total;
  };
  InitialFluctuation fl2 = fl;
  fl2.sigma2 *= 2.0;
  CHECK(total_with(c, fl2) >= total_with(c, fl));
  fl2 = fl;
  fl2.A *= 2.0;
  CHECK(total_with(c, fl2) >= total_with(c, fl));
  ModelConstants c2 = c;
  c2.omega *= 2.0;
  CHECK(total_with(c2, fl) >= total_with(c, fl));
  c2 = c;
  c2.ell *= 2.0;
  CHECK(total_with(c2, fl) >= total_with(c, fl));
  c2 = c;
  c2.kappa = -1.0;
  CHECK(total_with(c2, fl) >= total_with(c, fl));
}

TEST_CASE("tail probability", "[bounds]") {
  CHECK(tail_probability(2.692, 500.0, 1e-2) ==
        Catch::Approx(0.099459972717682604).epsilon(1e-12));
  CHECK(tail_probability(2.692, 500.0, 1e-2) < 0.1);
  CHECK(tail_probability(std::log(2.0), 1.0, 0.0) == 1.0);  // capped
  CHECK(tail_probability(-3.0, 1.0, 0.0) == Catch::Approx(std::exp(-3.0)));
  CHECK(tail_probability(std::log(2.0), 2.0, std::log(4.0) / 2.0) ==
        Catch::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(tail_probability(1.0, -1.0, 0.1), std::domain_error);
}

TEST_CASE("lambda optimization", "[bounds]") {
  const ModelConstants c = kac3_constants();
  const InitialFluctuation fl = two_atom_fluctuation(c.index);

  // no worse than the hand-picked lambda = 500, nor than a fine grid
  const OptimizedTail opt = optimize_lambda(800000, 3.0, 1e-2, c, fl);
  const double hand =
      tail_probability(synthetic_bound({800000, 3.0, 500.0}, c, fl).total,
                       500.0, 1e-2);
  CHECK(opt.probability <= hand + 1e-12);
  for (double lam = 100.0; lam <= 2000.0; lam += 50.0) {
    const double p = tail_probability(
        synthetic_bound({800000, 3.0, lam}, c, fl).total, lam, 1e-2);
    CHECK(opt.probability <= p + 1e-9);
  }

  // eps large enough that the -lambda*eps slope wins everywhere pushes
  // lambda to the upper validity boundary
  const double lam_max = std::exp(-std::abs(c.kappa) * 3.0) * 800000.0;
  const OptimizedTail far = optimize_lambda(800000, 3.0, 1e40, c, fl);
  CHECK(far.lambda_star == Catch::Approx(lam_max).epsilon(1e-4));
  // and the optimum moves up monotonically with eps
  CHECK(optimize_lambda(800000, 3.0, 1e30, c, fl).lambda_star >
        optimize_lambda(800000, 3.0, 1e20, c, fl).lambda_star);

  // vanishing eps pushes lambda to the lower boundary, probability to 1
  const OptimizedTail tiny = optimize_lambda(800000, 3.0, 1e-12, c, fl);
  CHECK(tiny.lambda_star <= 1e-3 * lam_max);
  CHECK(tiny.probability == 1.0);

  CHECK_THROWS_AS(optimize_lambda(800000, 3.0, 0.0, c, fl), std::domain_error);
}

TEST_CASE("asymptotic gaussian bound", "[bounds]") {
  const ModelConstants c = kac3_constants();
  const InitialFluctuation fl = two_atom_fluctuation(c.index);
  CHECK(asymptotic_gaussian_bound(0.0, 3.0, c, fl) == 2.0);
  CHECK(asymptotic_gaussian_bound(1.0, 3.0, c, fl) ==
        Catch::Approx(1.7766282079333158).epsilon(1e-6));
  double prev = 2.0;
  for (double x = 0.25; x <= 5.0; x += 0.25) {
    const double b = asymptotic_gaussian_bound(x, 3.0, c, fl);
    CHECK(b < prev);
    prev = b;
  }
  CHECK_THROWS_AS(asymptotic_gaussian_bound(-1.0, 3.0, c, fl),
                  std::domain_error);
}
