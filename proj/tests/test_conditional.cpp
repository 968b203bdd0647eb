#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <random>

#include "mixmodal/conditional.hpp"
#include "mixmodal/errors.hpp"
#include "oracles.hpp"

using namespace mixmodal;

namespace {

const NormalPrior kVagueMean{0.0, 0.001};
const GammaPrior kHalfPrecision{0.5, 0.5};

std::vector<double> vec(std::initializer_list<double> v) { return v; }

}  // namespace

TEST_CASE("poisson-gamma examples") {
  const auto empty = fit_poisson_gamma({}, GammaPrior{1.0, 1.0});
  CHECK(empty.log_evidence == 0.0);
  REQUIRE(empty.location_exact);
  CHECK(empty.location_exact->shape == 1.0);
  CHECK(empty.location_exact->rate == 1.0);

  const auto y0 = vec({0});
  CHECK(fit_poisson_gamma(y0, {1.0, 1.0}).log_evidence == doctest::Approx(std::log(0.5)).epsilon(1e-13));
  CHECK(oracle::poisson_gamma_quadrature(y0, 1.0, 1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-9));
  const auto y1 = vec({1});
  CHECK(fit_poisson_gamma(y1, {1.0, 1.0}).log_evidence == doctest::Approx(std::log(0.25)).epsilon(1e-13));
  CHECK(oracle::poisson_gamma_quadrature(y1, 1.0, 1.0) == doctest::Approx(std::log(0.25)).epsilon(1e-9));

  CHECK_THROWS_WITH_AS(fit_poisson_gamma(y1, {0.0, 1.0}), "invalid prior", ConfigError);
  CHECK_THROWS_WITH_AS(fit_poisson_gamma(y1, {1.0, -1.0}), "invalid prior", ConfigError);
}

TEST_CASE("poisson-gamma posterior parameters and mode") {
  const auto y = vec({2, 0, 7, 3});
  const auto c = fit_poisson_gamma(y, {1.5, 0.25});
  REQUIRE(c.location_exact);
  CHECK(c.location_exact->shape == 1.5 + 12.0);
  CHECK(c.location_exact->rate == 0.25 + 4.0);
  CHECK(c.location_mode == doctest::Approx((1.5 + 12.0 - 1.0) / 4.25).epsilon(1e-14));
  CHECK(c.location.integral() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.location.mean() == doctest::Approx(13.5 / 4.25).epsilon(1e-5));
  // Shape below one: mode at the boundary.
  CHECK(fit_poisson_gamma(vec({0}), {0.5, 1.0}).location_mode == 0.0);
}

TEST_CASE("poisson-lognormal examples") {
  const auto empty = fit_poisson_lognormal({}, kVagueMean);
  CHECK(empty.log_evidence == 0.0);
  CHECK(empty.location_mode == doctest::Approx(1.0));

  const auto y3 = vec({3});
  const double truth = oracle::poisson_lognormal_quadrature(y3, 0.0, 0.001, -30.0, 30.0, 10001);
  CHECK(fit_poisson_lognormal(y3, kVagueMean).log_evidence == doctest::Approx(truth).epsilon(1e-6 / std::abs(truth)));

  const auto y5 = vec({5, 5, 5});
  const auto c = fit_poisson_lognormal(y5, kVagueMean);
  CHECK(std::abs(std::log(c.location_mode) - std::log(5.0)) < 0.01);
  CHECK(c.location.integral() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("poisson-lognormal matches dense grids on random subsets") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> y(gen() % 6 + 1);
    std::poisson_distribution<int> pd(static_cast<double>(gen() % 30));
    for (auto& v : y) v = pd(gen);
    const NormalPrior prior{static_cast<double>(gen() % 5) - 2.0, 0.001 + 0.1 * static_cast<double>(gen() % 3)};
    CHECK(fit_poisson_lognormal(y, prior).log_evidence ==
          doctest::Approx(oracle::poisson_lognormal_quadrature(y, prior.mean, prior.precision)).epsilon(1e-8));
  }
}

TEST_CASE("gaussian evidence given the precision") {
  CHECK(gaussian_evidence_given_tau({}, kVagueMean, 2.0) == 0.0);
  const auto y0 = vec({0});
  CHECK(gaussian_evidence_given_tau(y0, {0.0, 1.0}, 1.0) ==
        doctest::Approx(-0.5 * std::log(4 * M_PI)).epsilon(1e-14));
  const auto ypm = vec({-1, 1});
  const double grid = oracle::gaussian_given_tau_grid(ypm, 0.0, 0.001, 1.0);
  CHECK(std::abs(gaussian_evidence_given_tau(ypm, kVagueMean, 1.0) - grid) < 1e-8);

  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd(3.0, 4.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> y(gen() % 6 + 1);
    for (auto& v : y) v = nd(gen);
    const double tau = std::exp(nd(gen) / 4.0);
    const NormalPrior prior{nd(gen), 0.01 * (1 + gen() % 50)};
    const double lib = gaussian_evidence_given_tau(y, prior, tau);
    CHECK(std::abs(lib - oracle::gaussian_given_tau_factorised(y, prior.mean, prior.precision, tau)) < 1e-10);
    CHECK(std::abs(lib - oracle::gaussian_given_tau_grid(y, prior.mean, prior.precision, tau)) < 1e-8);
  }
}

TEST_CASE("gaussian component examples") {
  const auto empty = fit_gaussian_component({}, kVagueMean, kHalfPrecision);
  CHECK(empty.log_evidence == 0.0);
  CHECK(empty.location_mode == 0.0);
  CHECK(empty.precision_mode == doctest::Approx(1.0));

  const auto sym = fit_gaussian_component(vec({-2.5, 2.5}), kVagueMean, kHalfPrecision);
  CHECK(std::abs(sym.location_mode) < 1e-12);
  CHECK(std::abs(sym.location.mean()) < 1e-6);
  for (double x : {0.5, 1.7, 4.0})
    CHECK(sym.location.density_at(x) == doctest::Approx(sym.location.density_at(-x)).epsilon(1e-4));

  // 2001 x 2001 grid over mu in [-50, 50] and log tau in [-20, 10].
  const auto y = vec({-1, 0, 1});
  const double grid =
      oracle::gaussian_component_grid(y, 0.0, 0.001, 0.5, 0.5, -50.0, 50.0, -20.0, 10.0, 2001, 2001);
  const auto c = fit_gaussian_component(y, kVagueMean, kHalfPrecision);
  CHECK(std::abs(c.log_evidence - grid) < 1e-4);
  REQUIRE(c.precision);
  CHECK(c.precision->integral() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.location.integral() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian precision mode is the maximiser of the log-precision density") {
  const auto y = vec({1.2, 3.4, 2.2, 2.9});
  const auto c = fit_gaussian_component(y, kVagueMean, kHalfPrecision);
  auto log_post = [&](double lt) {
    const double tau = std::exp(lt);
    return oracle::log_gamma_density(tau, 0.5, 0.5) + lt + oracle::gaussian_given_tau_factorised(y, 0.0, 0.001, tau);
  };
  const double at = log_post(std::log(c.precision_mode));
  for (double d : {-1e-3, 1e-3}) CHECK(log_post(std::log(c.precision_mode) + d) <= at);
  // Location mode is the conditional posterior mean at the modal precision.
  const double tau = c.precision_mode;
  CHECK(c.location_mode == doctest::Approx((tau * 9.7) / (0.001 + 4 * tau)).epsilon(1e-12));
}

TEST_CASE("shared precision") {
  const std::vector<std::vector<double>> one{{-1.0, 0.5, 2.0}};
  const auto single = fit_gaussian_shared_precision(one, kVagueMean, kHalfPrecision);
  const auto direct = fit_gaussian_component(one[0], kVagueMean, kHalfPrecision);
  CHECK(single.log_cond_evidence == doctest::Approx(direct.log_evidence).epsilon(1e-12));

  const std::vector<std::vector<double>> two{{-1.0, 1.0}, {9.0, 11.0}};
  const auto fit = fit_gaussian_shared_precision(two, kVagueMean, kHalfPrecision);
  CHECK(std::abs(fit.log_cond_evidence - oracle::gaussian_shared_grid(two, 0.0, 0.001, 0.5, 0.5)) < 1e-4);
  REQUIRE(fit.components.size() == 2);
  REQUIRE(fit.components[0].precision);
  CHECK(fit.components[0].precision_mode == fit.components[1].precision_mode);

  const std::vector<std::vector<double>> swapped{{9.0, 11.0}, {-1.0, 1.0}};
  CHECK(fit_gaussian_shared_precision(swapped, kVagueMean, kHalfPrecision).log_cond_evidence ==
        doctest::Approx(fit.log_cond_evidence).epsilon(1e-13));
}

TEST_CASE("dirichlet mode") {
  const std::vector<double> a2{2, 2}, a3{2, 2, 2};
  CHECK(dirichlet_mode(a2, std::vector<std::size_t>{0, 0}) == std::vector<double>{0.5, 0.5});
  const auto m = dirichlet_mode(a2, std::vector<std::size_t>{10, 40});
  CHECK(m[0] == doctest::Approx(11.0 / 52.0).epsilon(1e-15));
  CHECK(m[1] == doctest::Approx(41.0 / 52.0).epsilon(1e-15));
  for (double w : dirichlet_mode(a3, std::vector<std::size_t>{50, 50, 50}))
    CHECK(w == doctest::Approx(51.0 / 153.0).epsilon(1e-15));
  const std::vector<double> a1{1, 1};
  CHECK_THROWS_WITH_AS(dirichlet_mode(a1, std::vector<std::size_t>{0, 3}), "mode undefined", ConfigError);
}

TEST_CASE("conditional fit examples") {
  const Observations y{{0}};
  PriorSpec p = PriorSpec::defaults(1);
  p.poisson_gamma = {1.0, 1.0};
  const FamilySpec pg = FamilySpec::poisson(PoissonPrior::GammaConjugate);
  const auto fit = conditional_fit(y, Allocation({0}, 1), pg, p);
  CHECK(fit.log_cond_evidence == doctest::Approx(std::log(0.5)).epsilon(1e-13));
  CHECK(fit.modal_weights == std::vector<double>{1.0});

  const Observations y3{{1.0, 2.0, 4.0}};
  for (const FamilySpec& fam : {FamilySpec::gaussian(), FamilySpec::poisson(), pg}) {
    const auto two = conditional_fit(y3, Allocation({0, 0, 0}, 2), fam, PriorSpec::defaults(2));
    CHECK(two.components[1].size == 0);
    CHECK(two.components[1].log_evidence == 0.0);
    const auto one = conditional_fit(y3, Allocation({0, 0, 0}, 1), fam, PriorSpec::defaults(1));
    // Empty-component neutrality.
    CHECK(two.log_cond_evidence == one.log_cond_evidence);
  }
}

TEST_CASE("label symmetry of the conditional evidence") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> nd(0.0, 3.0);
  const Observations y{{nd(gen), nd(gen), nd(gen), nd(gen), nd(gen), nd(gen)}};
  Observations counts{{3, 0, 8, 2, 5, 1}};
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::uint8_t> z(6);
    for (auto& v : z) v = static_cast<std::uint8_t>(gen() % 3);
    const Allocation a(z, 3);
    std::vector<std::size_t> sigma{0, 1, 2};
    std::shuffle(sigma.begin(), sigma.end(), gen);
    const Allocation b = a.relabeled(sigma);
    const PriorSpec p = PriorSpec::defaults(3);
    for (const FamilySpec& fam : {FamilySpec::gaussian(), FamilySpec::gaussian(true)}) {
      CHECK(conditional_fit(y, a, fam, p).log_cond_evidence ==
            doctest::Approx(conditional_fit(y, b, fam, p).log_cond_evidence).epsilon(1e-12));
    }
    const FamilySpec pois = FamilySpec::poisson();
    CHECK(conditional_fit(counts, a, pois, p).log_cond_evidence ==
          doctest::Approx(conditional_fit(counts, b, pois, p).log_cond_evidence).epsilon(1e-12));
    // permute_fit agrees with refitting.
    const auto refit = conditional_fit(y, b, FamilySpec::gaussian(), p);
    const auto moved = permute_fit(conditional_fit(y, a, FamilySpec::gaussian(), p), sigma, p);
    CHECK(moved.allocation == b);
    CHECK(moved.log_cond_evidence == doctest::Approx(refit.log_cond_evidence).epsilon(1e-13));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(moved.modal_weights[j] == doctest::Approx(refit.modal_weights[j]).epsilon(1e-14));
      CHECK(moved.components[j].location_mode == refit.components[j].location_mode);
    }
  }
}

TEST_CASE("summary fits agree with full fits") {
  const Observations y{{1.0, 2.5, 2.0, 8.0, 9.5}};
  const Allocation z({0, 0, 0, 1, 1}, 2);
  const PriorSpec p = PriorSpec::defaults(2);
  for (const FamilySpec& fam : {FamilySpec::gaussian(), FamilySpec::gaussian(true)}) {
    const auto full = conditional_fit(y, z, fam, p, {}, FitDetail::Full);
    const auto summary = conditional_fit(y, z, fam, p, {}, FitDetail::Summary);
    CHECK(full.has_densities());
    CHECK_FALSE(summary.has_densities());
    CHECK(full.log_cond_evidence == summary.log_cond_evidence);
    CHECK(full.locations() == summary.locations());
  }
}

TEST_CASE("component log densities") {
  const ModalParams g{0.0, 1.0};
  CHECK(component_log_density(FamilySpec::gaussian(), 0.0, g) == doctest::Approx(-0.5 * std::log(2 * M_PI)));
  const ModalParams p{10.0};
  CHECK(component_log_density(FamilySpec::poisson(), 0.0, p) == doctest::Approx(-10.0));
  const ModalParams zero{0.0};
  CHECK(component_log_density(FamilySpec::poisson(), 0.0, zero) == 0.0);
  CHECK(component_log_density(FamilySpec::poisson(), 2.0, zero) == kNegInf);
}
