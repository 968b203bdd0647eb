#include <doctest.h>

#include <cmath>

#include "mixmodal/conditional.hpp"
#include "mixmodal/data_io.hpp"
#include "mixmodal/errors.hpp"
#include "mixmodal/gibbs.hpp"
#include "mixmodal/model_select.hpp"
#include "mixmodal/rng.hpp"
#include "oracles.hpp"

using namespace mixmodal;

namespace {

// Every canonical key of the exact enumeration, visited once.
AllocationTrace full_trace(const Observations& y, std::size_t K, const FamilySpec& fam, const PriorSpec& p,
                           const ExactPosterior& ex) {
  AllocationTrace t;
  t.K = K;
  for (const auto& [key, prob] : ex.probabilities) {
    TraceEntry e;
    e.visit_count = 1;
    e.fit = conditional_fit(y, Allocation::decode(key, K), fam, p);
    t.visits.push_back(key);
    t.table.emplace(key, std::move(e));
  }
  return t;
}

SamplerConfig quick(std::uint64_t seed) {
  SamplerConfig c;
  c.burn_in = 20;
  c.iterations = 400;
  c.thin = 2;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("evidence I for one component") {
  const Observations y{{2.5, 3.1, -0.7, 1.2}};
  const PriorSpec p = PriorSpec::defaults(1);
  const auto t = single_component_trace(y, FamilySpec::gaussian(), p, quick(1));
  const auto fit = conditional_fit(y, Allocation({0, 0, 0, 0}, 1), FamilySpec::gaussian(), p);
  CHECK(log_evidence_I(t, p.alpha) == fit.log_cond_evidence);
  CHECK(log_evidence_chib(t, p.alpha, ChibVariant::G) == fit.log_cond_evidence);
  // One component has nothing to order.
  CHECK(log_evidence_I(t, p.alpha, LabelPrior::Ordered) == fit.log_cond_evidence);
  CHECK_THROWS_WITH_AS(log_evidence_I(AllocationTrace{}, p.alpha), "empty trace", ConfigError);
}

TEST_CASE("evidence I over the full space equals enumeration") {
  CounterRng rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> v;
    for (int i = 0; i < 7; ++i) v.push_back(std::floor(rng.uniform() * 25.0));
    const Observations y{v};
    for (std::size_t K : {2, 3}) {
      const PriorSpec p = PriorSpec::defaults(K);
      const FamilySpec fam = FamilySpec::poisson(PoissonPrior::GammaConjugate);
      const auto ex = enumerate_exact(y, K, fam, p);
      const auto t = full_trace(y, K, fam, p, ex);
      const double li = log_evidence_I(t, p.alpha);
      const auto truth = oracle::poisson_gamma_mixture(v, K, p.alpha, p.poisson_gamma.shape, p.poisson_gamma.rate);
      CHECK(std::abs(li - ex.log_evidence) < 1e-10);
      CHECK(std::abs(li - truth.log_evidence) < 1e-10);
      CHECK(std::abs(log_evidence_I(t, p.alpha, LabelPrior::Ordered) - (li - std::lgamma(K + 1.0))) < 1e-10);

      // Chib identity: log p(y|z) + log p(z) - log p(z|y) is the same for every z.
      for (const auto& [key, prob] : ex.probabilities) {
        const auto& e = t.table.at(key);
        const double c = e.fit.log_cond_evidence + log_orbit_prior(e.fit.allocation.counts(), p.alpha) - std::log(prob);
        CHECK(std::abs(c - ex.log_evidence) < 1e-10);
      }
    }
  }
}

TEST_CASE("chib estimates") {
  const Observations y{{1.0, 2.0, 9.0}};
  const PriorSpec p = PriorSpec::defaults(2);
  AllocationTrace t;
  t.K = 2;
  TraceEntry e;
  e.visit_count = 4;
  e.fit = conditional_fit(y, Allocation({0, 0, 1}, 2), FamilySpec::gaussian(), p);
  const auto key = e.fit.allocation.key();
  t.visits.assign(4, key);
  t.table.emplace(key, e);
  const double expected = e.fit.log_cond_evidence + log_orbit_prior(e.fit.allocation.counts(), p.alpha);
  CHECK(log_evidence_chib(t, p.alpha, ChibVariant::G) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(log_evidence_chib(t, p.alpha, ChibVariant::M) == doctest::Approx(expected).epsilon(1e-15));

  t.table.at(key).visit_count = 0;
  t.visits.clear();
  t.visits.push_back(key);  // inconsistent trace: the mode has no recorded visits
  CHECK_THROWS_WITH_AS(log_evidence_chib(t, p.alpha, ChibVariant::G), "Chib denominator zero", NumericalError);
}

TEST_CASE("variant M equals evidence I on sampled traces") {
  const Observations y = simulate({Family::Gaussian, {0.0, 4.0}, {1.0, 1.0}, {15, 15}}, 8);
  for (std::size_t K : {2, 3}) {
    for (LabelPrior lp : {LabelPrior::Exchangeable, LabelPrior::Ordered}) {
      const PriorSpec p = PriorSpec::defaults(K);
      const auto t = run_modal_gibbs(y, K, FamilySpec::gaussian(), p, quick(K));
      CHECK(std::abs(log_evidence_chib(t, p.alpha, ChibVariant::M, lp) - log_evidence_I(t, p.alpha, lp)) < 1e-12);
      // Every single term is a lower bound of the sum.
      CHECK(log_evidence_chib(t, p.alpha, ChibVariant::G, lp) < log_evidence_I(t, p.alpha, lp) + 50.0);
    }
  }
}

TEST_CASE("evidence I grows with the visited set") {
  const Observations y{{0, 1, 4, 6, 11, 13}};
  const PriorSpec p = PriorSpec::defaults(2);
  const FamilySpec fam = FamilySpec::poisson(PoissonPrior::GammaConjugate);
  const auto ex = enumerate_exact(y, 2, fam, p);
  const auto full = full_trace(y, 2, fam, p, ex);
  AllocationTrace partial;
  partial.K = 2;
  double last = -INFINITY;
  for (const auto& [key, entry] : full.table) {
    partial.table.emplace(key, entry);
    partial.visits.push_back(key);
    const double now = log_evidence_I(partial, p.alpha);
    CHECK(now >= last);
    CHECK(now <= ex.log_evidence + 1e-12);
    last = now;
  }
  CHECK(last == doctest::Approx(ex.log_evidence).epsilon(1e-14));
}

TEST_CASE("model probabilities") {
  const std::vector<double> equal{-3.0, -3.0}, flat{1.0, 1.0};
  auto pr = model_posterior_probs(equal, flat);
  CHECK(pr[0] == doctest::Approx(0.5));
  CHECK(pr[1] == doctest::Approx(0.5));

  const std::vector<double> table{-248.09, -244.62, -233.84, -239.53}, uniform(4, 0.25);
  pr = model_posterior_probs(table, uniform);
  CHECK(pr[2] == doctest::Approx(1.0).epsilon(0.005));
  CHECK(pr[0] + pr[1] + pr[2] + pr[3] == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> shifted = table;
  for (auto& v : shifted) v += 1234.5;
  const auto ps = model_posterior_probs(shifted, uniform);
  for (std::size_t k = 0; k < 4; ++k) CHECK(ps[k] == doctest::Approx(pr[k]).epsilon(1e-10));

  const std::vector<double> two{0.0, 0.0}, prior{1.0, 3.0};
  CHECK(model_posterior_probs(two, prior)[1] == doctest::Approx(0.75));
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(model_posterior_probs(two, bad), ConfigError);
  CHECK_THROWS_AS(model_posterior_probs(two, std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("select_k") {
  const Observations y = simulate({Family::Poisson, {2.0, 25.0}, {}, {12, 12}}, 3);
  SelectOptions o;
  o.sampler = quick(5);
  o.k_range = {1};
  const auto one = select_k(y, FamilySpec::poisson(), PriorSpec::defaults(1), 2.0, o);
  REQUIRE(one.rows.size() == 1);
  CHECK(one.rows[0].prob_I == 1.0);
  CHECK(one.rows[0].prob_G == 1.0);
  CHECK(one.rows[0].prob_M == 1.0);
  CHECK(one.rows[0].diagnostic.tv_distance == 0.0);
  CHECK(one.n == 24);

  o.k_range = {2, 1, 3};
  const auto r = select_k(y, FamilySpec::poisson(), PriorSpec::defaults(1), 2.0, o);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].K == 1);
  CHECK(r.rows[2].K == 3);
  double s = 0.0;
  for (const auto& row : r.rows) {
    s += row.prob_I;
    CHECK(row.components.size() == row.K);
    CHECK(row.seed == CounterRng::derive(5, row.K));
    CHECK(std::abs(row.log_evidence_chib_M - row.log_evidence_I) < 1e-12);
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rows[0].prob_I < 1e-6);
  CHECK(r.rows[1].components[0].location.mean == doctest::Approx(2.0).epsilon(0.5));

  // The ordered label prior moves every evidence by -log K! and leaves the summaries alone.
  PriorSpec ordered = PriorSpec::defaults(1);
  ordered.label_prior = LabelPrior::Ordered;
  const auto ro = select_k(y, FamilySpec::poisson(), ordered, 2.0, o);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ro.rows[i].log_evidence_I ==
          doctest::Approx(r.rows[i].log_evidence_I - std::lgamma(r.rows[i].K + 1.0)).epsilon(1e-12));
    CHECK(ro.rows[i].components[0].location.mean == r.rows[i].components[0].location.mean);
  }

  o.k_range = {};
  CHECK_THROWS_AS(select_k(y, FamilySpec::poisson(), PriorSpec::defaults(1), 2.0, o), ConfigError);
}
