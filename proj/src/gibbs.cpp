#include "mixmodal/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "mixmodal/errors.hpp"
#include "mixmodal/numerics.hpp"
#include "mixmodal/posterior.hpp"

namespace mixmodal {

// ---------------------------------------------------------------------------
// FitCache

FitCache::FitCache(const Observations& y, const FamilySpec& fam, const PriorSpec& priors,
                   const QuadratureConfig& q, std::size_t capacity)
    : y_(y), fam_(fam), priors_(priors), q_(q), capacity_(std::max<std::size_t>(capacity, 2)) {}

void FitCache::touch(const AllocationKey& key) {
  auto& entry = fits_.at(key);
  recency_.erase(entry.second);
  entry.second = ++clock_;
  recency_.emplace(entry.second, key);
}

const ConditionalFit& FitCache::insert(const AllocationKey& key, ConditionalFit fit) {
  while (fits_.size() >= capacity_) {
    auto oldest = recency_.begin();
    fits_.erase(oldest->second);
    recency_.erase(oldest);
  }
  const auto stamp = ++clock_;
  auto [it, inserted] = fits_.emplace(key, std::pair{std::move(fit), stamp});
  recency_.emplace(stamp, key);
  return it->second.first;
}

const ConditionalFit& FitCache::fit(const Allocation& canonical) {
  const auto key = canonical.key();
  if (fits_.count(key)) {
    touch(key);
    return fits_.at(key).first;
  }
  ++fits_computed_;
  return insert(key, conditional_fit(y_, canonical, fam_, priors_, q_, FitDetail::Summary));
}

Allocation FitCache::canonical(const Allocation& raw) {
  const auto raw_key = raw.key();
  if (auto it = raw_to_canonical_.find(raw_key); it != raw_to_canonical_.end())
    return Allocation::decode(it->second, raw.K());

  ConditionalFit raw_fit;
  if (auto hit = fits_.find(raw_key); hit != fits_.end()) {
    raw_fit = hit->second.first;
  } else {
    ++fits_computed_;
    raw_fit = conditional_fit(y_, raw, fam_, priors_, q_, FitDetail::Summary);
  }
  const auto order = canonical_order(raw, raw_fit.locations());
  Allocation canon = raw.relabeled(order);
  const auto key = canon.key();
  if (!fits_.count(key)) insert(key, permute_fit(raw_fit, order, priors_));
  if (raw_to_canonical_.size() >= capacity_) raw_to_canonical_.clear();
  raw_to_canonical_.emplace(raw_key, key);
  return canon;
}

// ---------------------------------------------------------------------------
// Initialization and sweeps

Allocation init_allocation(const Observations& y, std::size_t K, SamplerConfig::Init strategy, CounterRng& rng,
                           const FamilySpec& fam, const PriorSpec& priors, const QuadratureConfig& q) {
  if (K < 1 || K > 255) throw ConfigError("number of components must be in 1..255");
  const std::size_t n = y.n();
  std::vector<std::uint8_t> labels(n, 0);
  if (strategy == SamplerConfig::Init::Quantile) {
    if (K > n) throw ConfigError("more components than observations");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return y.values[a] < y.values[b]; });
    const std::size_t base = n / K, rem = n % K;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < K; ++j) {
      const std::size_t size = base + (j >= K - rem ? 1 : 0);
      for (std::size_t k = 0; k < size; ++k) labels[order[pos++]] = static_cast<std::uint8_t>(j);
    }
  } else {
    for (auto& l : labels) l = static_cast<std::uint8_t>(std::min<std::size_t>(rng.uniform() * K, K - 1));
  }
  Allocation raw(std::move(labels), K);
  const auto fit = conditional_fit(y, raw, fam, priors, q, FitDetail::Summary);
  return canonicalize(raw, fit.locations());
}

std::vector<double> label_probabilities(double y, std::span<const double> weights,
                                        std::span<const ModalParams> params, const FamilySpec& fam) {
  const std::size_t K = params.size();
  std::vector<double> score(K);
  double best = kNegInf;
  for (std::size_t j = 0; j < K; ++j) {
    score[j] = std::log(weights[j]) + component_log_density(fam, y, params[j]);
    best = std::max(best, score[j]);
  }
  if (best == kNegInf || std::isnan(best)) throw NumericalError("observation unsupported by all components");
  double total = 0.0;
  for (auto& s : score) {
    s = std::exp(s - best);
    total += s;
  }
  for (auto& s : score) s /= total;
  return score;
}

namespace {

std::size_t draw_categorical(std::span<const double> p, CounterRng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    cum += p[j];
    if (u < cum) return j;
  }
  // Rounding leftovers land on the last label with positive mass.
  for (std::size_t j = p.size(); j-- > 0;)
    if (p[j] > 0.0) return j;
  return p.size() - 1;
}

Allocation draw_labels(const Observations& y, std::span<const double> weights, std::span<const ModalParams> params,
                       const FamilySpec& fam, CounterRng& rng) {
  std::vector<std::uint8_t> labels(y.n());
  for (std::size_t i = 0; i < y.n(); ++i) {
    const auto p = label_probabilities(y.values[i], weights, params, fam);
    labels[i] = static_cast<std::uint8_t>(draw_categorical(p, rng));
  }
  return Allocation(std::move(labels), params.size());
}

void check_run(const Observations& y, std::size_t K, const FamilySpec& fam, const PriorSpec& priors,
               const SamplerConfig& cfg, bool modal) {
  y.validate(fam);
  cfg.validate();
  priors.validate(modal);
  if (priors.K() != K) throw ConfigError("prior alpha length differs from K");
}

void fill_table(AllocationTrace& trace, const Observations& y, const FamilySpec& fam, const PriorSpec& priors,
                const QuadratureConfig& q) {
  if (trace.visits.empty()) throw NumericalError("empty trace");
  for (const auto& key : trace.visits) ++trace.table[key].visit_count;
  for (auto& [key, entry] : trace.table)
    entry.fit = conditional_fit(y, Allocation::decode(key, trace.K), fam, priors, q, FitDetail::Full);
}

bool retained_iteration(std::size_t it, const SamplerConfig& cfg) {
  return it >= cfg.burn_in && (it - cfg.burn_in + 1) % cfg.thin == 0;
}

}  // namespace

Allocation modal_sweep(const Observations& y, const ConditionalFit& fit, const FamilySpec& fam, CounterRng& rng) {
  if (fit.modal_weights.size() != fit.modal_params.size()) throw ConfigError("mode undefined");
  return draw_labels(y, fit.modal_weights, fit.modal_params, fam, rng);
}

// ---------------------------------------------------------------------------
// Samplers

AllocationTrace run_modal_gibbs(const Observations& y, std::size_t K, const FamilySpec& fam, const PriorSpec& priors,
                                const SamplerConfig& cfg, const QuadratureConfig& q) {
  check_run(y, K, fam, priors, cfg, true);
  CounterRng rng(cfg.seed);
  FitCache cache(y, fam, priors, q);

  AllocationTrace trace;
  trace.config = cfg;
  trace.K = K;
  trace.visits.reserve(cfg.retained());

  Allocation z = cache.canonical(init_allocation(y, K, cfg.init, rng, fam, priors, q));
  const std::size_t total = cfg.burn_in + cfg.iterations;
  for (std::size_t it = 0; it < total; ++it) {
    const Allocation raw = modal_sweep(y, cache.fit(z), fam, rng);
    z = cache.canonical(raw);
    if (retained_iteration(it, cfg)) trace.visits.push_back(z.key());
  }
  fill_table(trace, y, fam, priors, q);
  return trace;
}

AllocationTrace single_component_trace(const Observations& y, const FamilySpec& fam, const PriorSpec& priors,
                                       const SamplerConfig& cfg, const QuadratureConfig& q) {
  check_run(y, 1, fam, priors, cfg, false);
  AllocationTrace trace;
  trace.config = cfg;
  trace.K = 1;
  const Allocation z(std::vector<std::uint8_t>(y.n(), 0), 1);
  trace.visits.assign(cfg.retained(), z.key());
  fill_table(trace, y, fam, priors, q);
  return trace;
}

ReferenceRun run_reference_gibbs(const Observations& y, std::size_t K, const FamilySpec& fam,
                                 const PriorSpec& priors, const SamplerConfig& cfg, const QuadratureConfig& q) {
  check_run(y, K, fam, priors, cfg, false);
  CounterRng rng(cfg.seed);
  FitCache canon_cache(y, fam, priors, q);
  std::map<AllocationKey, ConditionalFit> full_fits;
  constexpr std::size_t kFullFitLimit = 20000;

  ReferenceRun run;
  run.trace.config = cfg;
  run.trace.K = K;

  Allocation z = init_allocation(y, K, cfg.init, rng, fam, priors, q);
  const std::size_t total = cfg.burn_in + cfg.iterations;
  std::vector<double> sums(K);
  std::vector<ModalParams> theta(K);
  std::vector<double> w(K);
  for (std::size_t it = 0; it < total; ++it) {
    const auto key = z.key();
    auto found = full_fits.find(key);
    if (found == full_fits.end()) {
      if (full_fits.size() >= kFullFitLimit) full_fits.clear();
      found = full_fits.emplace(key, conditional_fit(y, z, fam, priors, q, FitDetail::Full)).first;
    }
    const ConditionalFit& fit = found->second;

    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < y.n(); ++i) sums[z[i]] += y.values[i];

    // theta | z, y
    if (fam.family == Family::Poisson) {
      for (std::size_t j = 0; j < K; ++j) {
        const auto& c = fit.components[j];
        if (c.location_exact) {
          boost::random::gamma_distribution<double> g(c.location_exact->shape, 1.0 / c.location_exact->rate);
          theta[j].location = g(rng);
        } else {
          theta[j].location = c.location.quantile(rng.uniform());
        }
      }
    } else {
      const NormalPrior mp = priors.gaussian_mean;
      double shared_tau = 0.0;
      if (fam.shared_precision) shared_tau = fit.components.front().precision->quantile(rng.uniform());
      for (std::size_t j = 0; j < K; ++j) {
        const double tau = fam.shared_precision ? shared_tau : fit.components[j].precision->quantile(rng.uniform());
        const double nj = static_cast<double>(z.counts()[j]);
        const double prec = mp.precision + nj * tau;
        const double mean = (mp.precision * mp.mean + tau * sums[j]) / prec;
        boost::random::normal_distribution<double> nd(mean, 1.0 / std::sqrt(prec));
        theta[j].location = nd(rng);
        theta[j].precision = tau;
      }
    }

    // w | z
    double wsum = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      boost::random::gamma_distribution<double> g(priors.alpha[j] + static_cast<double>(z.counts()[j]), 1.0);
      w[j] = g(rng);
      wsum += w[j];
    }
    for (auto& v : w) v /= wsum;

    // z | w, theta
    z = draw_labels(y, w, theta, fam, rng);

    if (retained_iteration(it, cfg)) {
      run.trace.visits.push_back(canon_cache.canonical(z).key());
      ParameterDraw d;
      d.weights = w;
      for (const auto& t : theta) {
        d.locations.push_back(t.location);
        if (fam.family == Family::Gaussian) d.precisions.push_back(t.precision);
      }
      run.draws.push_back(std::move(d));
    }
  }
  fill_table(run.trace, y, fam, priors, q);
  return run;
}

ExactPosterior enumerate_exact(const Observations& y, std::size_t K, const FamilySpec& fam, const PriorSpec& priors,
                               std::size_t n_limit, const QuadratureConfig& q) {
  y.validate(fam);
  priors.validate(false);
  if (priors.K() != K) throw ConfigError("prior alpha length differs from K");
  const std::size_t n = y.n();
  double space = 1.0;
  for (std::size_t i = 0; i < n; ++i) space *= static_cast<double>(K);
  if (n > n_limit || space > 1e7) throw NumericalError("enumeration too large");

  ExactPosterior out;
  std::map<AllocationKey, std::vector<double>> orbit_terms;
  std::vector<double> all_terms;
  all_terms.reserve(static_cast<std::size_t>(space));

  std::vector<std::uint8_t> labels(n, 0);
  while (true) {
    Allocation z(labels, K);
    const auto fit = conditional_fit(y, z, fam, priors, q, FitDetail::Summary);
    const double joint = fit.log_cond_evidence + log_allocation_prior(z.counts(), priors.alpha);
    all_terms.push_back(joint);
    const Allocation canon = canonicalize(z, fit.locations());
    const auto key = canon.key();
    orbit_terms[key].push_back(joint);
    if (canon == z) out.log_joint[key] = joint;

    // Odometer increment over {0..K-1}^n.
    std::size_t pos = 0;
    while (pos < n && ++labels[pos] == K) labels[pos++] = 0;
    if (pos == n) break;
  }
  out.raw_allocations = all_terms.size();
  out.log_evidence = log_sum_exp(all_terms);
  for (const auto& [key, terms] : orbit_terms) out.probabilities[key] = std::exp(log_sum_exp(terms) - out.log_evidence);
  return out;
}

}  // namespace mixmodal
