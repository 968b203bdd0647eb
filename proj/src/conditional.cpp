#include "mixmodal/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mixmodal/errors.hpp"

namespace mixmodal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sum_log_factorials(std::span<const double> subset) {
  double acc = 0.0;
  for (double y : subset) acc += std::lgamma(y + 1.0);
  return acc;
}

double sum_of(std::span<const double> subset) {
  double acc = 0.0;
  for (double y : subset) acc += y;
  return acc;
}

// Location density of N(mean, 1/precision) on mean +- 10 sd.
GridDensity normal_grid(double mean, double precision, int points) {
  const double sd = 1.0 / std::sqrt(precision);
  std::vector<double> x(points), ld(points);
  for (int i = 0; i < points; ++i) {
    x[i] = mean + sd * (-10.0 + 20.0 * i / (points - 1));
    ld[i] = log_normal_pdf(x[i], mean, precision);
  }
  return GridDensity::from_log_unnormalized(std::move(x), std::move(ld));
}

// Density of exp(eta) where eta carries the tabulated log density.
GridDensity exp_scale_density(const LogQuadrature& q) {
  std::vector<double> x(q.nodes.size()), ld(q.nodes.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::exp(q.nodes[i]);
    ld[i] = q.log_values[i] - q.nodes[i];
  }
  // Collapse nodes that map to the same double (far left tails).
  std::size_t w = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w > 0 && !(x[i] > x[w - 1])) continue;
    x[w] = x[i];
    ld[w] = ld[i];
    ++w;
  }
  x.resize(w);
  ld.resize(w);
  return GridDensity::from_log_unnormalized(std::move(x), std::move(ld));
}

struct GaussianStats {
  double n = 0.0;
  double mean = 0.0;
  double ss = 0.0;  // sum of squared deviations from the mean
  double sum = 0.0;
};

GaussianStats gaussian_stats(std::span<const double> subset) {
  GaussianStats st;
  st.n = static_cast<double>(subset.size());
  if (subset.empty()) return st;
  st.sum = sum_of(subset);
  st.mean = st.sum / st.n;
  for (double y : subset) st.ss += (y - st.mean) * (y - st.mean);
  return st;
}

double evidence_given_tau(const GaussianStats& st, NormalPrior prior, double tau) {
  if (st.n == 0.0) return 0.0;
  const double p0 = prior.precision;
  const double post = p0 + st.n * tau;
  const double d = st.mean - prior.mean;
  // tau*sum(y^2) + p0*m0^2 - (p0*m0 + tau*s)^2/post, rearranged without
  // cancellation.
  const double quad = tau * st.ss + st.n * tau * p0 / post * d * d;
  return 0.5 * st.n * std::log(tau / kTwoPi) + 0.5 * std::log(p0 / post) - 0.5 * quad;
}

// Gaussian location posterior mixed over the precision grid.
GridDensity location_mixture(const LogQuadrature& q, std::span<const double> masses, const GaussianStats& st,
                             NormalPrior prior) {
  const std::size_t G = q.nodes.size();
  std::vector<double> means(G), precs(G);
  for (std::size_t i = 0; i < G; ++i) {
    const double tau = std::exp(q.nodes[i]);
    precs[i] = prior.precision + st.n * tau;
    means[i] = (prior.precision * prior.mean + tau * st.sum) / precs[i];
  }
  // Representative nodes at spread-out posterior quantiles of the precision.
  static constexpr double kLevels[] = {1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5,
                                       0.75, 0.9, 0.95, 0.99, 0.999, 1 - 1e-4, 1 - 1e-6};
  std::vector<std::size_t> reps;
  double cum = 0.0;
  std::size_t level = 0;
  for (std::size_t i = 0; i < G && level < std::size(kLevels); ++i) {
    cum += masses[i];
    while (level < std::size(kLevels) && cum >= kLevels[level]) {
      if (reps.empty() || reps.back() != i) reps.push_back(i);
      ++level;
    }
  }
  if (reps.empty()) reps.push_back(G / 2);

  constexpr int kPerNode = 41;
  std::vector<double> x;
  x.reserve(reps.size() * kPerNode);
  for (auto r : reps) {
    const double sd = 1.0 / std::sqrt(precs[r]);
    for (int k = 0; k < kPerNode; ++k) x.push_back(means[r] + sd * (-8.0 + 16.0 * k / (kPerNode - 1)));
  }
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end(),
                      [](double a, double b) { return std::abs(b - a) <= 1e-12 * (1.0 + std::abs(a)); }),
          x.end());

  std::vector<std::size_t> active;
  std::vector<double> log_mass;
  for (std::size_t i = 0; i < G; ++i) {
    if (masses[i] > 1e-16) {
      active.push_back(i);
      log_mass.push_back(std::log(masses[i]));
    }
  }
  std::vector<double> ld(x.size()), terms(active.size());
  for (std::size_t p = 0; p < x.size(); ++p) {
    for (std::size_t a = 0; a < active.size(); ++a)
      terms[a] = log_mass[a] + log_normal_pdf(x[p], means[active[a]], precs[active[a]]);
    ld[p] = log_sum_exp(terms);
  }
  return GridDensity::from_log_unnormalized(std::move(x), std::move(ld));
}

std::vector<ComponentPosterior> gaussian_block(std::span<const std::vector<double>> subsets, NormalPrior mean_prior,
                                               GammaPrior precision_prior, const QuadratureConfig& q,
                                               bool full, double& log_evidence_out) {
  std::vector<GaussianStats> stats;
  stats.reserve(subsets.size());
  double n_total = 0.0, ss_total = 0.0;
  for (const auto& s : subsets) {
    stats.push_back(gaussian_stats(s));
    n_total += stats.back().n;
    ss_total += stats.back().ss;
  }
  const double a = precision_prior.shape, b = precision_prior.rate;
  auto log_post = [&](double eta) {
    const double tau = std::exp(eta);
    double v = a * std::log(b) - std::lgamma(a) + a * eta - b * tau;
    for (const auto& st : stats) v += evidence_given_tau(st, mean_prior, tau);
    return v;
  };
  const double shape_guess = a + 0.5 * n_total;
  const double start = std::log(shape_guess / (b + 0.5 * ss_total));
  const double scale = std::max(0.05, 1.0 / std::sqrt(shape_guess));
  const LogQuadrature quad = integrate_log_density(log_post, start, scale, q);
  const bool all_empty = n_total == 0.0;
  log_evidence_out = all_empty ? 0.0 : quad.log_integral;

  const double tau_mode = all_empty ? a / b : std::exp(quad.mode);
  std::optional<GridDensity> precision;
  std::vector<double> masses;
  if (full) {
    precision = exp_scale_density(quad);
    masses = quad.node_masses();
  }

  std::vector<ComponentPosterior> out(subsets.size());
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    const auto& st = stats[j];
    auto& c = out[j];
    c.size = subsets[j].size();
    c.precision_mode = tau_mode;
    c.location_mode = (mean_prior.precision * mean_prior.mean + tau_mode * st.sum) /
                      (mean_prior.precision + st.n * tau_mode);
    c.log_evidence = st.n == 0.0 ? 0.0 : evidence_given_tau(st, mean_prior, tau_mode);
    if (full) {
      c.precision = precision;
      c.location = st.n == 0.0 ? normal_grid(mean_prior.mean, mean_prior.precision, q.grid_size)
                               : location_mixture(quad, masses, st, mean_prior);
    }
  }
  return out;
}

ComponentPosterior poisson_lognormal(std::span<const double> subset, NormalPrior prior, const QuadratureConfig& q,
                                     bool full) {
  ComponentPosterior c;
  c.size = subset.size();
  const double n = static_cast<double>(subset.size());
  const double s = sum_of(subset);
  const double p0 = prior.precision, m0 = prior.mean;
  auto log_post = [&](double eta) {
    const double d = eta - m0;
    return -0.5 * p0 * d * d + s * eta - n * std::exp(eta);
  };

  // Safeguarded Newton on the concave log posterior of eta = log(rate).
  double eta = n > 0.0 ? std::log((s + 0.5) / n) : m0;
  for (int iter = 0; iter < 200; ++iter) {
    const double e = std::exp(eta);
    const double grad = -p0 * (eta - m0) + s - n * e;
    const double hess = -p0 - n * e;
    const double step = std::clamp(-grad / hess, -2.0, 2.0);
    eta += step;
    if (std::abs(step) < 1e-13 * (1.0 + std::abs(eta))) break;
  }
  const double sd = 1.0 / std::sqrt(p0 + n * std::exp(eta));
  c.location_mode = std::exp(eta);

  if (n == 0.0) {
    c.log_evidence = 0.0;
    c.location_mode = std::exp(m0);
    if (full) {
      const int points = q.grid_size;
      std::vector<double> nodes(points), lv(points);
      const double psd = 1.0 / std::sqrt(p0);
      for (int i = 0; i < points; ++i) {
        nodes[i] = m0 + psd * (-10.0 + 20.0 * i / (points - 1));
        lv[i] = log_normal_pdf(nodes[i], m0, p0);
      }
      LogQuadrature prior_grid;
      prior_grid.nodes = std::move(nodes);
      prior_grid.log_values = std::move(lv);
      c.location = exp_scale_density(prior_grid);
    }
    return c;
  }

  const LogQuadrature quad = integrate_log_density(log_post, eta, sd, q);
  c.log_evidence = quad.log_integral - sum_log_factorials(subset) + 0.5 * std::log(p0 / kTwoPi);
  if (full) c.location = exp_scale_density(quad);
  return c;
}

ComponentPosterior poisson_gamma(std::span<const double> subset, GammaPrior prior, bool full) {
  if (!(prior.shape > 0.0) || !(prior.rate > 0.0)) throw ConfigError("invalid prior");
  ComponentPosterior c;
  c.size = subset.size();
  const double n = static_cast<double>(subset.size());
  const double s = sum_of(subset);
  const double a = prior.shape, b = prior.rate;
  const GammaParams post{a + s, b + n};
  c.location_exact = post;
  c.location_mode = post.shape >= 1.0 ? (post.shape - 1.0) / post.rate : 0.0;
  c.log_evidence = subset.empty() ? 0.0
                                  : a * std::log(b) - std::lgamma(a) + std::lgamma(post.shape) -
                                        post.shape * std::log(post.rate) - sum_log_factorials(subset);
  if (full) {
    // Tabulate on a log-rate grid so small shapes keep their left tail.
    auto log_eta = [&](double eta) { return post.shape * eta - post.rate * std::exp(eta); };
    const double start = std::log(post.shape / post.rate);
    const LogQuadrature quad = integrate_log_density(log_eta, start, 1.0 / std::sqrt(post.shape), {});
    c.location = exp_scale_density(quad);
  }
  return c;
}

}  // namespace

ComponentPosterior fit_poisson_gamma(std::span<const double> subset, GammaPrior prior) {
  return poisson_gamma(subset, prior, true);
}

ComponentPosterior fit_poisson_lognormal(std::span<const double> subset, NormalPrior prior,
                                         const QuadratureConfig& q) {
  if (!(prior.precision > 0.0)) throw ConfigError("invalid prior");
  return poisson_lognormal(subset, prior, q, true);
}

double gaussian_evidence_given_tau(std::span<const double> subset, NormalPrior mean_prior, double tau) {
  return evidence_given_tau(gaussian_stats(subset), mean_prior, tau);
}

ComponentPosterior fit_gaussian_component(std::span<const double> subset, NormalPrior mean_prior,
                                          GammaPrior precision_prior, const QuadratureConfig& q) {
  const std::vector<std::vector<double>> one{std::vector<double>(subset.begin(), subset.end())};
  double log_ev = 0.0;
  auto comps = gaussian_block(one, mean_prior, precision_prior, q, true, log_ev);
  comps.front().log_evidence = log_ev;
  return std::move(comps.front());
}

SharedPrecisionFit fit_gaussian_shared_precision(std::span<const std::vector<double>> subsets,
                                                 NormalPrior mean_prior, GammaPrior precision_prior,
                                                 const QuadratureConfig& q) {
  SharedPrecisionFit fit;
  fit.components = gaussian_block(subsets, mean_prior, precision_prior, q, true, fit.log_cond_evidence);
  return fit;
}

std::vector<double> dirichlet_mode(std::span<const double> alpha, std::span<const std::size_t> counts) {
  if (alpha.size() != counts.size()) throw ConfigError("alpha and counts differ in length");
  double total = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    const double shifted = alpha[j] + static_cast<double>(counts[j]) - 1.0;
    if (!(shifted > 0.0)) throw ConfigError("mode undefined");
    total += shifted;
  }
  std::vector<double> w(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j)
    w[j] = (alpha[j] + static_cast<double>(counts[j]) - 1.0) / total;
  return w;
}

namespace {

std::vector<double> modal_weights_or_empty(const PriorSpec& priors, std::span<const std::size_t> counts) {
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (!(priors.alpha[j] + static_cast<double>(counts[j]) > 1.0)) return {};
  return dirichlet_mode(priors.alpha, counts);
}

}  // namespace

ConditionalFit conditional_fit(const Observations& y, const Allocation& z, const FamilySpec& fam,
                               const PriorSpec& priors, const QuadratureConfig& q, FitDetail detail) {
  const std::size_t K = z.K();
  if (z.n() != y.n()) throw ConfigError("allocation and data differ in length");
  if (priors.K() != K) throw ConfigError("prior alpha length differs from K");
  const bool full = detail == FitDetail::Full;

  std::vector<std::vector<double>> subsets(K);
  for (std::size_t j = 0; j < K; ++j) subsets[j].reserve(z.counts()[j]);
  for (std::size_t i = 0; i < y.n(); ++i) subsets[z[i]].push_back(y.values[i]);

  ConditionalFit fit;
  fit.allocation = z;
  if (fam.family == Family::Gaussian && fam.shared_precision) {
    fit.components = gaussian_block(subsets, priors.gaussian_mean, priors.gaussian_precision, q, full,
                                    fit.log_cond_evidence);
  } else {
    fit.components.reserve(K);
    for (std::size_t j = 0; j < K; ++j) {
      if (fam.family == Family::Gaussian) {
        double log_ev = 0.0;
        auto comps = gaussian_block(std::span(subsets).subspan(j, 1), priors.gaussian_mean,
                                    priors.gaussian_precision, q, full, log_ev);
        comps.front().log_evidence = log_ev;
        fit.components.push_back(std::move(comps.front()));
      } else if (fam.poisson_prior == PoissonPrior::GammaConjugate) {
        fit.components.push_back(poisson_gamma(subsets[j], priors.poisson_gamma, full));
      } else {
        fit.components.push_back(poisson_lognormal(subsets[j], priors.poisson_log_mean, q, full));
      }
    }
    double total = 0.0;
    for (const auto& c : fit.components) total += c.log_evidence;
    fit.log_cond_evidence = total;
  }
  if (!std::isfinite(fit.log_cond_evidence)) throw NumericalError("non-finite conditional evidence");

  fit.modal_weights = modal_weights_or_empty(priors, z.counts());
  fit.modal_params.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    fit.modal_params[j].location = fit.components[j].location_mode;
    if (fam.family == Family::Gaussian) fit.modal_params[j].precision = fit.components[j].precision_mode;
  }
  return fit;
}

ConditionalFit permute_fit(const ConditionalFit& fit, std::span<const std::size_t> new_label,
                           const PriorSpec& priors) {
  const std::size_t K = fit.modal_params.size();
  ConditionalFit out;
  out.allocation = fit.allocation.relabeled(new_label);
  out.components.resize(fit.components.size());
  out.modal_params.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    out.modal_params[new_label[j]] = fit.modal_params[j];
    if (!fit.components.empty()) out.components[new_label[j]] = fit.components[j];
  }
  out.log_cond_evidence = fit.log_cond_evidence;
  out.modal_weights = modal_weights_or_empty(priors, out.allocation.counts());
  return out;
}

double component_log_density(const FamilySpec& fam, double y, const ModalParams& theta) {
  if (fam.family == Family::Gaussian) return log_normal_pdf(y, theta.location, theta.precision);
  return log_poisson_pmf(y, theta.location);
}

}  // namespace mixmodal
