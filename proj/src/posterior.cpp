#include "mixmodal/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixmodal/errors.hpp"
#include "mixmodal/numerics.hpp"

namespace mixmodal {

double log_allocation_prior(std::span<const std::size_t> counts, std::span<const double> alpha) {
  if (counts.size() != alpha.size()) throw ConfigError("alpha and counts differ in length");
  double alpha_sum = 0.0, n = 0.0, acc = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (!(alpha[j] > 0.0)) throw ConfigError("invalid prior: alpha must be positive");
    const double nj = static_cast<double>(counts[j]);
    alpha_sum += alpha[j];
    n += nj;
    acc += std::lgamma(nj + alpha[j]) - std::lgamma(alpha[j]);
  }
  return std::lgamma(alpha_sum) + acc - std::lgamma(n + alpha_sum);
}

double log_orbit_prior(std::span<const std::size_t> counts, std::span<const double> alpha) {
  const std::size_t K = counts.size();
  const auto empty = static_cast<double>(std::count(counts.begin(), counts.end(), std::size_t{0}));
  const double base = log_allocation_prior(counts, alpha);
  const bool exchangeable = std::all_of(alpha.begin(), alpha.end(), [&](double a) { return a == alpha[0]; });
  if (exchangeable) return base + std::lgamma(static_cast<double>(K) + 1.0) - std::lgamma(empty + 1.0);

  // Sum over all K! relabelings; the m! relabelings that only shuffle empty
  // components produce the same allocation.
  if (K > 8) throw ConfigError("non-exchangeable alpha is limited to K <= 8");
  std::vector<std::size_t> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> moved(K);
  std::vector<double> terms;
  do {
    for (std::size_t j = 0; j < K; ++j) moved[perm[j]] = counts[j];
    terms.push_back(log_allocation_prior(moved, alpha));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return log_sum_exp(terms) - std::lgamma(empty + 1.0);
}

double AllocationPosterior::at(const AllocationKey& key) const {
  auto it = entries.find(key);
  return it == entries.end() ? 0.0 : it->second;
}

const AllocationKey& AllocationPosterior::mode() const {
  if (entries.empty()) throw ConfigError("empty trace");
  auto best = entries.begin();
  for (auto it = entries.begin(); it != entries.end(); ++it)
    if (it->second > best->second) best = it;  // strict: ties keep the smaller key
  return best->first;
}

AllocationPosterior empirical_allocation_posterior(const AllocationTrace& trace) {
  if (trace.visits.empty() || trace.table.empty()) throw ConfigError("empty trace");
  AllocationPosterior post;
  post.estimator = AllocationPosterior::Estimator::GibbsFrequency;
  const double total = static_cast<double>(trace.visits.size());
  for (const auto& [key, entry] : trace.table)
    post.entries[key] = static_cast<double>(entry.visit_count) / total;
  return post;
}

double log_canonical_prior(std::span<const std::size_t> counts, std::span<const double> alpha, LabelPrior label_prior) {
  const double orbit = log_orbit_prior(counts, alpha);
  return label_prior == LabelPrior::Ordered ? orbit - std::lgamma(static_cast<double>(counts.size()) + 1.0) : orbit;
}

AllocationPosterior renormalized_allocation_posterior(const AllocationTrace& trace, std::span<const double> alpha,
                                                      LabelPrior label_prior) {
  if (trace.table.empty()) throw ConfigError("empty trace");
  std::vector<double> joint;
  joint.reserve(trace.table.size());
  for (const auto& [key, entry] : trace.table) {
    if (!std::isfinite(entry.fit.log_cond_evidence)) throw NumericalError("non-finite conditional evidence");
    joint.push_back(entry.fit.log_cond_evidence + log_canonical_prior(entry.fit.allocation.counts(), alpha, label_prior));
  }
  const double norm = log_sum_exp(joint);
  AllocationPosterior post;
  post.estimator = AllocationPosterior::Estimator::EvidenceRenormalized;
  // Rounding in large log joints leaves exp(joint - norm) off by ~1e-11;
  // a final division restores the unit sum.
  double total = 0.0;
  for (double& j : joint) total += (j = std::exp(j - norm));
  std::size_t i = 0;
  for (const auto& [key, entry] : trace.table) post.entries[key] = joint[i++] / total;
  return post;
}

MarginalSummary bma_marginal(const AllocationTrace& trace, const AllocationPosterior& post, std::size_t component,
                             Parameter parameter) {
  if (component >= trace.K) throw ConfigError("component index out of range");
  std::vector<const GridDensity*> parts;
  std::vector<double> weights;
  double max_weight = 0.0;
  for (const auto& [key, p] : post.entries) max_weight = std::max(max_weight, p);
  for (const auto& [key, p] : post.entries) {
    // Entries below 1e-14 of the largest weight cannot move the mixture.
    if (!(p > 1e-14 * max_weight)) continue;
    auto it = trace.table.find(key);
    if (it == trace.table.end()) throw ConfigError("posterior key missing from trace");
    const ConditionalFit& fit = it->second.fit;
    if (!fit.has_densities()) throw ConfigError("trace fit has no densities");
    const ComponentPosterior& c = fit.components.at(component);
    if (parameter == Parameter::Precision) {
      if (!c.precision) throw ConfigError("precision marginal requested for a family without precision");
      parts.push_back(&*c.precision);
    } else {
      parts.push_back(&c.location);
    }
    weights.push_back(p);
  }
  if (parts.empty()) throw ConfigError("empty trace");
  MarginalSummary out;
  out.density = parts.size() == 1 ? *parts.front() : mix_densities(parts, weights);
  out.mean = out.density.mean();
  out.sd = out.density.sd();
  return out;
}

WeightSummary weight_posterior_summary(const AllocationTrace& trace, const AllocationPosterior& post,
                                       std::span<const double> alpha, std::size_t grid_points) {
  const std::size_t K = alpha.size();
  if (K != trace.K) throw ConfigError("prior alpha length differs from K");
  if (post.entries.empty()) throw ConfigError("empty trace");
  WeightSummary out;
  out.mean.assign(K, 0.0);
  std::vector<double> second(K, 0.0);

  std::vector<double> grid(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) grid[g] = (g + 0.5) / static_cast<double>(grid_points);
  // Accumulated in log space: concentrated Beta densities underflow.
  std::vector<std::vector<double>> log_dens(K, std::vector<double>(grid_points, kNegInf));

  for (const auto& [key, p] : post.entries) {
    if (!(p > 0.0)) continue;
    const auto it = trace.table.find(key);
    if (it == trace.table.end()) throw ConfigError("posterior key missing from trace");
    const auto counts = it->second.fit.allocation.counts();
    double a0 = 0.0;
    for (std::size_t j = 0; j < K; ++j) a0 += alpha[j] + static_cast<double>(counts[j]);
    for (std::size_t j = 0; j < K; ++j) {
      const double aj = alpha[j] + static_cast<double>(counts[j]);
      out.mean[j] += p * aj / a0;
      second[j] += p * aj * (aj + 1.0) / (a0 * (a0 + 1.0));
      if (K == 1) continue;
      // Beta(aj, a0 - aj) marginal of the Dirichlet.
      const double bj = a0 - aj;
      const double log_norm = std::log(p) + std::lgamma(a0) - std::lgamma(aj) - std::lgamma(bj);
      for (std::size_t g = 0; g < grid_points; ++g) {
        const double x = grid[g];
        log_dens[j][g] = log_add_exp(log_dens[j][g], log_norm + (aj - 1.0) * std::log(x) + (bj - 1.0) * std::log1p(-x));
      }
    }
  }
  out.sd.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    out.sd[j] = std::sqrt(std::max(second[j] - out.mean[j] * out.mean[j], 0.0));
    // With one component the weight is identically 1 and has no density.
    if (K > 1) out.marginal.push_back(GridDensity::from_log_unnormalized(grid, std::move(log_dens[j])));
  }
  return out;
}

double total_variation(const std::map<AllocationKey, double>& p, const std::map<AllocationKey, double>& q) {
  double acc = 0.0;
  auto a = p.begin();
  auto b = q.begin();
  while (a != p.end() || b != q.end()) {
    if (b == q.end() || (a != p.end() && a->first < b->first)) {
      acc += std::abs(a->second);
      ++a;
    } else if (a == p.end() || b->first < a->first) {
      acc += std::abs(b->second);
      ++b;
    } else {
      acc += std::abs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  return 0.5 * acc;
}

CoverageReport coverage_diagnostic(const AllocationPosterior& gibbs, const AllocationPosterior& renormalized,
                                   double threshold) {
  CoverageReport report;
  report.tv_distance = total_variation(gibbs.entries, renormalized.entries);
  report.flagged = report.tv_distance > threshold;
  std::map<AllocationKey, CoverageEntry> merged;
  for (const auto& [k, p] : gibbs.entries) merged[k].gibbs = p;
  for (const auto& [k, p] : renormalized.entries) merged[k].renormalized = p;
  for (auto& [k, e] : merged) {
    e.key = k;
    e.log_ratio = std::log(e.gibbs) - std::log(e.renormalized);
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace mixmodal
