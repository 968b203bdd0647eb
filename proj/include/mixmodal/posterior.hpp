#pragma once

#include <map>
#include <vector>

#include "mixmodal/core.hpp"
#include "mixmodal/grid_density.hpp"

namespace mixmodal {

/// log p(z) under the Dirichlet-multinomial allocation prior:
/// logG(sum a) - sum logG(a_j) + sum logG(n_j + a_j) - logG(n + sum a).
double log_allocation_prior(std::span<const std::size_t> counts, std::span<const double> alpha);

/// log of the total prior mass of every relabeling of z. A canonical key
/// stands for this whole orbit, so estimators over canonical keys use it in
/// place of log p(z). With exchangeable alpha it is
/// log p(z) + log(K! / m!) where m is the number of empty components.
double log_orbit_prior(std::span<const std::size_t> counts, std::span<const double> alpha);

/// Prior weight of a canonical key: log_orbit_prior, minus log K! under an
/// ordered label prior.
double log_canonical_prior(std::span<const std::size_t> counts, std::span<const double> alpha,
                           LabelPrior label_prior = LabelPrior::Exchangeable);

struct AllocationPosterior {
  enum class Estimator { GibbsFrequency, EvidenceRenormalized };

  std::map<AllocationKey, double> entries;
  Estimator estimator = Estimator::GibbsFrequency;

  double at(const AllocationKey& key) const;
  /// Key with the largest probability; ties go to the smallest key.
  const AllocationKey& mode() const;
};

/// visit_count / retained sweeps. Throws ConfigError("empty trace").
AllocationPosterior empirical_allocation_posterior(const AllocationTrace& trace);

/// Probabilities proportional to exp(log p(y|z) + log canonical prior) over
/// the visited keys, normalized with log-sum-exp.
AllocationPosterior renormalized_allocation_posterior(const AllocationTrace& trace, std::span<const double> alpha,
                                                      LabelPrior label_prior = LabelPrior::Exchangeable);

enum class Parameter { Location, Precision };

struct MarginalSummary {
  GridDensity density;
  double mean = 0.0;
  double sd = 0.0;
};

/// Model-averaged marginal sum_z post(z) p(theta | y, z) for one component
/// parameter, tabulated on the union of the per-allocation grids. Throws
/// ConfigError on an out-of-range component or a precision request for a
/// Poisson fit.
MarginalSummary bma_marginal(const AllocationTrace& trace, const AllocationPosterior& post, std::size_t component,
                             Parameter parameter);

struct WeightSummary {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<GridDensity> marginal;  // Beta mixtures on (0, 1); empty when K = 1
};

/// Weights under the mixture of Dirichlet(alpha + counts(z)) posteriors.
WeightSummary weight_posterior_summary(const AllocationTrace& trace, const AllocationPosterior& post,
                                       std::span<const double> alpha, std::size_t grid_points = 1000);

struct CoverageEntry {
  AllocationKey key;
  double gibbs = 0.0;
  double renormalized = 0.0;
  double log_ratio = 0.0;  // log(gibbs / renormalized), may be +-inf
};

struct CoverageReport {
  double tv_distance = 0.0;
  bool flagged = false;
  std::vector<CoverageEntry> entries;  // sorted by key
};

inline constexpr double kDefaultCoverageThreshold = 0.1;

/// Total variation between two allocation posteriors; keys missing from one
/// side count as probability 0.
CoverageReport coverage_diagnostic(const AllocationPosterior& gibbs, const AllocationPosterior& renormalized,
                                   double threshold = kDefaultCoverageThreshold);

double total_variation(const std::map<AllocationKey, double>& p, const std::map<AllocationKey, double>& q);

}  // namespace mixmodal
