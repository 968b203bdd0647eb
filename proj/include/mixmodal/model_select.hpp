#pragma once

#include <optional>
#include <vector>

#include "mixmodal/core.hpp"
#include "mixmodal/numerics.hpp"
#include "mixmodal/posterior.hpp"

namespace mixmodal {

/// log sum over visited keys of p(y|z) * canonical prior: a lower bound on
/// the evidence that is exact once the trace covers the whole allocation space.
double log_evidence_I(const AllocationTrace& trace, std::span<const double> alpha,
                      LabelPrior label_prior = LabelPrior::Exchangeable);

enum class ChibVariant {
  G,  ///< denominator from visit frequencies
  M,  ///< denominator from the evidence-renormalized posterior
};

/// log p(y|z^m) + log prior(z^m) - log p_hat(z^m | y) at the mode z^m of the
/// chosen allocation posterior (ties go to the smallest key).
double log_evidence_chib(const AllocationTrace& trace, std::span<const double> alpha, ChibVariant variant,
                         LabelPrior label_prior = LabelPrior::Exchangeable);

/// Softmax of log evidence + log prior.
std::vector<double> model_posterior_probs(std::span<const double> log_evidences, std::span<const double> model_priors);

/// Allocation posterior that weights the parameter summaries.
enum class SummaryPosterior {
  Gibbs,              ///< visit frequencies
  Renormalized,       ///< evidence-renormalized over the visited set
  SwitchWhenFlagged,  ///< Gibbs unless the coverage diagnostic is flagged
};

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct ComponentSummary {
  ParameterSummary location;
  std::optional<ParameterSummary> precision;
  ParameterSummary weight;
};

struct ComponentMarginals {
  GridDensity location;
  std::optional<GridDensity> precision;
};

struct ModelRow {
  std::size_t K = 0;
  double log_evidence_I = 0.0;
  double log_evidence_chib_G = 0.0;
  double log_evidence_chib_M = 0.0;
  double prob_I = 0.0;
  double prob_G = 0.0;
  double prob_M = 0.0;
  std::vector<ComponentSummary> components;
  std::vector<ComponentMarginals> marginals;
  CoverageReport diagnostic;
  /// Allocation posterior actually used for the parameter summaries.
  AllocationPosterior::Estimator summary_estimator = AllocationPosterior::Estimator::GibbsFrequency;
  std::size_t visited = 0;        // distinct canonical keys
  std::uint64_t seed = 0;         // seed of this row's chain
  AllocationKey modal_allocation; // mode of the renormalized posterior
  double runtime_ms = 0.0;
};

struct SelectOptions {
  std::vector<std::size_t> k_range;
  SamplerConfig sampler;
  QuadratureConfig quadrature;
  double coverage_threshold = kDefaultCoverageThreshold;
  SummaryPosterior summaries = SummaryPosterior::Gibbs;
};

struct ModelComparisonReport {
  FamilySpec family;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<ModelRow> rows;  // ordered by K
};

/// Summaries for one K from an existing trace (no sampling).
ModelRow summarize_trace(const AllocationTrace& trace, const PriorSpec& priors, const FamilySpec& fam,
                         double coverage_threshold = kDefaultCoverageThreshold,
                         SummaryPosterior summaries = SummaryPosterior::Gibbs);

/// Runs modal Gibbs for every K in the range (K = 1 is a single conditional
/// fit), then fills in evidences, model probabilities under each estimator,
/// model-averaged parameter summaries and the coverage diagnostic. The chain
/// for K uses the seed CounterRng::derive(sampler.seed, K). `base` supplies
/// every prior except alpha, which is alpha_value repeated K times.
ModelComparisonReport select_k(const Observations& y, const FamilySpec& fam, const PriorSpec& base, double alpha_value,
                               const SelectOptions& opts);

}  // namespace mixmodal
