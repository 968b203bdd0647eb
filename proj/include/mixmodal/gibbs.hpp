#pragma once

#include <map>
#include <vector>

#include "mixmodal/conditional.hpp"
#include "mixmodal/core.hpp"
#include "mixmodal/rng.hpp"

namespace mixmodal {

/// Starting allocation. Quantile sorts the data and cuts it into K contiguous
/// blocks (the remainder goes to the last blocks); RandomUniform draws i.i.d.
/// labels. The result is canonicalized by the modal locations of its fit.
Allocation init_allocation(const Observations& y, std::size_t K, SamplerConfig::Init strategy, CounterRng& rng,
                           const FamilySpec& fam, const PriorSpec& priors, const QuadratureConfig& q = {});

/// Per-observation label probabilities proportional to w_j f_j(y_i | theta_j).
/// Throws NumericalError("observation unsupported by all components") when
/// every component gives zero density.
std::vector<double> label_probabilities(double y, std::span<const double> weights,
                                        std::span<const ModalParams> params, const FamilySpec& fam);

/// One modal sweep: every label is redrawn with the fit's modes held fixed.
Allocation modal_sweep(const Observations& y, const ConditionalFit& fit, const FamilySpec& fam, CounterRng& rng);

/// Memoizes summary fits by allocation key and maps raw allocations to their
/// canonical form. Evicts least-recently-used entries beyond `capacity`.
class FitCache {
 public:
  FitCache(const Observations& y, const FamilySpec& fam, const PriorSpec& priors, const QuadratureConfig& q,
           std::size_t capacity = 1'000'000);

  /// Summary fit of a canonical allocation.
  const ConditionalFit& fit(const Allocation& canonical);

  /// Canonical relabeling of any allocation, caching its fit as well.
  Allocation canonical(const Allocation& raw);

  std::size_t fits_computed() const { return fits_computed_; }

 private:
  const ConditionalFit& insert(const AllocationKey& key, ConditionalFit fit);
  void touch(const AllocationKey& key);

  const Observations& y_;
  FamilySpec fam_;
  PriorSpec priors_;
  QuadratureConfig q_;
  std::size_t capacity_;
  std::size_t fits_computed_ = 0;
  std::uint64_t clock_ = 0;
  std::map<AllocationKey, std::pair<ConditionalFit, std::uint64_t>> fits_;
  std::map<std::uint64_t, AllocationKey> recency_;
  std::map<AllocationKey, AllocationKey> raw_to_canonical_;
};

/// Modal Gibbs over allocations: fit the current allocation, take the
/// conditional modes of weights and component parameters, redraw every label,
/// canonicalize. Retains every thin-th allocation after burn-in; the table
/// holds full fits for every retained key.
AllocationTrace run_modal_gibbs(const Observations& y, std::size_t K, const FamilySpec& fam, const PriorSpec& priors,
                                const SamplerConfig& cfg, const QuadratureConfig& q = {});

/// A trace for K = 1: the single allocation, visited on every retained sweep.
AllocationTrace single_component_trace(const Observations& y, const FamilySpec& fam, const PriorSpec& priors,
                                       const SamplerConfig& cfg, const QuadratureConfig& q = {});

struct ParameterDraw {
  std::vector<double> weights;
  std::vector<double> locations;
  std::vector<double> precisions;  // Gaussian only
};

struct ReferenceRun {
  AllocationTrace trace;
  std::vector<ParameterDraw> draws;  // one per retained sweep, raw labels
};

/// Data-augmentation Gibbs sampler: w ~ Dirichlet(alpha + counts), labels from
/// w_j f_j(y_i | theta_j), theta from its conditional posterior given the
/// labels (exact Gamma for Poisson-Gamma; grid inverse CDF for the rate under
/// a log-normal prior and for the Gaussian precision, then the Gaussian mean
/// exactly given the precision).
ReferenceRun run_reference_gibbs(const Observations& y, std::size_t K, const FamilySpec& fam,
                                 const PriorSpec& priors, const SamplerConfig& cfg, const QuadratureConfig& q = {});

struct ExactPosterior {
  std::map<AllocationKey, double> probabilities;  // canonical key -> mass
  std::map<AllocationKey, double> log_joint;      // log p(y|z) + log p(z) of the canonical representative
  double log_evidence = 0.0;                      // log sum over all K^n allocations
  std::size_t raw_allocations = 0;
};

/// Evaluates log p(y|z) + log p(z) for every z in {1..K}^n and collapses
/// label-switched copies onto their canonical key. Throws
/// NumericalError("enumeration too large") when n > n_limit or K^n > 1e7.
ExactPosterior enumerate_exact(const Observations& y, std::size_t K, const FamilySpec& fam, const PriorSpec& priors,
                               std::size_t n_limit = 12, const QuadratureConfig& q = {});

}  // namespace mixmodal
