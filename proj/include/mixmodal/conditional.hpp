#pragma once

#include <span>
#include <vector>

#include "mixmodal/core.hpp"
#include "mixmodal/numerics.hpp"

namespace mixmodal {

// Conditional posteriors of the component parameters given an allocation.
//
// Every fitter works from the component's data subset. Empty subsets return
// the prior with log_evidence exactly 0.

/// Posterior Gamma(a + sum y, b + n) and closed-form evidence.
ComponentPosterior fit_poisson_gamma(std::span<const double> subset, GammaPrior prior);

/// Rate with a Gaussian prior on log(rate); the posterior over log(rate) is
/// integrated on an adaptive grid and reported on the rate scale.
ComponentPosterior fit_poisson_lognormal(std::span<const double> subset, NormalPrior prior,
                                         const QuadratureConfig& q = {});

/// log of the integral over mu of prod_i N(y_i | mu, 1/tau) N(mu | m0, 1/p0).
double gaussian_evidence_given_tau(std::span<const double> subset, NormalPrior mean_prior, double tau);

/// Gaussian component with independent N(m0, 1/p0) mean and Gamma(a, b)
/// precision priors. The precision is integrated on a log-precision grid,
/// the mean analytically for each grid node.
ComponentPosterior fit_gaussian_component(std::span<const double> subset, NormalPrior mean_prior,
                                          GammaPrior precision_prior, const QuadratureConfig& q = {});

struct SharedPrecisionFit {
  std::vector<ComponentPosterior> components;
  double log_cond_evidence = 0.0;
};

/// Gaussian components sharing one precision. The joint evidence is a single
/// quadrature over the shared log-precision.
SharedPrecisionFit fit_gaussian_shared_precision(std::span<const std::vector<double>> subsets,
                                                 NormalPrior mean_prior, GammaPrior precision_prior,
                                                 const QuadratureConfig& q = {});

/// Mode of Dirichlet(alpha + counts). Throws ConfigError("mode undefined")
/// when some alpha_j + n_j <= 1.
std::vector<double> dirichlet_mode(std::span<const double> alpha, std::span<const std::size_t> counts);

enum class FitDetail { Summary, Full };

/// Splits y by z and fits every component. With FitDetail::Summary the
/// component densities are skipped (modes, sizes and evidences only).
ConditionalFit conditional_fit(const Observations& y, const Allocation& z, const FamilySpec& fam,
                               const PriorSpec& priors, const QuadratureConfig& q = {},
                               FitDetail detail = FitDetail::Full);

/// The fit of z relabeled by new_label[old]. Valid because component
/// priors are shared across labels; the modal weights are recomputed.
ConditionalFit permute_fit(const ConditionalFit& fit, std::span<const std::size_t> new_label,
                           const PriorSpec& priors);

/// log f_j(y | theta) for the family.
double component_log_density(const FamilySpec& fam, double y, const ModalParams& theta);

}  // namespace mixmodal
