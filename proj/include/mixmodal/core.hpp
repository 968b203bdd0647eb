#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixmodal/grid_density.hpp"

namespace mixmodal {

enum class Family { Gaussian, Poisson };
enum class PoissonPrior { GammaConjugate, LogNormal };

/// How a canonical allocation is weighted a priori.
///  Exchangeable: it stands for every relabeling of itself, so evidences equal
///    the sum over all K^n raw allocations.
///  Ordered: the prior on theta is pi(theta_1)...pi(theta_K) I(theta_1 < ... < theta_K)
///    left unnormalized. The mixture likelihood is symmetric in the labels, so
///    every evidence is exactly the exchangeable one minus log K!; allocation
///    posteriors are unchanged.
enum class LabelPrior { Exchangeable, Ordered };

struct FamilySpec {
  Family family = Family::Gaussian;
  bool shared_precision = false;                     // Gaussian only
  PoissonPrior poisson_prior = PoissonPrior::LogNormal;  // Poisson only

  static FamilySpec gaussian(bool shared = false) { return {Family::Gaussian, shared, PoissonPrior::LogNormal}; }
  static FamilySpec poisson(PoissonPrior kind = PoissonPrior::LogNormal) {
    return {Family::Poisson, false, kind};
  }
};

std::string to_string(const FamilySpec& fam);

/// The observed sample y_1..y_n.
struct Observations {
  std::vector<double> values;

  std::size_t n() const { return values.size(); }

  /// Throws ConfigError unless the values suit the family: finite reals for
  /// Gaussian, non-negative integers for Poisson, and at least one value.
  void validate(const FamilySpec& fam) const;
};

struct NormalPrior {
  double mean = 0.0;
  double precision = 0.001;
};

struct GammaPrior {
  double shape = 0.5;
  double rate = 0.5;
};

struct PriorSpec {
  std::vector<double> alpha;                     // Dirichlet concentrations, one per component
  NormalPrior gaussian_mean{0.0, 0.001};
  GammaPrior gaussian_precision{0.5, 0.5};
  GammaPrior poisson_gamma{1.0, 0.01};
  NormalPrior poisson_log_mean{0.0, 0.001};
  LabelPrior label_prior = LabelPrior::Exchangeable;

  /// Default priors for a K-component mixture (alpha_j = 2).
  static PriorSpec defaults(std::size_t K, double alpha = 2.0);

  std::size_t K() const { return alpha.size(); }
  bool exchangeable() const;

  /// Throws ConfigError on non-positive hyperparameters. `modal` additionally
  /// requires every alpha_j > 1 so that the Dirichlet mode always exists.
  void validate(bool modal) const;
};

/// Byte string identifying an allocation: a 4-byte big-endian length followed
/// by one byte per observation holding its 0-based label.
using AllocationKey = std::string;

/// Latent labels z (0-based internally, 1-based in every external format).
class Allocation {
 public:
  Allocation() = default;
  /// Labels in 0..K-1. Throws ConfigError on out-of-range labels or K > 255.
  Allocation(std::vector<std::uint8_t> labels, std::size_t K);

  /// Convenience for 1-based label lists as written in reports and tests.
  static Allocation from_one_based(std::span<const int> z, std::size_t K);

  std::size_t n() const { return labels_.size(); }
  std::size_t K() const { return counts_.size(); }
  std::span<const std::uint8_t> labels() const { return labels_; }
  std::span<const std::size_t> counts() const { return counts_; }
  std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
  std::size_t empty_components() const;

  AllocationKey key() const;
  static Allocation decode(const AllocationKey& key, std::size_t K);

  std::vector<int> one_based() const;

  /// Relabels with new_label[old] and returns the result.
  Allocation relabeled(std::span<const std::size_t> new_label) const;

  friend bool operator==(const Allocation& a, const Allocation& b) {
    return a.labels_ == b.labels_ && a.counts_.size() == b.counts_.size();
  }

 private:
  std::vector<std::uint8_t> labels_;
  std::vector<std::size_t> counts_;
};

/// counts_j = #{i : z_i = j} for 0-based labels; throws ConfigError when a
/// label is outside 0..K-1.
std::vector<std::size_t> allocation_counts(std::span<const std::uint8_t> z, std::size_t K);

/// Permutation new_label[old] that sorts components by ascending location.
/// Ties go to the component holding the earliest observation, then to the
/// lower original label, so the order depends only on the partition and the
/// locations. Throws ConfigError("invalid location estimate") on non-finite
/// locations.
std::vector<std::size_t> canonical_order(const Allocation& alloc, std::span<const double> locations);

/// Relabels `alloc` so components appear in ascending location order.
Allocation canonicalize(const Allocation& alloc, std::span<const double> locations);

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;
};

/// Conditional posterior of one component given an allocation.
struct ComponentPosterior {
  std::size_t size = 0;                        // n_j
  GridDensity location;                        // mean (Gaussian) or rate (Poisson)
  std::optional<GammaParams> location_exact;   // Poisson-Gamma only
  std::optional<GridDensity> precision;        // Gaussian only
  double location_mode = 0.0;
  double precision_mode = std::numeric_limits<double>::quiet_NaN();
  /// Additive contribution to log p(y|z). With a shared precision this is the
  /// component evidence at the modal precision (diagnostic only).
  double log_evidence = 0.0;
};

/// Component parameters that the modal sweep plugs into f_j(y | theta_j).
struct ModalParams {
  double location = 0.0;
  double precision = std::numeric_limits<double>::quiet_NaN();
};

/// Everything known about p(theta, w | y, z) for one allocation.
///
/// Fits computed with FitDetail::Summary leave the component densities empty;
/// the evidence, modes and sizes are always filled in.
struct ConditionalFit {
  Allocation allocation;
  std::vector<ComponentPosterior> components;
  double log_cond_evidence = 0.0;
  std::vector<double> modal_weights;
  std::vector<ModalParams> modal_params;

  std::vector<double> locations() const;
  bool has_densities() const;
};

struct SamplerConfig {
  enum class Init { Quantile, RandomUniform };

  std::size_t burn_in = 200;
  std::size_t iterations = 10000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  Init init = Init::Quantile;

  void validate() const;
  std::size_t retained() const { return iterations / thin; }
};

struct TraceEntry {
  std::size_t visit_count = 0;
  ConditionalFit fit;
};

/// Allocations retained by a sampler (canonical keys) with their fits.
struct AllocationTrace {
  std::vector<AllocationKey> visits;
  std::map<AllocationKey, TraceEntry> table;
  SamplerConfig config;
  std::size_t K = 0;

  std::size_t retained() const { return visits.size(); }
};

}  // namespace mixmodal
