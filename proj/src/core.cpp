#include "mixmodal/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixmodal/errors.hpp"

namespace mixmodal {

std::string to_string(const FamilySpec& fam) {
  if (fam.family == Family::Gaussian) return fam.shared_precision ? "gaussian-shared" : "gaussian";
  return fam.poisson_prior == PoissonPrior::GammaConjugate ? "poisson-gamma" : "poisson-lognormal";
}

void Observations::validate(const FamilySpec& fam) const {
  if (values.empty()) throw ConfigError("empty data");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("observations must be finite");
    if (fam.family == Family::Poisson && (v < 0.0 || v != std::floor(v)))
      throw ConfigError("Poisson observations must be non-negative integers");
  }
}

PriorSpec PriorSpec::defaults(std::size_t K, double alpha) {
  PriorSpec p;
  p.alpha.assign(K, alpha);
  return p;
}

bool PriorSpec::exchangeable() const {
  return std::all_of(alpha.begin(), alpha.end(), [&](double a) { return a == alpha.front(); });
}

void PriorSpec::validate(bool modal) const {
  if (alpha.empty()) throw ConfigError("at least one component is required");
  if (alpha.size() > 255) throw ConfigError("at most 255 components are supported");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("invalid prior: alpha must be positive");
    if (modal && !(a > 1.0)) throw ConfigError("invalid prior: modal Gibbs needs alpha > 1");
  }
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(gaussian_mean.precision) || !std::isfinite(gaussian_mean.mean) ||
      !positive(gaussian_precision.shape) || !positive(gaussian_precision.rate) ||
      !positive(poisson_gamma.shape) || !positive(poisson_gamma.rate) ||
      !positive(poisson_log_mean.precision) || !std::isfinite(poisson_log_mean.mean))
    throw ConfigError("invalid prior");
}

std::vector<std::size_t> allocation_counts(std::span<const std::uint8_t> z, std::size_t K) {
  std::vector<std::size_t> counts(K, 0);
  for (auto label : z) {
    if (label >= K) throw ConfigError("allocation label out of range");
    ++counts[label];
  }
  return counts;
}

Allocation::Allocation(std::vector<std::uint8_t> labels, std::size_t K) {
  if (K == 0 || K > 255) throw ConfigError("number of components must be in 1..255");
  counts_ = allocation_counts(labels, K);
  labels_ = std::move(labels);
}

Allocation Allocation::from_one_based(std::span<const int> z, std::size_t K) {
  std::vector<std::uint8_t> labels(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 1 || static_cast<std::size_t>(z[i]) > K) throw ConfigError("allocation label out of range");
    labels[i] = static_cast<std::uint8_t>(z[i] - 1);
  }
  return Allocation(std::move(labels), K);
}

std::size_t Allocation::empty_components() const {
  return static_cast<std::size_t>(std::count(counts_.begin(), counts_.end(), std::size_t{0}));
}

AllocationKey Allocation::key() const {
  AllocationKey k;
  k.reserve(4 + labels_.size());
  const auto n = static_cast<std::uint32_t>(labels_.size());
  for (int shift = 24; shift >= 0; shift -= 8) k.push_back(static_cast<char>((n >> shift) & 0xFFu));
  for (auto l : labels_) k.push_back(static_cast<char>(l));
  return k;
}

Allocation Allocation::decode(const AllocationKey& key, std::size_t K) {
  if (key.size() < 4) throw ConfigError("malformed allocation key");
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(key[i]);
  if (key.size() != 4 + static_cast<std::size_t>(n)) throw ConfigError("malformed allocation key");
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<unsigned char>(key[4 + i]);
  return Allocation(std::move(labels), K);
}

std::vector<int> Allocation::one_based() const {
  std::vector<int> z(labels_.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = labels_[i] + 1;
  return z;
}

Allocation Allocation::relabeled(std::span<const std::size_t> new_label) const {
  std::vector<std::uint8_t> labels(labels_.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(new_label[labels_[i]]);
  return Allocation(std::move(labels), K());
}

std::vector<std::size_t> canonical_order(const Allocation& alloc, std::span<const double> locations) {
  const std::size_t K = alloc.K();
  if (locations.size() != K) throw ConfigError("one location per component is required");
  for (double l : locations)
    if (!std::isfinite(l)) throw ConfigError("invalid location estimate");

  std::vector<std::size_t> first(K, alloc.n());
  for (std::size_t i = alloc.n(); i-- > 0;) first[alloc[i]] = i;

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (locations[a] != locations[b]) return locations[a] < locations[b];
    if (first[a] != first[b]) return first[a] < first[b];
    return a < b;
  });
  std::vector<std::size_t> new_label(K);
  for (std::size_t rank = 0; rank < K; ++rank) new_label[order[rank]] = rank;
  return new_label;
}

Allocation canonicalize(const Allocation& alloc, std::span<const double> locations) {
  return alloc.relabeled(canonical_order(alloc, locations));
}

std::vector<double> ConditionalFit::locations() const {
  std::vector<double> l(modal_params.size());
  for (std::size_t j = 0; j < l.size(); ++j) l[j] = modal_params[j].location;
  return l;
}

bool ConditionalFit::has_densities() const {
  return !components.empty() && !components.front().location.empty();
}

void SamplerConfig::validate() const {
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (iterations < thin) throw ConfigError("iterations must be >= thin");
}

}  // namespace mixmodal
