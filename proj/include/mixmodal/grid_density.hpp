#pragma once

#include <span>
#include <vector>

namespace mixmodal {

/// A normalized density tabulated on a strictly increasing support.
///
/// Between support points the log density is interpolated linearly; outside
/// the support the density is zero. Normalization uses the trapezoid rule on
/// exp(log_density), so integral() is 1 up to rounding for every instance
/// built through from_log_unnormalized().
class GridDensity {
 public:
  GridDensity() = default;

  /// Normalizes exp(log_unnormalized) over `support`. Throws ConfigError if
  /// the support is not strictly increasing, sizes differ, or there is no
  /// positive mass.
  static GridDensity from_log_unnormalized(std::vector<double> support,
                                           std::vector<double> log_unnormalized);

  bool empty() const { return support_.empty(); }
  std::size_t size() const { return support_.size(); }
  std::span<const double> support() const { return support_; }
  std::span<const double> log_density() const { return log_density_; }

  double log_at(double x) const;
  double density_at(double x) const;

  double integral() const;
  double mean() const;
  double sd() const;

  /// Inverse CDF of the piecewise log-linear density; u in [0, 1).
  double quantile(double u) const;

 private:
  std::vector<double> support_;
  std::vector<double> log_density_;
};

/// Mixture sum_k weights[k] * parts[k] tabulated on the union of the part
/// supports. Parts with zero weight are skipped.
GridDensity mix_densities(std::span<const GridDensity* const> parts, std::span<const double> weights);

}  // namespace mixmodal
