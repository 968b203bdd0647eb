#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace mixmodal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(v))) with max subtraction. Returns -inf for an empty span or
/// when every entry is -inf.
double log_sum_exp(std::span<const double> v);

/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// Composite Simpson weights for an odd number of equally spaced nodes.
std::vector<double> simpson_weights(std::size_t n, double h);

/// Trapezoid rule over an arbitrary strictly increasing grid.
double trapezoid(std::span<const double> x, std::span<const double> f);

/// Settings for integrating a one-dimensional unnormalized log density on
/// a grid centred at its mode.
struct QuadratureConfig {
  int grid_size = 201;               ///< odd, >= 21
  double log_range_halfwidth = 8.0;  ///< in posterior standard deviations
  int refinement = 2;                ///< re-grid passes after the first

  void validate() const;
};

/// Result of integrating exp(log_f) over the real line.
struct LogQuadrature {
  std::vector<double> nodes;       // equally spaced
  std::vector<double> log_values;  // log_f at nodes
  std::vector<double> weights;     // Simpson weights
  double log_integral = 0.0;
  double mode = 0.0;               // refined continuous argmax
  double log_at_mode = 0.0;

  /// Posterior probability mass carried by each node (sums to 1).
  std::vector<double> node_masses() const;
};

/// Integrates exp(log_f(x)) dx for a smooth unimodal log_f.
///
/// `start` is a guess for the mode and `scale` a guess for the spread. The
/// mode is refined by Brent's method, a Laplace standard deviation is taken
/// from a finite-difference curvature, and the grid is built over
/// mode +- halfwidth*sd, extended until both ends are negligible. Each
/// refinement pass re-centres the grid with moments from the previous pass.
/// Throws NumericalError("quadrature failure") when the last two passes
/// disagree by more than 1e-6 in relative terms even after grid doubling.
LogQuadrature integrate_log_density(const std::function<double(double)>& log_f,
                                    double start, double scale,
                                    const QuadratureConfig& cfg);

/// Maximizes a unimodal function on the real line, starting near `start`
/// with a bracket of initial width `scale`.
double maximize_unimodal(const std::function<double(double)>& f, double start,
                         double scale);

double log_normal_pdf(double x, double mean, double precision);
double log_poisson_pmf(double y, double rate);
double log_gamma_pdf(double x, double shape, double rate);

}  // namespace mixmodal
