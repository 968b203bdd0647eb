#include "mixmodal/grid_density.hpp"

#include <algorithm>
#include <cmath>

#include "mixmodal/errors.hpp"
#include "mixmodal/numerics.hpp"

namespace mixmodal {

GridDensity GridDensity::from_log_unnormalized(std::vector<double> support,
                                               std::vector<double> log_unnormalized) {
  if (support.size() != log_unnormalized.size() || support.size() < 2)
    throw ConfigError("grid density needs matching support and values (>= 2 points)");
  for (std::size_t i = 1; i < support.size(); ++i)
    if (!(support[i] > support[i - 1])) throw ConfigError("grid support must be strictly increasing");

  const double peak = *std::max_element(log_unnormalized.begin(), log_unnormalized.end());
  if (!std::isfinite(peak)) throw ConfigError("grid density has no finite mass");
  std::vector<double> dens(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) dens[i] = std::exp(log_unnormalized[i] - peak);
  const double area = trapezoid(support, dens);
  if (!(area > 0.0) || !std::isfinite(area)) throw ConfigError("grid density has no finite mass");
  const double shift = peak + std::log(area);
  for (double& v : log_unnormalized) v -= shift;

  GridDensity g;
  g.support_ = std::move(support);
  g.log_density_ = std::move(log_unnormalized);
  return g;
}

double GridDensity::log_at(double x) const {
  if (support_.empty() || x < support_.front() || x > support_.back()) return kNegInf;
  auto it = std::upper_bound(support_.begin(), support_.end(), x);
  if (it == support_.end()) return log_density_.back();
  const std::size_t j = static_cast<std::size_t>(it - support_.begin());
  const std::size_t i = j - 1;
  const double a = log_density_[i], b = log_density_[j];
  if (x == support_[i]) return a;
  if (a == kNegInf || b == kNegInf) return kNegInf;
  const double t = (x - support_[i]) / (support_[j] - support_[i]);
  return a + t * (b - a);
}

double GridDensity::density_at(double x) const { return std::exp(log_at(x)); }

double GridDensity::integral() const {
  std::vector<double> d(size());
  for (std::size_t i = 0; i < size(); ++i) d[i] = std::exp(log_density_[i]);
  return trapezoid(support_, d);
}

double GridDensity::mean() const {
  std::vector<double> d(size());
  for (std::size_t i = 0; i < size(); ++i) d[i] = support_[i] * std::exp(log_density_[i]);
  return trapezoid(support_, d);
}

double GridDensity::sd() const {
  const double m = mean();
  std::vector<double> d(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const double c = support_[i] - m;
    d[i] = c * c * std::exp(log_density_[i]);
  }
  return std::sqrt(std::max(trapezoid(support_, d), 0.0));
}

namespace {

// Mass of exp(a + (b - a) t) for t in [0, 1] scaled by the cell width.
double cell_mass(double a, double b, double width) {
  if (a == kNegInf && b == kNegInf) return 0.0;
  if (a == kNegInf || b == kNegInf) return 0.0;
  const double d = b - a;
  if (std::abs(d) < 1e-10) return width * std::exp(a) * (1.0 + 0.5 * d);
  return width * std::exp(a) * std::expm1(d) / d;
}

}  // namespace

double GridDensity::quantile(double u) const {
  if (support_.size() < 2) throw ConfigError("quantile of an empty grid density");
  std::vector<double> cum(size(), 0.0);
  for (std::size_t i = 1; i < size(); ++i)
    cum[i] = cum[i - 1] + cell_mass(log_density_[i - 1], log_density_[i], support_[i] - support_[i - 1]);
  const double target = u * cum.back();
  auto it = std::upper_bound(cum.begin() + 1, cum.end(), target);
  if (it == cum.end()) return support_.back();
  const std::size_t j = static_cast<std::size_t>(it - cum.begin());
  const std::size_t i = j - 1;
  const double width = support_[j] - support_[i];
  const double a = log_density_[i], d = log_density_[j] - a;
  const double rem = target - cum[i];
  // Solve width * e^a * (e^{d t} - 1) / d = rem for t.
  double t;
  if (std::abs(d) < 1e-10) {
    t = rem / (width * std::exp(a));
  } else {
    t = std::log1p(rem * d / (width * std::exp(a))) / d;
  }
  t = std::clamp(t, 0.0, 1.0);
  return support_[i] + t * width;
}

GridDensity mix_densities(std::span<const GridDensity* const> parts, std::span<const double> weights) {
  if (parts.size() != weights.size() || parts.empty())
    throw ConfigError("mixture needs one weight per part");
  std::vector<double> grid;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (!(weights[k] > 0.0)) continue;
    const auto s = parts[k]->support();
    grid.insert(grid.end(), s.begin(), s.end());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> dens(grid.size(), 0.0);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (!(weights[k] > 0.0)) continue;
    const GridDensity& p = *parts[k];
    const auto s = p.support();
    const auto ld = p.log_density();
    // Walk both sorted grids together.
    auto first = std::lower_bound(grid.begin(), grid.end(), s.front());
    std::size_t j = 0;
    for (auto it = first; it != grid.end() && *it <= s.back(); ++it) {
      const double x = *it;
      while (j + 1 < s.size() && s[j + 1] <= x) ++j;
      double lv;
      if (x == s[j] || j + 1 == s.size()) {
        lv = ld[j];
      } else if (ld[j] == kNegInf || ld[j + 1] == kNegInf) {
        lv = kNegInf;
      } else {
        const double t = (x - s[j]) / (s[j + 1] - s[j]);
        lv = ld[j] + t * (ld[j + 1] - ld[j]);
      }
      dens[static_cast<std::size_t>(it - grid.begin())] += weights[k] * std::exp(lv);
    }
  }
  std::vector<double> logd(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) logd[i] = std::log(dens[i]);
  return GridDensity::from_log_unnormalized(std::move(grid), std::move(logd));
}

}  // namespace mixmodal
