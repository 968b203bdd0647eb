#include "mixmodal/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "mixmodal/errors.hpp"

namespace mixmodal {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

std::vector<double> simpson_weights(std::size_t n, double h) {
  if (n < 3 || n % 2 == 0) throw ConfigError("Simpson rule needs an odd number of nodes >= 3");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || i + 1 == n)
      w[i] = h / 3.0;
    else
      w[i] = (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
  }
  return w;
}

double trapezoid(std::span<const double> x, std::span<const double> f) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return acc;
}

void QuadratureConfig::validate() const {
  if (grid_size < 21 || grid_size % 2 == 0)
    throw ConfigError("quadrature grid_size must be odd and >= 21");
  if (!(log_range_halfwidth > 0.0)) throw ConfigError("quadrature halfwidth must be positive");
  if (refinement < 0) throw ConfigError("quadrature refinement must be >= 0");
}

std::vector<double> LogQuadrature::node_masses() const {
  std::vector<double> m(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    m[i] = weights[i] * std::exp(log_values[i] - log_integral);
  return m;
}

double maximize_unimodal(const std::function<double(double)>& f, double start, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  auto safe = [&](double x) {
    const double v = f(x);
    return std::isnan(v) ? kNegInf : v;
  };
  double mid = start;
  double fmid = safe(mid);
  double step = scale;
  double lo = mid - step, hi = mid + step;
  double flo = safe(lo), fhi = safe(hi);
  // Walk uphill until the middle point dominates both ends.
  for (int iter = 0; iter < 200 && (flo > fmid || fhi > fmid); ++iter) {
    if (flo > fmid && flo >= fhi) {
      hi = mid;
      fhi = fmid;
      mid = lo;
      fmid = flo;
      step *= 2.0;
      lo = mid - step;
      flo = safe(lo);
    } else {
      lo = mid;
      flo = fmid;
      mid = hi;
      fmid = fhi;
      step *= 2.0;
      hi = mid + step;
      fhi = safe(hi);
    }
  }
  if (flo > fmid || fhi > fmid || !std::isfinite(fmid))
    throw NumericalError("quadrature failure: objective has no interior maximum");
  auto neg = [&](double x) {
    const double v = safe(x);
    return v == kNegInf ? std::numeric_limits<double>::max() : -v;
  };
  const auto [x, fx] = boost::math::tools::brent_find_minima(neg, lo, hi, 40);
  (void)fx;
  return x;
}

namespace {

struct Pass {
  LogQuadrature q;
  double mean = 0.0;
  double sd = 0.0;
};

Pass run_pass(const std::function<double(double)>& f, double lo, double hi, int n) {
  Pass p;
  const double h = (hi - lo) / (n - 1);
  p.q.nodes.resize(n);
  p.q.log_values.resize(n);
  for (int i = 0; i < n; ++i) {
    p.q.nodes[i] = lo + h * i;
    p.q.log_values[i] = f(p.q.nodes[i]);
  }
  p.q.nodes.back() = hi;
  p.q.weights = simpson_weights(n, h);
  std::vector<double> terms(n);
  for (int i = 0; i < n; ++i) terms[i] = std::log(p.q.weights[i]) + p.q.log_values[i];
  p.q.log_integral = log_sum_exp(terms);
  const auto masses = p.q.node_masses();
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    m1 += masses[i] * p.q.nodes[i];
    m2 += masses[i] * p.q.nodes[i] * p.q.nodes[i];
  }
  p.mean = m1;
  p.sd = std::sqrt(std::max(m2 - m1 * m1, 0.0));
  return p;
}

}  // namespace

LogQuadrature integrate_log_density(const std::function<double(double)>& log_f, double start,
                                    double scale, const QuadratureConfig& cfg) {
  cfg.validate();
  auto f = [&](double x) {
    const double v = log_f(x);
    return std::isnan(v) ? kNegInf : v;
  };
  const double mode = maximize_unimodal(f, start, scale);
  const double f_mode = f(mode);
  if (!std::isfinite(f_mode)) throw NumericalError("quadrature failure");

  const double h = 1e-3 * std::max(scale, 1e-6);
  const double d2 = (f(mode + h) - 2.0 * f_mode + f(mode - h)) / (h * h);
  double sd = (d2 < 0.0 && std::isfinite(d2)) ? 1.0 / std::sqrt(-d2) : scale;

  // Tail cut-off: points below this many nats under the mode are negligible.
  constexpr double kTailDrop = 40.0;
  const double halfwidth = cfg.log_range_halfwidth;
  auto interval = [&](double width) {
    double left = width, right = width;
    for (int i = 0; i < 80 && f(mode - left) > f_mode - kTailDrop; ++i) left *= 1.5;
    for (int i = 0; i < 80 && f(mode + right) > f_mode - kTailDrop; ++i) right *= 1.5;
    return std::pair{mode - left, mode + right};
  };

  auto [lo, hi] = interval(halfwidth * sd);
  Pass prev = run_pass(f, lo, hi, cfg.grid_size);
  Pass cur = prev;
  for (int r = 0; r < cfg.refinement; ++r) {
    const double width = halfwidth * (prev.sd > 0.0 ? prev.sd : sd);
    std::tie(lo, hi) = interval(width);
    cur = run_pass(f, lo, hi, cfg.grid_size);
    if (r + 1 < cfg.refinement) prev = cur;
  }
  auto rel_change = [](const Pass& a, const Pass& b) {
    return std::abs(std::expm1(a.q.log_integral - b.q.log_integral));
  };
  int n = cfg.grid_size;
  for (int extra = 0; cfg.refinement > 0 && rel_change(cur, prev) > 1e-6; ++extra) {
    if (extra == 4) throw NumericalError("quadrature failure");
    prev = cur;
    n = 2 * n - 1;
    cur = run_pass(f, lo, hi, n);
  }
  cur.q.mode = mode;
  cur.q.log_at_mode = f_mode;
  return std::move(cur.q);
}

double log_normal_pdf(double x, double mean, double precision) {
  if (!(precision > 0.0)) return kNegInf;
  const double d = x - mean;
  return 0.5 * std::log(precision / (2.0 * std::numbers::pi)) - 0.5 * precision * d * d;
}

double log_poisson_pmf(double y, double rate) {
  if (!(rate > 0.0)) return y == 0.0 ? 0.0 : kNegInf;
  return y * std::log(rate) - rate - std::lgamma(y + 1.0);
}

double log_gamma_pdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

}  // namespace mixmodal
