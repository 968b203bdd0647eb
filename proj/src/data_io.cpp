#include "mixmodal/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "mixmodal/errors.hpp"
#include "mixmodal/rng.hpp"

namespace mixmodal {

namespace {

std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

Observations read_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file: " + path.string());
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  Observations y;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "y" && line != "\"y\"") throw ConfigError("data file must have a single column named \"y\"");
      header_seen = true;
      continue;
    }
    if (line.find(',') != std::string::npos) throw ConfigError("data file must have a single column");
    double v = 0.0;
    const char* first = line.data();
    const char* last = line.data() + line.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      throw ConfigError("line " + std::to_string(line_no) + ": not a number: " + line);
    y.values.push_back(v);
  }
  if (!header_seen) throw ConfigError("data file must have a single column named \"y\"");
  return y;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ConfigError("cannot format number");
  return std::string(buf, ptr);
}

void write_observations_csv(const std::filesystem::path& path, const Observations& y) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "y\n";
  for (double v : y.values) out << format_double(v) << '\n';
  if (!out) throw ConfigError("cannot write " + path.string());
}

Observations simulate(const SimulationSpec& spec, std::uint64_t seed) {
  const std::size_t K = spec.means.size();
  if (K == 0 || spec.sizes.size() != K) throw ConfigError("simulation needs one size per component mean");
  std::vector<double> precisions = spec.precisions;
  if (spec.family == Family::Gaussian) {
    if (precisions.empty()) precisions.assign(K, 1.0);
    if (precisions.size() != K) throw ConfigError("simulation needs one precision per component");
    for (double p : precisions)
      if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("precisions must be positive");
  }
  std::size_t total = 0;
  for (std::size_t j = 0; j < K; ++j) {
    if (!std::isfinite(spec.means[j])) throw ConfigError("means must be finite");
    if (spec.family == Family::Poisson && !(spec.means[j] > 0.0)) throw ConfigError("Poisson means must be positive");
    total += spec.sizes[j];
  }
  if (total == 0) throw ConfigError("empty data");

  CounterRng rng(seed);
  Observations y;
  y.values.reserve(total);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t i = 0; i < spec.sizes[j]; ++i) {
      if (spec.family == Family::Gaussian) {
        boost::random::normal_distribution<double> nd(spec.means[j], 1.0 / std::sqrt(precisions[j]));
        y.values.push_back(nd(rng));
      } else {
        boost::random::poisson_distribution<long long, double> pd(spec.means[j]);
        y.values.push_back(static_cast<double>(pd(rng)));
      }
    }
  }
  return y;
}

}  // namespace mixmodal
