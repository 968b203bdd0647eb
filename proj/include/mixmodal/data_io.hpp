#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mixmodal/core.hpp"

namespace mixmodal {

/// Reads a CSV with a single numeric column named "y" (LF or CRLF line
/// endings, optional UTF-8 BOM, blank lines ignored). Throws ConfigError.
Observations read_observations_csv(const std::filesystem::path& path);

/// Writes the header "y" and one shortest round-trip decimal per row.
void write_observations_csv(const std::filesystem::path& path, const Observations& y);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

struct SimulationSpec {
  Family family = Family::Gaussian;
  std::vector<double> means;
  std::vector<double> precisions;  // Gaussian only; defaults to 1
  std::vector<std::size_t> sizes;
};

/// Component-by-component draws (all of component 1, then component 2, ...).
/// Deterministic given the seed. Throws ConfigError("empty data") when the
/// sizes sum to zero, and on mismatched or invalid parameters.
Observations simulate(const SimulationSpec& spec, std::uint64_t seed);

}  // namespace mixmodal
