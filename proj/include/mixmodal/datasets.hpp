#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixmodal/core.hpp"

namespace mixmodal {

struct BuiltinDataset {
  std::string name;
  FamilySpec family;  // the family the dataset is usually analysed with
  Observations data;
};

/// "galaxies": 82 Corona Borealis galaxy velocities in 1000 km/s.
/// "earthquakes": 107 yearly counts of magnitude >= 7 earthquakes, 1900-2006.
std::optional<BuiltinDataset> builtin_dataset(std::string_view name);

std::vector<std::string> builtin_dataset_names();

}  // namespace mixmodal
