#include "mixmodal/datasets.hpp"

namespace mixmodal {

namespace {

// Velocities (km/s) of 82 galaxies in the Corona Borealis region, as shipped
// in R's MASS::galaxies. Stored in km/s and divided by 1000 on load.
constexpr int kGalaxies[] = {
    9172, 9350, 9483, 9558, 9775, 10227, 10406, 16084, 16170, 18419,
    18552, 18600, 18927, 19052, 19070, 19330, 19343, 19349, 19440, 19473,
    19529, 19541, 19547, 19663, 19846, 19856, 19863, 19914, 19918, 19973,
    19989, 20166, 20175, 20179, 20196, 20215, 20221, 20415, 20629, 20795,
    20821, 20846, 20875, 20986, 21137, 21492, 21701, 21814, 21921, 21960,
    22185, 22209, 22242, 22249, 22314, 22374, 22495, 22746, 22747, 22888,
    22914, 23206, 23241, 23263, 23484, 23538, 23542, 23666, 23706, 23711,
    24129, 24285, 24289, 24366, 24717, 24990, 25633, 26690, 26995, 32065,
    32789, 34279,
};

// Yearly number of major (magnitude >= 7) earthquakes worldwide, 1900-2006,
// the series used in the hidden Markov model literature.
constexpr int kEarthquakes[] = {
    13, 14, 8, 10, 16, 26, 32, 27, 18, 32,
    36, 24, 22, 23, 22, 18, 25, 21, 21, 14,
    8, 11, 14, 23, 18, 17, 19, 20, 22, 19,
    13, 26, 13, 14, 22, 24, 21, 22, 26, 21,
    23, 24, 27, 41, 31, 27, 35, 26, 28, 36,
    39, 21, 17, 22, 17, 19, 15, 34, 10, 15,
    22, 18, 15, 20, 15, 22, 19, 16, 30, 27,
    29, 23, 20, 16, 21, 21, 25, 16, 18, 15,
    18, 14, 10, 15, 8, 15, 6, 11, 8, 7,
    18, 16, 13, 12, 13, 20, 15, 16, 12, 18,
    15, 16, 13, 15, 16, 11, 11,
};

}  // namespace

std::optional<BuiltinDataset> builtin_dataset(std::string_view name) {
  if (name == "galaxies") {
    BuiltinDataset d{"galaxies", FamilySpec::gaussian(true), {}};
    for (int v : kGalaxies) d.data.values.push_back(v / 1000.0);
    return d;
  }
  if (name == "earthquakes") {
    BuiltinDataset d{"earthquakes", FamilySpec::poisson(PoissonPrior::LogNormal), {}};
    for (int v : kEarthquakes) d.data.values.push_back(v);
    return d;
  }
  return std::nullopt;
}

std::vector<std::string> builtin_dataset_names() { return {"galaxies", "earthquakes"}; }

}  // namespace mixmodal
