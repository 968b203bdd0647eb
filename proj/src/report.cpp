#include "mixmodal/report.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "mixmodal/data_io.hpp"
#include "mixmodal/errors.hpp"

namespace mixmodal {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json summary_json(const ParameterSummary& s) { return {{"mean", s.mean}, {"sd", s.sd}}; }

const char* estimator_name(AllocationPosterior::Estimator e) {
  return e == AllocationPosterior::Estimator::GibbsFrequency ? "gibbs_frequency" : "evidence_renormalized";
}

void write_density(const std::filesystem::path& path, const GridDensity& d) {
  constexpr int kPoints = 512;
  const double lo = d.quantile(1e-6), hi = d.quantile(1.0 - 1e-6);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "support,density\n";
  for (int i = 0; i < kPoints; ++i) {
    const double x = lo + (hi - lo) * i / (kPoints - 1);
    out << format_double(x) << ',' << format_double(d.density_at(x)) << '\n';
  }
}

}  // namespace

std::vector<int> key_to_labels(const AllocationKey& key) {
  std::vector<int> z;
  for (std::size_t i = 4; i < key.size(); ++i) z.push_back(static_cast<unsigned char>(key[i]) + 1);
  return z;
}

ordered_json report_to_json(const ModelComparisonReport& report, double runtime_ms) {
  ordered_json j;
  j["family"] = to_string(report.family);
  j["n"] = report.n;
  j["seed"] = report.seed;
  ordered_json rows = ordered_json::array();
  ordered_json diagnostics = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json comps = ordered_json::array();
    for (const auto& c : r.components) {
      ordered_json cj;
      cj["location"] = summary_json(c.location);
      if (c.precision) cj["precision"] = summary_json(*c.precision);
      cj["weight"] = summary_json(c.weight);
      comps.push_back(std::move(cj));
    }
    ordered_json row;
    row["model"] = r.K;
    row["log_evidence_I"] = r.log_evidence_I;
    row["log_evidence_chib_G"] = r.log_evidence_chib_G;
    row["log_evidence_chib_M"] = r.log_evidence_chib_M;
    row["prob_I"] = r.prob_I;
    row["prob_G"] = r.prob_G;
    row["prob_M"] = r.prob_M;
    row["components"] = std::move(comps);
    row["diagnostic_tv"] = r.diagnostic.tv_distance;
    row["seed"] = r.seed;
    row["runtime_ms"] = std::llround(r.runtime_ms);
    rows.push_back(std::move(row));

    ordered_json d;
    d["model"] = r.K;
    d["flagged"] = r.diagnostic.flagged;
    d["visited_allocations"] = r.visited;
    d["summary_estimator"] = estimator_name(r.summary_estimator);
    d["modal_allocation"] = key_to_labels(r.modal_allocation);
    diagnostics.push_back(std::move(d));
  }
  j["rows"] = std::move(rows);
  j["diagnostics"] = std::move(diagnostics);
  j["runtime_ms"] = std::llround(runtime_ms);
  return j;
}

std::vector<std::filesystem::path> write_density_csvs(const ModelComparisonReport& report,
                                                      const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& r : report.rows) {
    for (std::size_t c = 0; c < r.marginals.size(); ++c) {
      const std::string stem = "marginal_K" + std::to_string(r.K) + "_comp" + std::to_string(c + 1) + "_";
      const auto loc = dir / (stem + "location.csv");
      write_density(loc, r.marginals[c].location);
      written.push_back(loc);
      if (r.marginals[c].precision) {
        const auto prec = dir / (stem + "precision.csv");
        write_density(prec, *r.marginals[c].precision);
        written.push_back(prec);
      }
    }
  }
  return written;
}

ordered_json strip_runtime(ordered_json j) {
  if (j.is_object()) {
    j.erase("runtime_ms");
    for (auto& [k, v] : j.items()) v = strip_runtime(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_runtime(v);
  }
  return j;
}

}  // namespace mixmodal
