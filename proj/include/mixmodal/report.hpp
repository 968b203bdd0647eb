#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mixmodal/model_select.hpp"

namespace mixmodal {

/// report.json content. Every row carries exactly the keys model,
/// log_evidence_I, log_evidence_chib_G, log_evidence_chib_M, prob_I, prob_G,
/// prob_M, components, diagnostic_tv, seed and runtime_ms.
nlohmann::ordered_json report_to_json(const ModelComparisonReport& report, double runtime_ms);

/// Writes marginal_K{k}_comp{j}_{location|precision}.csv for every row and
/// component (512 evenly spaced points between the 1e-6 and 1 - 1e-6
/// quantiles of each model-averaged marginal). Returns the written paths.
std::vector<std::filesystem::path> write_density_csvs(const ModelComparisonReport& report,
                                                      const std::filesystem::path& dir);

/// Copy of a report with every "runtime_ms" member removed.
nlohmann::ordered_json strip_runtime(nlohmann::ordered_json j);

/// 1-based labels of an allocation key, e.g. [1, 1, 2].
std::vector<int> key_to_labels(const AllocationKey& key);

}  // namespace mixmodal
