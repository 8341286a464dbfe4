#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowdiff/metrics/metrics.hpp"

namespace flowdiff::metrics {

/// Loads generated samples from `samples_path`, aligns them with `real`
/// (raw days over `real_region_ids`) and writes metrics.json and
/// per_region.csv into `out_dir`. `config_echo` is embedded verbatim as JSON.
EvalReport evaluate_run(const std::filesystem::path& samples_path, const std::vector<FlowTensor>& real,
                        const std::vector<std::string>& real_region_ids, const std::filesystem::path& out_dir,
                        const std::string& config_echo = "{}");

std::string report_json(const EvalReport& report, const std::string& config_echo = "{}");
std::string per_region_csv(const EvalReport& report);

}  // namespace flowdiff::metrics
