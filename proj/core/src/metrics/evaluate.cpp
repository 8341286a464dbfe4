#include "flowdiff/metrics/evaluate.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/diffusion/sample_io.hpp"
#include "flowdiff/error.hpp"

namespace flowdiff::metrics {
namespace {

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

}  // namespace

std::string report_json(const EvalReport& report, const std::string& config_echo) {
    nlohmann::json j{{"mae", report.mae},
                     {"rmse", report.rmse},
                     {"smape", report.smape},
                     {"mmd", report.mmd},
                     {"regions", report.regions.size()},
                     {"config", nlohmann::json::parse(config_echo)}};
    return j.dump(2) + "\n";
}

std::string per_region_csv(const EvalReport& report) {
    std::string out = "region_id,mae,rmse,smape,mmd\n";
    for (const auto& r : report.regions) {
        out += data::csv_field(r.region_id) + ',' + num(r.point.mae) + ',' + num(r.point.rmse) + ',' +
               num(r.point.smape) + ',' + num(r.mmd) + '\n';
    }
    return out;
}

EvalReport evaluate_run(const std::filesystem::path& samples_path, const std::vector<FlowTensor>& real,
                        const std::vector<std::string>& real_region_ids, const std::filesystem::path& out_dir,
                        const std::string& config_echo) {
    if (real_region_ids.empty()) fail("metrics", "empty test split");
    if (!std::filesystem::exists(samples_path)) {
        fail("metrics", "samples not found at '" + samples_path.string() + "' (run generate first)");
    }
    const auto set = diffusion::read_samples(samples_path);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < set.meta.region_ids.size(); ++i) index[set.meta.region_ids[i]] = i;
    std::vector<std::size_t> pick;
    std::string missing;
    for (const auto& id : real_region_ids) {
        auto it = index.find(id);
        if (it == index.end()) {
            missing += (missing.empty() ? "" : ", ") + id;
        } else {
            pick.push_back(it->second);
        }
    }
    if (!missing.empty()) fail("metrics", "generated samples lack regions: " + missing);
    std::vector<FlowTensor> generated;
    for (const auto& s : set.samples) generated.push_back(s.select_regions(pick));
    const auto report = evaluate_samples(generated, real, real_region_ids);
    data::write_file_atomic(out_dir / "metrics.json", report_json(report, config_echo));
    data::write_file_atomic(out_dir / "per_region.csv", per_region_csv(report));
    return report;
}

}  // namespace flowdiff::metrics
