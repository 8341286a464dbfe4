#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdiff/flow_tensor.hpp"

namespace flowdiff::metrics {

inline constexpr double kSmapeGuard = 1e-8;

struct PointMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double smape = 0.0;
};

/// Elementwise mean over a non-empty sample set.
FlowTensor mean_tensor(const std::vector<FlowTensor>& samples);

/// MAE, RMSE and SMAPE (2|a-b| / (|a|+|b|+guard)) between two tensors.
PointMetrics compare(const FlowTensor& a, const FlowTensor& b);
/// Same, restricted to one region.
PointMetrics compare_region(const FlowTensor& a, const FlowTensor& b, std::size_t region);

/// Metrics between the mean generated tensor and the mean real tensor.
PointMetrics point_metrics(const std::vector<FlowTensor>& generated, const std::vector<FlowTensor>& real);

using SampleVectors = std::vector<std::vector<double>>;

/// Unbiased MMD^2 with the kernel sum_k exp(-|x-y|^2 / (2 sigma_k^2)).
/// Needs at least two samples on each side.
double mmd(const SampleVectors& x, const SampleVectors& y, std::span<const double> bandwidths);

double median_pairwise_distance(const SampleVectors& pooled);

/// Five bandwidths median * 2^(k-2), k = 0..4, around the pooled median distance.
std::vector<double> default_bandwidths(const SampleVectors& x, const SampleVectors& y);

/// One vector per sample: region `region`'s horizon x channels flattened.
SampleVectors region_vectors(const std::vector<FlowTensor>& samples, std::size_t region);

/// MMD for one region; `bandwidths` defaults to default_bandwidths.
double mmd_per_region(const std::vector<FlowTensor>& generated, const std::vector<FlowTensor>& real,
                      std::size_t region, const std::optional<std::vector<double>>& bandwidths = std::nullopt);

struct RegionReport {
    std::string region_id;
    PointMetrics point;
    double mmd = 0.0;
};

struct EvalReport {
    double mae = 0.0;
    double rmse = 0.0;
    double smape = 0.0;
    double mmd = 0.0;  // mean over regions
    std::vector<RegionReport> regions;
};

/// Generated and real sets must share region order (`region_ids`).
EvalReport evaluate_samples(const std::vector<FlowTensor>& generated, const std::vector<FlowTensor>& real,
                            const std::vector<std::string>& region_ids,
                            const std::optional<std::vector<double>>& bandwidths = std::nullopt);

}  // namespace flowdiff::metrics
