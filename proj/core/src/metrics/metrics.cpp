#include "flowdiff/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "flowdiff/error.hpp"

namespace flowdiff::metrics {
namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

double kernel(double sq, std::span<const double> bandwidths) {
    double k = 0.0;
    for (double sigma : bandwidths) k += std::exp(-sq / (2.0 * sigma * sigma));
    return k;
}

struct Accumulator {
    double abs = 0.0, sq = 0.0, smape = 0.0;
    std::size_t n = 0;

    void add(double a, double b) {
        const double d = a - b;
        abs += std::abs(d);
        sq += d * d;
        smape += 2.0 * std::abs(d) / (std::abs(a) + std::abs(b) + kSmapeGuard);
        ++n;
    }
    PointMetrics result() const {
        if (n == 0) fail("metrics", "no elements to compare");
        const double k = static_cast<double>(n);
        return {abs / k, std::sqrt(sq / k), smape / k};
    }
};

}  // namespace

FlowTensor mean_tensor(const std::vector<FlowTensor>& samples) {
    if (samples.empty()) fail("metrics", "empty sample set");
    FlowTensor out = samples.front();
    for (std::size_t s = 1; s < samples.size(); ++s) {
        require_same_shape(out, samples[s], "metrics");
        auto o = out.values();
        auto v = samples[s].values();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += v[i];
    }
    for (double& v : out.values()) v /= static_cast<double>(samples.size());
    return out;
}

PointMetrics compare(const FlowTensor& a, const FlowTensor& b) {
    require_same_shape(a, b, "metrics");
    Accumulator acc;
    for (std::size_t i = 0; i < a.size(); ++i) acc.add(a.values()[i], b.values()[i]);
    return acc.result();
}

PointMetrics compare_region(const FlowTensor& a, const FlowTensor& b, std::size_t region) {
    require_same_shape(a, b, "metrics");
    if (region >= a.regions()) fail("metrics", "region index out of range");
    Accumulator acc;
    for (std::size_t t = 0; t < a.horizon(); ++t) {
        for (std::size_t c = 0; c < a.channels(); ++c) acc.add(a(region, t, c), b(region, t, c));
    }
    return acc.result();
}

PointMetrics point_metrics(const std::vector<FlowTensor>& generated, const std::vector<FlowTensor>& real) {
    return compare(mean_tensor(generated), mean_tensor(real));
}

double mmd(const SampleVectors& x, const SampleVectors& y, std::span<const double> bandwidths) {
    const std::size_t n = x.size(), m = y.size();
    if (n < 2 || m < 2) fail("metrics", "MMD needs at least two samples per set");
    if (bandwidths.empty()) fail("metrics", "MMD needs at least one bandwidth");
    for (double s : bandwidths) {
        if (!(s > 0.0)) fail("metrics", "MMD bandwidths must be positive");
    }
    const std::size_t dim = x.front().size();
    for (const auto* set : {&x, &y}) {
        for (const auto& v : *set) {
            if (v.size() != dim) fail("metrics", "MMD sample vectors differ in length");
        }
    }
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) xx += kernel(squared_distance(x[i], x[j]), bandwidths);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j) yy += kernel(squared_distance(y[i], y[j]), bandwidths);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) xy += kernel(squared_distance(x[i], y[j]), bandwidths);
    }
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    return xx / (dn * (dn - 1.0)) - 2.0 * xy / (dn * dm) + yy / (dm * (dm - 1.0));
}

double median_pairwise_distance(const SampleVectors& pooled) {
    std::vector<double> d;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        for (std::size_t j = i + 1; j < pooled.size(); ++j) d.push_back(std::sqrt(squared_distance(pooled[i], pooled[j])));
    }
    if (d.empty()) return 0.0;
    std::sort(d.begin(), d.end());
    const std::size_t k = d.size() / 2;
    return d.size() % 2 == 1 ? d[k] : 0.5 * (d[k - 1] + d[k]);
}

std::vector<double> default_bandwidths(const SampleVectors& x, const SampleVectors& y) {
    SampleVectors pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    double median = median_pairwise_distance(pooled);
    if (!(median > 0.0)) median = 1.0;
    std::vector<double> out;
    for (int k = 0; k < 5; ++k) out.push_back(median * std::ldexp(1.0, k - 2));
    return out;
}

SampleVectors region_vectors(const std::vector<FlowTensor>& samples, std::size_t region) {
    SampleVectors out;
    for (const auto& s : samples) {
        if (region >= s.regions()) fail("metrics", "region index out of range");
        std::vector<double> v;
        v.reserve(s.horizon() * s.channels());
        for (std::size_t t = 0; t < s.horizon(); ++t) {
            for (std::size_t c = 0; c < s.channels(); ++c) v.push_back(s(region, t, c));
        }
        out.push_back(std::move(v));
    }
    return out;
}

double mmd_per_region(const std::vector<FlowTensor>& generated, const std::vector<FlowTensor>& real,
                      std::size_t region, const std::optional<std::vector<double>>& bandwidths) {
    const auto x = region_vectors(generated, region);
    const auto y = region_vectors(real, region);
    const auto bw = bandwidths ? *bandwidths : default_bandwidths(x, y);
    return mmd(x, y, bw);
}

EvalReport evaluate_samples(const std::vector<FlowTensor>& generated, const std::vector<FlowTensor>& real,
                            const std::vector<std::string>& region_ids,
                            const std::optional<std::vector<double>>& bandwidths) {
    if (region_ids.empty()) fail("metrics", "empty test split");
    if (generated.empty() || real.empty()) fail("metrics", "empty sample set");
    const auto gen_mean = mean_tensor(generated);
    const auto real_mean = mean_tensor(real);
    if (gen_mean.regions() != region_ids.size()) fail("metrics", "region ids do not match the samples");
    EvalReport report;
    const auto overall = compare(gen_mean, real_mean);
    report.mae = overall.mae;
    report.rmse = overall.rmse;
    report.smape = overall.smape;
    double mmd_sum = 0.0;
    for (std::size_t r = 0; r < region_ids.size(); ++r) {
        RegionReport rr;
        rr.region_id = region_ids[r];
        rr.point = compare_region(gen_mean, real_mean, r);
        rr.mmd = mmd_per_region(generated, real, r, bandwidths);
        mmd_sum += rr.mmd;
        report.regions.push_back(std::move(rr));
    }
    report.mmd = mmd_sum / static_cast<double>(region_ids.size());
    return report;
}

}  // namespace flowdiff::metrics
