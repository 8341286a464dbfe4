#include "flowdiff/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/ukg/io.hpp"

namespace flowdiff::data {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::int64_t kFirstMonday = 1704067200;  // 2024-01-01 00:00 UTC
const std::vector<std::string> kCategories = {"residential", "office", "retail", "food", "leisure"};

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (num_regions < 2) fail("data", "synthetic data needs at least 2 regions");
    if (horizon < 1 || num_days < 1) fail("data", "synthetic horizon and day count must be positive");
    if (!(amplitude_min > 0.0) || amplitude_max < amplitude_min) fail("data", "invalid synthetic amplitude range");
    if (noise < 0.0 || modulation < 0.0 || coupling < 0.0) fail("data", "synthetic scales must be non-negative");
    if (ar_coefficient < 0.0 || ar_coefficient >= 1.0) fail("data", "ar_coefficient must lie in [0, 1)");
    if (channels < 1 || noise_features < 0 || pois_per_region < 0 || users < 0 || checkins_per_user < 0) {
        fail("data", "invalid synthetic counts");
    }
    if (test_regions >= num_regions) fail("data", "test split must leave training regions");
    if (!(cell_degrees > 0.0)) fail("data", "cell_degrees must be positive");
}

SyntheticData make_synthetic(const SyntheticConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticData out;
    out.config = config;
    const auto R = static_cast<std::size_t>(config.num_regions);
    const auto T = static_cast<std::size_t>(config.horizon);
    const auto F = static_cast<std::size_t>(config.channels);
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(R))));
    const double cell = config.cell_degrees;
    const double lon0 = 116.30, lat0 = 39.90;

    for (std::size_t i = 0; i < R; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "r%02zu", i);
        out.region_ids.emplace_back(id);
        const double x = lon0 + cell * static_cast<double>(static_cast<int>(i) % cols);
        const double y = lat0 + cell * static_cast<double>(static_cast<int>(i) / cols);
        ukg::Polygon poly;
        poly.outer = {{x, y}, {x + cell, y}, {x + cell, y + cell}, {x, y + cell}};
        out.geometry.push_back({id, {poly}});
    }
    out.truth.neighbors.assign(R, {});
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < R; ++j) {
            const int ci = static_cast<int>(i) % cols, ri = static_cast<int>(i) / cols;
            const int cj = static_cast<int>(j) % cols, rj = static_cast<int>(j) / cols;
            if (std::abs(ci - cj) + std::abs(ri - rj) == 1) out.truth.neighbors[i].push_back(static_cast<int>(j));
        }
    }

    std::vector<double> amplitudes(R);
    for (std::size_t i = 0; i < R; ++i) {
        const double frac = R == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(R - 1);
        amplitudes[i] = config.amplitude_min * std::pow(config.amplitude_max / config.amplitude_min, frac);
    }
    std::shuffle(amplitudes.begin(), amplitudes.end(), rng);
    out.truth.amplitude = amplitudes;
    for (std::size_t i = 0; i < R; ++i) out.truth.phase.push_back(kTwoPi * unit(rng));

    out.feature_names = {"amplitude", "phase_cos", "phase_sin"};
    for (int k = 0; k < config.noise_features; ++k) out.feature_names.push_back("noise_" + std::to_string(k));
    out.raw_features.resize(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(out.feature_names.size()));
    for (std::size_t i = 0; i < R; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out.raw_features(r, 0) = amplitudes[i];
        out.raw_features(r, 1) = std::cos(out.truth.phase[i]);
        out.raw_features(r, 2) = std::sin(out.truth.phase[i]);
        for (int k = 0; k < config.noise_features; ++k) out.raw_features(r, 3 + k) = normal(rng);
    }

    if (F == 2) {
        out.channels = {"inflow", "outflow"};
    } else {
        for (std::size_t c = 0; c < F; ++c) out.channels.push_back("channel_" + std::to_string(c));
    }

    auto wave = [&](std::size_t region, std::size_t t, std::size_t c) {
        return std::sin(kTwoPi * static_cast<double>(t) / 24.0 + out.truth.phase[region] +
                        static_cast<double>(c) * std::numbers::pi / 2.0);
    };
    std::vector<double> eta(R * F);
    for (auto& e : eta) e = normal(rng);
    const double rho = config.ar_coefficient;
    const double innovation = std::sqrt(1.0 - rho * rho);
    std::int64_t day_start = kFirstMonday;
    for (int d = 0; d < config.num_days; ++d) {
        while (weekday_of(day_start) >= 5) day_start += 86400;
        FlowTensor day(R, T, F, 0.0, FlowSpace::Raw);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t r = 0; r < R; ++r) {
                for (std::size_t c = 0; c < F; ++c) {
                    double nb = 0.0;
                    const auto& nbrs = out.truth.neighbors[r];
                    for (int j : nbrs) nb += wave(static_cast<std::size_t>(j), t, c);
                    if (!nbrs.empty()) nb /= static_cast<double>(nbrs.size());
                    double& e = eta[r * F + c];
                    if (d > 0 || t > 0) e = rho * e + innovation * normal(rng);
                    const double base = amplitudes[r] * (1.0 + config.modulation * wave(r, t, c) + config.coupling * nb);
                    day(r, t, c) = std::max(0.0, base + config.noise * amplitudes[r] * e);
                }
            }
        }
        out.days.push_back(std::move(day));
        out.day_labels.push_back(date_label(day_start));
        out.day_starts.push_back(day_start);
        day_start += 86400;
    }

    out.truth.true_volume.resize(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(F));
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < F; ++c) {
            double mean = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                double nb = 0.0;
                for (int j : out.truth.neighbors[r]) nb += wave(static_cast<std::size_t>(j), t, c);
                if (!out.truth.neighbors[r].empty()) nb /= static_cast<double>(out.truth.neighbors[r].size());
                mean += amplitudes[r] * (1.0 + config.modulation * wave(r, t, c) + config.coupling * nb);
            }
            out.truth.true_volume(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                mean / static_cast<double>(T);
        }
    }

    const int test_count = config.test_regions < 0 ? config.num_regions / 4 : config.test_regions;
    std::vector<std::size_t> order(R);
    for (std::size_t i = 0; i < R; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(test_count));
    std::sort(order.begin(), order.end());
    for (auto i : order) out.test_ids.push_back(out.region_ids[i]);

    std::vector<std::string> brands = {"", "", "brand_a", "brand_b", "brand_c"};
    for (std::size_t r = 0; r < R; ++r) {
        const auto& outer = out.geometry[r].polygons[0].outer;
        const auto quadrant = static_cast<std::size_t>(out.truth.phase[r] / (std::numbers::pi / 2.0)) % 4;
        for (int k = 0; k < config.pois_per_region; ++k) {
            ukg::Poi poi;
            poi.id = "p" + std::to_string(out.pois.size());
            poi.location = {outer[0].x + cell * (0.1 + 0.8 * unit(rng)), outer[0].y + cell * (0.1 + 0.8 * unit(rng))};
            const std::size_t pick = unit(rng) < 0.6 ? quadrant : static_cast<std::size_t>(unit(rng) * 5.0) % 5;
            poi.category = kCategories[pick];
            poi.brand = brands[static_cast<std::size_t>(unit(rng) * 5.0) % 5];
            out.pois.push_back(std::move(poi));
        }
    }
    if (!out.pois.empty()) {
        for (int u = 0; u < config.users; ++u) {
            std::int64_t ts = kFirstMonday + static_cast<std::int64_t>(unit(rng) * 86400.0 * 5.0);
            for (int k = 0; k < config.checkins_per_user; ++k) {
                const auto p = static_cast<std::size_t>(unit(rng) * static_cast<double>(out.pois.size())) % out.pois.size();
                out.checkins.push_back({"u" + std::to_string(u), out.pois[p].id, ts});
                ts += 1800 + static_cast<std::int64_t>(unit(rng) * 4.0 * 3600.0);
            }
        }
    }
    return out;
}

Dataset SyntheticData::dataset() const {
    return assemble_dataset(region_ids, feature_names, raw_features, channels, day_labels, days, test_ids);
}

std::string SyntheticData::truth_json() const {
    nlohmann::json j;
    j["seed"] = config.seed;
    j["region_ids"] = region_ids;
    j["amplitude"] = truth.amplitude;
    j["phase"] = truth.phase;
    std::vector<std::vector<double>> volume;
    for (Eigen::Index r = 0; r < truth.true_volume.rows(); ++r) {
        volume.emplace_back(truth.true_volume.row(r).data(), truth.true_volume.row(r).data() + truth.true_volume.cols());
    }
    j["true_volume"] = volume;
    j["channels"] = channels;
    j["test_ids"] = test_ids;
    return j.dump(2) + "\n";
}

void write_flow_csv(const std::vector<std::string>& region_ids, const std::vector<std::string>& channels,
                    const std::vector<std::int64_t>& day_starts, const std::vector<FlowTensor>& days,
                    const std::filesystem::path& path) {
    if (day_starts.size() != days.size()) fail("data", "day starts do not match days");
    std::string text = "region_id,timestamp,channel,value\n";
    for (std::size_t d = 0; d < days.size(); ++d) {
        const auto& day = days[d];
        if (day.regions() != region_ids.size() || day.channels() != channels.size()) {
            fail("data", "flow tensor does not match region or channel names");
        }
        for (std::size_t r = 0; r < day.regions(); ++r) {
            for (std::size_t t = 0; t < day.horizon(); ++t) {
                const std::int64_t ts = day_starts[d] + static_cast<std::int64_t>(t) * 3600;
                char stamp[32];
                std::snprintf(stamp, sizeof(stamp), "%s %02lld:00", date_label(ts).c_str(),
                              static_cast<long long>((ts % 86400) / 3600));
                for (std::size_t c = 0; c < day.channels(); ++c) {
                    text += csv_field(region_ids[r]) + "," + stamp + "," + csv_field(channels[c]) + "," +
                            fmt_double(day(r, t, c)) + "\n";
                }
            }
        }
    }
    write_file_atomic(path, text);
}

void write_features_csv(const std::vector<std::string>& region_ids, const std::vector<std::string>& names,
                        const Matrix& features, const std::filesystem::path& path) {
    std::string text = "region_id";
    for (const auto& n : names) text += "," + csv_field(n);
    text += "\n";
    for (std::size_t r = 0; r < region_ids.size(); ++r) {
        text += csv_field(region_ids[r]);
        for (Eigen::Index c = 0; c < features.cols(); ++c) {
            text += "," + fmt_double(features(static_cast<Eigen::Index>(r), c));
        }
        text += "\n";
    }
    write_file_atomic(path, text);
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
    if (data.config.horizon != 24) fail("data", "only 24-hour synthetic days can be written as hourly CSV");
    write_flow_csv(data.region_ids, data.channels, data.day_starts, data.days, dir / "flows.csv");
    write_features_csv(data.region_ids, data.feature_names, data.raw_features, dir / "features.csv");
    ukg::write_geojson(data.geometry, dir / "regions.geojson");
    ukg::write_pois(data.pois, dir / "pois.csv");
    ukg::write_checkins(data.checkins, dir / "checkins.csv");
    write_split(data.test_ids, dir / "split.txt");
    write_file_atomic(dir / "ground_truth.json", data.truth_json());
}

}  // namespace flowdiff::data
