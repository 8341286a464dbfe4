#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "flowdiff/data/config.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/data/dataset.hpp"
#include "flowdiff/data/synthetic.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/ukg/io.hpp"

namespace fs = std::filesystem;
using namespace flowdiff;
using namespace flowdiff::data;

namespace {

ukg::RegionGeometry square(const std::string& id, double x0) {
    ukg::Polygon p;
    p.outer = {{x0, 0.0}, {x0 + 0.01, 0.0}, {x0 + 0.01, 0.01}, {x0, 0.01}};
    return {id, {p}};
}

class IngestTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("flowdiff_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ukg::write_geojson({square("a", 0.0), square("b", 0.01)}, geo());
        write_split({"b"}, split());
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }
    fs::path geo() const { return path("regions.geojson"); }
    fs::path split() const { return path("split.txt"); }
    fs::path flows() const { return path("flows.csv"); }
    fs::path features() const { return path("features.csv"); }

    static void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

    // Region a carries hour h, region b carries 100 + scale * h, on one date.
    static std::string day_rows(const std::string& date, double scale = 1.0, int skip_hour = -1) {
        std::string out;
        for (int h = 0; h < 24; ++h) {
            if (h == skip_hour) continue;
            char ts[32];
            std::snprintf(ts, sizeof(ts), "%s %02d:00", date.c_str(), h);
            out += "a," + std::string(ts) + ",in," + std::to_string(h) + "\n";
            out += "b," + std::string(ts) + ",in," + std::to_string(100.0 + scale * h) + "\n";
        }
        return out;
    }

    Dataset load() const { return ingest(flows(), features(), geo(), split()); }

    fs::path dir_;
};

TEST_F(IngestTest, WeekendOnlyYieldsNoDays) {
    // 2024-01-06 and 2024-01-07 are a Saturday and Sunday.
    write(flows(), "region_id,timestamp,channel,value\n" + day_rows("2024-01-06") + day_rows("2024-01-07"));
    write(features(), "region_id,f\na,1\nb,2\n");
    const auto ds = load();
    EXPECT_TRUE(ds.days.empty());
    EXPECT_EQ(ds.region_ids.size(), 2u);
}

TEST_F(IngestTest, ConstantFeatureBecomesZeros) {
    write(flows(), "region_id,timestamp,channel,value\n" + day_rows("2024-01-08"));
    write(features(), "region_id,flat,slope\na,7,1\nb,7,3\n");
    const auto ds = load();
    EXPECT_EQ(ds.features(0, 0), 0.0);
    EXPECT_EQ(ds.features(1, 0), 0.0);
}

TEST_F(IngestTest, MatchesHandAssembledDataset) {
    write(flows(), "region_id,timestamp,channel,value\n" + day_rows("2024-01-08") + day_rows("2024-01-09", 2.0, 5));
    write(features(), "region_id,slope\nb,3\na,1\n");
    const auto ds = load();

    ASSERT_EQ(ds.region_ids, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ds.channels, (std::vector<std::string>{"in"}));
    // The second day misses hour 5 and is dropped.
    EXPECT_EQ(ds.day_labels, (std::vector<std::string>{"2024-01-08"}));
    EXPECT_EQ(ds.dropped_days, (std::vector<std::string>{"2024-01-09"}));
    ASSERT_EQ(ds.days.size(), 1u);
    for (std::size_t t = 0; t < 24; ++t) {
        EXPECT_EQ(ds.days[0](0, t, 0), static_cast<double>(t));
        EXPECT_EQ(ds.days[0](1, t, 0), 100.0 + static_cast<double>(t));
    }
    // Features 1 and 3: mean 2, population std 1.
    EXPECT_DOUBLE_EQ(ds.features(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(ds.features(1, 0), 1.0);
    EXPECT_EQ(ds.train_regions, (std::vector<std::size_t>{0}));
    EXPECT_EQ(ds.test_regions, (std::vector<std::size_t>{1}));
    // Train region a holds 0..23: mean 11.5, variance (24^2 - 1) / 12.
    EXPECT_DOUBLE_EQ(ds.flow_norm.mean, 11.5);
    EXPECT_NEAR(ds.flow_norm.std, std::sqrt(575.0 / 12.0), 1e-12);
}

TEST_F(IngestTest, FlowNormalizationIgnoresTestRegions) {
    write(features(), "region_id,f\na,1\nb,2\n");
    write(flows(), "region_id,timestamp,channel,value\n" + day_rows("2024-01-08"));
    const auto before = load();
    write(flows(), "region_id,timestamp,channel,value\n" + day_rows("2024-01-08", 50.0));
    const auto after = load();
    EXPECT_NE(before.days[0](1, 3, 0), after.days[0](1, 3, 0));
    EXPECT_EQ(before.flow_norm.mean, after.flow_norm.mean);
    EXPECT_EQ(before.flow_norm.std, after.flow_norm.std);
}

TEST_F(IngestTest, SerializationIsByteIdentical) {
    write(flows(), "region_id,timestamp,channel,value\n" + day_rows("2024-01-08") + day_rows("2024-01-10"));
    write(features(), "region_id,f\na,1\nb,2\n");
    EXPECT_EQ(load().to_json(), load().to_json());
}

TEST_F(IngestTest, UnknownFlowRegionIsAnError) {
    write(flows(), "region_id,timestamp,channel,value\nz,2024-01-08 00:00,in,1\n");
    write(features(), "region_id,f\na,1\nb,2\nz,3\n");
    try {
        load();
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
    }
}

TEST(Calendar, WeekdayAndLabel) {
    EXPECT_EQ(weekday_of(0), 3);  // 1970-01-01 was a Thursday
    EXPECT_EQ(weekday_of(parse_timestamp("2024-01-08 12:00")), 0);
    EXPECT_EQ(date_label(parse_timestamp("2024-01-08T23:00")), "2024-01-08");
}

TEST(Csv, QuotedFields) {
    const auto t = parse_csv("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0], "x,1");
    EXPECT_EQ(t.rows[0][1], "say \"hi\"");
    EXPECT_EQ(csv_field("x,1"), "\"x,1\"");
}

SyntheticConfig small_synth(double noise) {
    SyntheticConfig c;
    c.num_regions = 6;
    c.num_days = 3;
    c.seed = 11;
    c.noise = noise;
    return c;
}

TEST(Synthetic, SeedReproduces) {
    const auto a = make_synthetic(small_synth(0.05)), b = make_synthetic(small_synth(0.05));
    EXPECT_EQ(a.dataset().to_json(), b.dataset().to_json());
    EXPECT_EQ(a.truth_json(), b.truth_json());
    auto other = small_synth(0.05);
    other.seed = 12;
    EXPECT_NE(make_synthetic(other).truth_json(), a.truth_json());
}

TEST(Synthetic, NoiseFreeMatchesClosedForm) {
    const auto s = make_synthetic(small_synth(0.0));
    const auto& cfg = s.config;
    const double pi = 3.14159265358979323846;
    const int R = cfg.num_regions;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(R))));
    for (const auto& day : s.days) {
        for (int r = 0; r < R; ++r) {
            std::vector<int> nbrs;
            for (int j = 0; j < R; ++j) {
                if (std::abs(r % cols - j % cols) + std::abs(r / cols - j / cols) == 1) nbrs.push_back(j);
            }
            for (int t = 0; t < cfg.horizon; ++t) {
                for (int c = 0; c < cfg.channels; ++c) {
                    auto wave = [&](int q) { return std::sin(2.0 * pi * t / 24.0 + s.truth.phase[q] + c * pi / 2.0); };
                    double nb = 0.0;
                    for (int j : nbrs) nb += wave(j);
                    nb /= static_cast<double>(nbrs.size());
                    const double expected =
                        std::max(0.0, s.truth.amplitude[r] * (1.0 + cfg.modulation * wave(r) + cfg.coupling * nb));
                    EXPECT_NEAR(day(r, t, c), expected, 1e-9 * s.truth.amplitude[r]);
                }
            }
        }
    }
}

TEST(Synthetic, TrueVolumeEqualsAmplitude) {
    const auto s = make_synthetic(small_synth(0.0));
    for (int r = 0; r < s.config.num_regions; ++r) {
        for (int c = 0; c < s.config.channels; ++c) {
            double mean = 0.0;
            for (int t = 0; t < 24; ++t) mean += s.days[0](r, t, c) / 24.0;
            EXPECT_NEAR(mean, s.truth.amplitude[r], 1e-9 * s.truth.amplitude[r]);
            EXPECT_NEAR(s.truth.true_volume(r, c), s.truth.amplitude[r], 1e-12);
        }
    }
}

TEST(Synthetic, AmplitudesSpanConfiguredRange) {
    const auto s = make_synthetic(small_synth(0.05));
    const auto [lo, hi] = std::minmax_element(s.truth.amplitude.begin(), s.truth.amplitude.end());
    EXPECT_DOUBLE_EQ(*lo, s.config.amplitude_min);
    EXPECT_DOUBLE_EQ(*hi, s.config.amplitude_max);
}

TEST(Synthetic, WritesIngestableFiles) {
    const auto s = make_synthetic(small_synth(0.05));
    const auto dir = fs::temp_directory_path() / "flowdiff_data_synth";
    fs::remove_all(dir);
    write_synthetic(s, dir);
    const auto ds = ingest(dir / "flows.csv", dir / "features.csv", dir / "regions.geojson", dir / "split.txt");
    const auto direct = s.dataset();
    ASSERT_EQ(ds.days.size(), direct.days.size());
    EXPECT_EQ(ds.region_ids, direct.region_ids);
    EXPECT_EQ(ds.test_regions, direct.test_regions);
    for (std::size_t d = 0; d < ds.days.size(); ++d) {
        for (std::size_t i = 0; i < ds.days[d].size(); ++i) {
            EXPECT_NEAR(ds.days[d].values()[i], direct.days[d].values()[i], 1e-6);
        }
    }
    fs::remove_all(dir);
}

TEST(RunConfigParsing, DefaultsAndOverrides) {
    const auto c = parse_run_config(R"({"seed": 5, "train": {"epochs": 3, "alternation": "none"},
                                        "model": {"hidden": 16}})");
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.train.seed, 5u);
    EXPECT_EQ(c.kge.seed, 5u);
    EXPECT_EQ(c.train.epochs, 3);
    EXPECT_FALSE(c.train.alternation.has_value());
    EXPECT_EQ(c.model.denoiser.hidden, 16);
    EXPECT_EQ(c.diffusion.steps, RunConfig{}.diffusion.steps);
}

TEST(RunConfigParsing, RoundTrip) {
    auto c = parse_run_config(R"({"diffusion": {"steps": 50, "beta_end": 0.3}})");
    EXPECT_EQ(run_config_json(parse_run_config(run_config_json(c))), run_config_json(c));
}

TEST(RunConfigParsing, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_run_config(R"({"trian": {}})"), Error);
    EXPECT_THROW(parse_run_config(R"({"train": {"epocs": 1}})"), Error);
    EXPECT_THROW(parse_run_config(R"({"train": {"epochs": "many"}})"), Error);
    EXPECT_THROW(parse_run_config(R"({"diffusion": {"steps": 0}})"), Error);
    EXPECT_THROW(parse_run_config("[1, 2]"), Error);
    EXPECT_THROW(parse_run_config("{"), Error);
}

}  // namespace
