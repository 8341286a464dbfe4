#include "flowdiff/data/pipeline.hpp"

#include <cmath>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/svg.hpp"
#include "flowdiff/data/synthetic.hpp"
#include "flowdiff/diffusion/sample_io.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/kge/io.hpp"
#include "flowdiff/metrics/evaluate.hpp"
#include "flowdiff/trainer/checkpoint.hpp"
#include "flowdiff/trainer/generate.hpp"
#include "flowdiff/trainer/predictive.hpp"
#include "flowdiff/ukg/io.hpp"
#include "flowdiff/ukg/subgraph.hpp"

namespace flowdiff::data {
namespace fs = std::filesystem;

namespace {

fs::path pick(const std::string& configured, const fs::path& fallback) {
    return configured.empty() ? fallback : fs::path(configured);
}

void require_file(const fs::path& p, const char* what) {
    if (!fs::exists(p)) {
        fail("data", std::string(what) + " not found at '" + p.string() + "' (run `synth` or set data paths)");
    }
}

ukg::UrbanKG ensure_kg(const RunConfig& config, const RunPaths& paths) {
    if (fs::exists(paths.kg_dir() / "triplets.tsv")) return ukg::read_kg(paths.kg_dir());
    return run_build_kg(config, paths);
}

kge::KGEmbeddingSet ensure_embeddings(const RunConfig& config, const RunPaths& paths) {
    if (!fs::exists(paths.embeddings())) run_train_kge(config, paths);
    return kge::read_embeddings(paths.embeddings());
}

std::optional<diffusion::ClipRange> clip_range(const RunConfig& config) {
    if (config.diffusion.clip_sigma <= 0.0) return std::nullopt;
    return diffusion::ClipRange{-config.diffusion.clip_sigma, config.diffusion.clip_sigma};
}

trainer::ModelConfig model_config(const RunConfig& config, const Dataset& ds, int kg_dim) {
    auto m = config.model;
    m.denoiser.flow_dims = static_cast<int>(ds.channels.size());
    m.denoiser.feature_dim = static_cast<int>(ds.features.cols());
    m.denoiser.kg_dim = kg_dim;
    return m;
}

trainer::CheckpointManifest manifest_for(const RunConfig& config, const Dataset& ds,
                                         const trainer::ModelConfig& model) {
    trainer::CheckpointManifest m;
    m.model = model;
    m.steps = config.diffusion.steps;
    m.beta_start = config.diffusion.beta_start;
    m.beta_end = config.diffusion.beta_end;
    m.flow_mean = ds.flow_norm.mean;
    m.flow_std = ds.flow_norm.std;
    m.clip_x0 = clip_range(config);
    m.channels = ds.channels;
    m.feature_names = ds.feature_names;
    m.seed = config.seed;
    return m;
}

void write_figures(const RunPaths& paths, const std::vector<std::string>& ids, const std::vector<FlowTensor>& gen,
                   const std::vector<FlowTensor>& real, const std::vector<std::string>& channels) {
    const auto gen_mean = metrics::mean_tensor(gen);
    const auto real_mean = real.empty() ? FlowTensor() : metrics::mean_tensor(real);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        std::vector<CurveSeries> series;
        const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
        for (std::size_t c = 0; c < gen_mean.channels(); ++c) {
            CurveSeries g{"generated " + channels[c], {}, colors[(2 * c) % 4]};
            for (std::size_t t = 0; t < gen_mean.horizon(); ++t) g.values.push_back(gen_mean(r, t, c));
            series.push_back(std::move(g));
            if (!real.empty()) {
                CurveSeries s{"real " + channels[c], {}, colors[(2 * c + 1) % 4]};
                for (std::size_t t = 0; t < real_mean.horizon(); ++t) s.values.push_back(real_mean(r, t, c));
                series.push_back(std::move(s));
            }
        }
        write_file_atomic(paths.figures() / (ids[r] + ".svg"), flow_curve_svg("region " + ids[r], series));
    }
}

}  // namespace

InputFiles resolve_inputs(const RunConfig& config, const RunPaths& paths) {
    const auto d = paths.data_dir();
    return {pick(config.data.flows, d / "flows.csv"),         pick(config.data.features, d / "features.csv"),
            pick(config.data.regions, d / "regions.geojson"), pick(config.data.pois, d / "pois.csv"),
            pick(config.data.checkins, d / "checkins.csv"),   pick(config.data.business_areas, d / "business_areas.geojson"),
            pick(config.data.split, d / "split.txt")};
}

Dataset load_dataset(const RunConfig& config, const RunPaths& paths) {
    const auto in = resolve_inputs(config, paths);
    require_file(in.flows, "flow CSV");
    require_file(in.features, "features CSV");
    require_file(in.regions, "region geometry");
    require_file(in.split, "split file");
    auto ds = ingest(in.flows, in.features, in.regions, in.split);
    if (ds.days.empty()) fail("data", "no usable weekday with complete hours");
    return ds;
}

std::vector<std::size_t> target_regions(const Dataset& dataset) {
    return dataset.test_regions.empty() ? dataset.train_regions : dataset.test_regions;
}

void save_run_config(const RunConfig& config, const RunPaths& paths) {
    write_file_atomic(paths.config(), run_config_json(config));
}

void run_synth(const RunConfig& config, const RunPaths& paths) {
    const auto data = make_synthetic(config.synth);
    write_synthetic(data, paths.data_dir());
    spdlog::info("synth: {} regions, {} days -> {}", data.region_ids.size(), data.days.size(),
                 paths.data_dir().string());
}

ukg::UrbanKG run_build_kg(const RunConfig& config, const RunPaths& paths) {
    const auto in = resolve_inputs(config, paths);
    require_file(in.regions, "region geometry");
    require_file(in.pois, "POI CSV");
    const auto inputs = ukg::read_kg_inputs(in.regions, in.pois, in.checkins, in.business_areas);
    ukg::KgBuildReport report;
    auto kg = ukg::build_urban_kg(inputs, config.kg, &report);
    if (!report.unassigned_pois.empty()) {
        spdlog::warn("build-kg: {} POI(s) fall outside every region", report.unassigned_pois.size());
    }
    if (!report.regions_without_pois.empty()) {
        spdlog::warn("build-kg: {} region(s) have no POIs", report.regions_without_pois.size());
    }
    ukg::write_kg(kg, paths.kg_dir());
    spdlog::info("build-kg: {} entities, {} facts", kg.entities().size(), kg.facts().size());
    return kg;
}

kge::KGEmbeddingSet run_train_kge(const RunConfig& config, const RunPaths& paths) {
    const auto kg = ensure_kg(config, paths);
    const auto result = kge::train_kg_embeddings(kg, config.kge);
    if (!result.embeddings.all_finite()) fail("kge", "training produced non-finite embeddings");
    kge::write_embeddings(result.embeddings, paths.embeddings());
    std::string log = "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        log += std::to_string(e + 1) + "," + fmt::format("{:.17g}", result.epoch_losses[e]) + "\n";
    }
    write_file_atomic(paths.kge_log(), log);
    if (!result.epoch_losses.empty()) {
        spdlog::info("train-kge: final loss {:.6f} after {} epochs", result.epoch_losses.back(),
                     result.epoch_losses.size());
    }
    return result.embeddings;
}

trainer::TrainResult run_train(const RunConfig& config, const RunPaths& paths) {
    const auto ds = load_dataset(config, paths);
    const auto kg = ensure_kg(config, paths);
    const auto embs = ensure_embeddings(config, paths);
    const auto ids = ds.ids(ds.train_regions);

    trainer::TrainingData data;
    data.days = ds.normalized_days(ds.train_regions);
    data.features = ds.features_of(ds.train_regions);
    data.kg = kge::region_embedding_matrix(embs, ids);
    data.graph = ukg::extract_region_subgraph(kg, ids);

    const auto mcfg = model_config(config, ds, embs.dim);
    auto model = trainer::make_model(mcfg, config.seed);
    const auto schedule = config.schedule();
    trainer::Trainer trainer(model, data, schedule, config.train);
    auto result = trainer.run();
    write_file_atomic(paths.train_log(), result.log.to_csv());
    if (result.aborted) spdlog::warn("train: stopped early ({}); keeping the last finite weights", result.abort_reason);
    trainer::save_checkpoint(paths.checkpoint(), manifest_for(config, ds, mcfg), model);
    spdlog::info("train: {} epochs logged, checkpoint {}", result.log.records.size(), paths.checkpoint().string());
    return result;
}

std::vector<FlowTensor> run_generate(const RunConfig& config, const RunPaths& paths) {
    if (!fs::exists(paths.checkpoint())) fail("trainer", "checkpoint not found at '" + paths.checkpoint().string() + "'");
    const auto checkpoint = trainer::load_checkpoint(paths.checkpoint());
    if (checkpoint.manifest.mode != "generative") fail("trainer", "checkpoint is not a generative model");
    const auto ds = load_dataset(config, paths);
    if (checkpoint.manifest.feature_names != ds.feature_names || checkpoint.manifest.channels != ds.channels) {
        fail("trainer", "checkpoint features or channels do not match the dataset");
    }
    const auto kg = ensure_kg(config, paths);
    const auto embs = ensure_embeddings(config, paths);
    const auto regions = target_regions(ds);
    const auto ids = ds.ids(regions);

    trainer::GenerationInputs inputs;
    inputs.features = ds.features_of(regions);
    inputs.kg = kge::region_embedding_matrix(embs, ids);
    inputs.graph = ukg::extract_region_subgraph(kg, ids);
    inputs.horizon = ds.horizon();
    const std::size_t n = config.sampling.num_samples > 0 ? static_cast<std::size_t>(config.sampling.num_samples)
                                                          : ds.days.size();
    auto samples = trainer::generate_for_regions(checkpoint, inputs, n, config.seed,
                                                 static_cast<std::size_t>(config.sampling.batch_size));

    diffusion::SampleMetadata meta;
    meta.seed = config.seed;
    meta.steps = checkpoint.manifest.steps;
    meta.beta_start = checkpoint.manifest.beta_start;
    meta.beta_end = checkpoint.manifest.beta_end;
    meta.flow_mean = checkpoint.manifest.flow_mean;
    meta.flow_std = checkpoint.manifest.flow_std;
    meta.region_ids = ids;
    meta.channels = ds.channels;
    meta.space = FlowSpace::Raw;
    diffusion::write_samples(paths.samples(), samples, meta);
    write_figures(paths, ids, samples, ds.raw_days(regions), ds.channels);
    spdlog::info("generate: {} samples for {} regions -> {}", samples.size(), ids.size(), paths.samples().string());
    return samples;
}

metrics::EvalReport run_evaluate(const RunConfig& config, const RunPaths& paths) {
    if (!fs::exists(paths.samples())) fail("metrics", "samples not found at '" + paths.samples().string() + "'");
    const auto ds = load_dataset(config, paths);
    const auto regions = target_regions(ds);
    auto report = metrics::evaluate_run(paths.samples(), ds.raw_days(regions), ds.ids(regions), paths.out,
                                        run_config_json(config));
    spdlog::info("evaluate: MAE {:.4f} RMSE {:.4f} SMAPE {:.4f} MMD {:.4f}", report.mae, report.rmse, report.smape,
                 report.mmd);
    return report;
}

PredictReport run_predict(const RunConfig& config, const RunPaths& paths) {
    const auto ds = load_dataset(config, paths);
    if (ds.days.size() < 2) fail("trainer", "prediction needs at least two days");
    const auto kg = ensure_kg(config, paths);
    const auto embs = ensure_embeddings(config, paths);
    std::vector<std::size_t> all(ds.region_ids.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto days = ds.normalized_days(all);
    const std::size_t n_train = std::max<std::size_t>(1, std::min(days.size() - 1, (days.size() * 4 + 4) / 5));
    const std::vector<FlowTensor> train_days(days.begin(), days.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<FlowTensor> test_days(days.begin() + static_cast<std::ptrdiff_t>(n_train), days.end());

    const int history = config.predict.windows.history;
    trainer::PredictiveData data;
    data.windows = trainer::make_windows(train_days, config.predict.windows);
    data.kg = kge::region_embedding_matrix(embs, ds.region_ids);
    data.graph = ukg::extract_region_subgraph(kg, ds.region_ids);
    data.history = history;
    auto test_windows = trainer::make_windows(test_days, config.predict.windows);
    if (data.windows.empty() || test_windows.empty()) fail("trainer", "not enough days for prediction windows");

    auto mcfg = model_config(config, ds, embs.dim);
    mcfg.use_guide = false;
    mcfg.denoiser.condition = denoiser::ConditionKind::MaskedSequence;
    mcfg.denoiser.kg_in_condition = false;
    auto model = trainer::make_model(mcfg, config.seed);
    const auto schedule = config.schedule();
    auto tcfg = config.train;
    tcfg.epochs = config.predict.epochs;
    trainer::PredictiveTrainer trainer(model, data, schedule, tcfg);
    const auto result = trainer.run();
    write_file_atomic(paths.predict_log(), result.log.to_csv());

    auto manifest = manifest_for(config, ds, mcfg);
    manifest.mode = "predictive";
    manifest.history = history;
    manifest.future = config.predict.windows.future;
    trainer::save_checkpoint(paths.predict_checkpoint(), manifest, model);

    diffusion::SamplerOptions options;
    options.clip_x0 = clip_range(config);
    options.batch_size = static_cast<std::size_t>(config.sampling.batch_size);
    PredictReport report;
    report.train_windows = data.windows.size();
    report.test_windows = test_windows.size();
    for (std::size_t w = 0; w < test_windows.size(); ++w) {
        const auto pred = trainer::predict_window(model, schedule, test_windows[w], history, data.kg, data.graph,
                                                  static_cast<std::size_t>(config.predict.samples),
                                                  config.seed + w, options);
        report.mae += trainer::future_mae(pred, test_windows[w], history);
        report.baseline_mae +=
            trainer::future_mae(trainer::copy_last_prediction(test_windows[w], history), test_windows[w], history);
    }
    const double scale = ds.flow_norm.std / static_cast<double>(test_windows.size());
    report.mae *= scale;
    report.baseline_mae *= scale;

    nlohmann::json j;
    j["mae"] = report.mae;
    j["copy_last_mae"] = report.baseline_mae;
    j["train_windows"] = report.train_windows;
    j["test_windows"] = report.test_windows;
    j["history"] = history;
    j["future"] = config.predict.windows.future;
    write_file_atomic(paths.predict_metrics(), j.dump(2) + "\n");
    spdlog::info("predict: MAE {:.4f} vs copy-last {:.4f} over {} windows", report.mae, report.baseline_mae,
                 report.test_windows);
    return report;
}

}  // namespace flowdiff::data
