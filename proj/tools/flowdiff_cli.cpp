#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "flowdiff/data/config.hpp"
#include "flowdiff/data/pipeline.hpp"
#include "flowdiff/error.hpp"

namespace fs = std::filesystem;
using namespace flowdiff;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "run";
    bool quiet = false;
};

// An explicit --config wins; otherwise a run directory reuses its saved config.
data::RunConfig resolve_config(const CommonOptions& opts) {
    data::RunConfig config;
    const data::RunPaths paths{opts.out};
    if (!opts.config.empty()) {
        config = data::load_run_config(opts.config);
    } else if (fs::exists(paths.config())) {
        config = data::load_run_config(paths.config());
    }
    if (opts.seed) config.apply_seed(*opts.seed);
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-guided diffusion for urban flow generation"};
    app.require_subcommand(1);

    using Action = std::function<void(const data::RunConfig&, const data::RunPaths&)>;
    const std::map<std::string, std::pair<std::string, Action>> commands = {
        {"synth", {"write a synthetic grid city into <out>/data", data::run_synth}},
        {"build-kg", {"build the urban knowledge graph into <out>/kg",
                      [](const auto& c, const auto& p) { data::run_build_kg(c, p); }}},
        {"train-kge", {"train TuckER embeddings into <out>/kg/embeddings.bin",
                       [](const auto& c, const auto& p) { data::run_train_kge(c, p); }}},
        {"train", {"train the volume estimator and denoiser",
                   [](const auto& c, const auto& p) { data::run_train(c, p); }}},
        {"generate", {"sample flows for the target regions",
                      [](const auto& c, const auto& p) { data::run_generate(c, p); }}},
        {"evaluate", {"score generated samples against real days",
                      [](const auto& c, const auto& p) { data::run_evaluate(c, p); }}},
        {"predict", {"train and score masked-history prediction",
                     [](const auto& c, const auto& p) { data::run_predict(c, p); }}},
    };

    CommonOptions opts;
    std::string chosen;
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", opts.config, "RunConfig JSON file");
        sub->add_option("--seed", opts.seed, "seed for every stage");
        sub->add_option("--out", opts.out, "run directory")->capture_default_str();
        sub->add_flag("-q,--quiet", opts.quiet, "only log warnings and errors");
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    spdlog::set_level(opts.quiet ? spdlog::level::warn : spdlog::level::info);
    spdlog::set_pattern("%v");

    try {
        const auto config = resolve_config(opts);
        const data::RunPaths paths{opts.out};
        data::save_run_config(config, paths);
        commands.at(chosen).second(config, paths);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
