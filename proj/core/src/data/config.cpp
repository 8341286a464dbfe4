#include "flowdiff/data/config.hpp"

#include <json.hpp>

#include "flowdiff/data/csv.hpp"
#include "flowdiff/error.hpp"

namespace flowdiff::data {
namespace {

using nlohmann::json;

// One table drives both directions so the key sets cannot drift apart.
template <class Visitor>
void visit(RunConfig& c, Visitor&& v) {
    v("seed", c.seed);
    v("data.flows", c.data.flows);
    v("data.features", c.data.features);
    v("data.regions", c.data.regions);
    v("data.pois", c.data.pois);
    v("data.checkins", c.data.checkins);
    v("data.business_areas", c.data.business_areas);
    v("data.split", c.data.split);
    v("synth.num_regions", c.synth.num_regions);
    v("synth.num_days", c.synth.num_days);
    v("synth.amplitude_min", c.synth.amplitude_min);
    v("synth.amplitude_max", c.synth.amplitude_max);
    v("synth.modulation", c.synth.modulation);
    v("synth.coupling", c.synth.coupling);
    v("synth.noise", c.synth.noise);
    v("synth.ar_coefficient", c.synth.ar_coefficient);
    v("synth.noise_features", c.synth.noise_features);
    v("synth.channels", c.synth.channels);
    v("synth.test_regions", c.synth.test_regions);
    v("synth.pois_per_region", c.synth.pois_per_region);
    v("synth.users", c.synth.users);
    v("synth.checkins_per_user", c.synth.checkins_per_user);
    v("kg.nearby_km", c.kg.nearby_km);
    v("kg.similar_top_k", c.kg.similar_top_k);
    v("kg.competitive_km", c.kg.checkin.competitive_km);
    v("kg.checkin_window_hours", c.kg.checkin.window_hours);
    v("kge.dim", c.kge.dim);
    v("kge.epochs", c.kge.epochs);
    v("kge.batch_size", c.kge.batch_size);
    v("kge.learning_rate", c.kge.learning_rate);
    v("kge.label_smoothing", c.kge.label_smoothing);
    v("kge.hidden_dropout", c.kge.hidden_dropout);
    v("diffusion.steps", c.diffusion.steps);
    v("diffusion.beta_start", c.diffusion.beta_start);
    v("diffusion.beta_end", c.diffusion.beta_end);
    v("diffusion.clip_sigma", c.diffusion.clip_sigma);
    v("model.hidden", c.model.denoiser.hidden);
    v("model.layers", c.model.denoiser.layers);
    v("model.heads", c.model.denoiser.heads);
    v("model.ffn_multiplier", c.model.denoiser.ffn_multiplier);
    v("model.use_spatial", c.model.denoiser.use_spatial);
    v("model.degree_normalize", c.model.denoiser.degree_normalize);
    v("model.kg_in_condition", c.model.denoiser.kg_in_condition);
    v("model.volume_hidden", c.model.volume_hidden);
    v("model.use_guide", c.model.use_guide);
    v("train.pretrain_epochs", c.train.pretrain_epochs);
    v("train.alternation", c.train.alternation);
    v("train.learning_rate", c.train.learning_rate);
    v("train.epochs", c.train.epochs);
    v("train.batch_size", c.train.batch_size);
    v("train.max_grad_norm", c.train.max_grad_norm);
    v("sampling.num_samples", c.sampling.num_samples);
    v("sampling.batch_size", c.sampling.batch_size);
    v("predict.history", c.predict.windows.history);
    v("predict.future", c.predict.windows.future);
    v("predict.stride", c.predict.windows.stride);
    v("predict.samples", c.predict.samples);
    v("predict.epochs", c.predict.epochs);
}

json::json_pointer pointer(std::string_view dotted) {
    std::string p = "/";
    for (char ch : dotted) p += ch == '.' ? '/' : ch;
    return json::json_pointer(p);
}

template <class T>
void read_value(const json& j, const std::string& key, T& out) {
    try {
        if constexpr (std::is_same_v<T, std::optional<int>>) {
            if (j.is_string()) {
                if (j.get<std::string>() != "none") fail("config", key + ": expected an integer or \"none\"");
                out.reset();
            } else if (j.is_null()) {
                out.reset();
            } else {
                out = j.get<int>();
            }
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!j.is_boolean()) fail("config", key + ": expected a boolean");
            out = j.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!j.is_string()) fail("config", key + ": expected a string");
            out = j.get<std::string>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!j.is_number_integer()) fail("config", key + ": expected an integer");
            out = j.get<T>();
        } else {
            if (!j.is_number()) fail("config", key + ": expected a number");
            out = j.get<T>();
        }
    } catch (const json::exception& e) {
        fail("config", key + ": " + e.what());
    }
}

void check_known(const json& given, const json& known, const std::string& prefix) {
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!known.contains(it.key())) fail("config", "unknown key '" + key + "'");
        if (known[it.key()].is_object()) {
            if (!it.value().is_object()) fail("config", key + ": expected an object");
            check_known(it.value(), known[it.key()], key);
        }
    }
}

json to_json(const RunConfig& config) {
    RunConfig copy = config;
    json j = json::object();
    visit(copy, [&](const char* key, auto& value) {
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::optional<int>>) {
            j[pointer(key)] = value ? json(*value) : json("none");
        } else {
            j[pointer(key)] = value;
        }
    });
    return j;
}

}  // namespace

void RunConfig::validate() const {
    synth.validate();
    if (kg.nearby_km < 0.0 || kg.similar_top_k < 0) fail("config", "kg thresholds must be non-negative");
    if (kge.dim < 1 || kge.epochs < 0 || kge.batch_size < 1 || !(kge.learning_rate > 0.0)) {
        fail("config", "invalid kge settings");
    }
    if (kge.label_smoothing < 0.0 || kge.label_smoothing >= 1.0 || kge.hidden_dropout < 0.0 ||
        kge.hidden_dropout >= 1.0) {
        fail("config", "kge label_smoothing and hidden_dropout must lie in [0, 1)");
    }
    schedule();
    if (diffusion.clip_sigma < 0.0) fail("config", "clip_sigma must be non-negative");
    auto denoiser = model.denoiser;
    denoiser.kg_dim = kge.dim;
    denoiser.validate();
    if (model.volume_hidden < 1) fail("config", "volume_hidden must be positive");
    train.validate();
    if (sampling.num_samples < 0 || sampling.batch_size < 1) fail("config", "invalid sampling settings");
    if (predict.windows.history < 1 || predict.windows.future < 1 || predict.windows.stride < 1 ||
        predict.samples < 1 || predict.epochs < 0) {
        fail("config", "invalid predict settings");
    }
}

void RunConfig::apply_seed(std::uint64_t value) {
    seed = value;
    synth.seed = value;
    kge.seed = value;
    train.seed = value;
}

diffusion::NoiseSchedule RunConfig::schedule() const {
    return diffusion::make_linear_schedule(diffusion.steps, diffusion.beta_start, diffusion.beta_end);
}

RunConfig parse_run_config(const std::string& json_text) {
    json given;
    try {
        given = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail("config", std::string("invalid JSON: ") + e.what());
    }
    if (!given.is_object()) fail("config", "top level must be an object");
    RunConfig config;
    check_known(given, to_json(config), "");
    visit(config, [&](const char* key, auto& value) {
        const auto ptr = pointer(key);
        if (given.contains(ptr)) read_value(given[ptr], key, value);
    });
    config.apply_seed(config.seed);
    config.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text(path)); }

std::string run_config_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace flowdiff::data
