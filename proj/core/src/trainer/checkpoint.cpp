#include "flowdiff/trainer/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/error.hpp"

namespace flowdiff::trainer {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

constexpr char kMagic[8] = {'F', 'D', 'I', 'F', 'F', 'C', 'K', '1'};

template <class T>
void put(std::string& out, T v) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    out.append(bytes, sizeof(T));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
    void need(std::size_t n) const {
        if (pos + n > bytes.size()) fail("trainer", "checkpoint is truncated");
    }
};

const char* condition_name(denoiser::ConditionKind k) {
    return k == denoiser::ConditionKind::RegionFeatures ? "region_features" : "masked_sequence";
}

json manifest_json(const CheckpointManifest& m) {
    const auto& d = m.model.denoiser;
    json j{{"mode", m.mode},
           {"denoiser",
            {{"flow_dims", d.flow_dims},
             {"hidden", d.hidden},
             {"layers", d.layers},
             {"kg_dim", d.kg_dim},
             {"heads", d.heads},
             {"ffn_multiplier", d.ffn_multiplier},
             {"feature_dim", d.feature_dim},
             {"condition", condition_name(d.condition)},
             {"use_spatial", d.use_spatial},
             {"degree_normalize", d.degree_normalize},
             {"kg_in_condition", d.kg_in_condition}}},
           {"volume_hidden", m.model.volume_hidden},
           {"use_guide", m.model.use_guide},
           {"schedule", {{"steps", m.steps}, {"beta_start", m.beta_start}, {"beta_end", m.beta_end}}},
           {"normalization", {{"flow_mean", m.flow_mean}, {"flow_std", m.flow_std}}},
           {"channels", m.channels},
           {"feature_names", m.feature_names},
           {"history", m.history},
           {"future", m.future},
           {"seed", m.seed}};
    if (m.clip_x0) {
        j["clip_x0"] = {m.clip_x0->low, m.clip_x0->high};
    } else {
        j["clip_x0"] = nullptr;
    }
    return j;
}

CheckpointManifest parse_manifest(const json& j) {
    CheckpointManifest m;
    m.mode = j.at("mode").get<std::string>();
    const auto& d = j.at("denoiser");
    auto& c = m.model.denoiser;
    c.flow_dims = d.at("flow_dims").get<int>();
    c.hidden = d.at("hidden").get<int>();
    c.layers = d.at("layers").get<int>();
    c.kg_dim = d.at("kg_dim").get<int>();
    c.heads = d.at("heads").get<int>();
    c.ffn_multiplier = d.at("ffn_multiplier").get<int>();
    c.feature_dim = d.at("feature_dim").get<int>();
    c.condition = d.at("condition").get<std::string>() == "region_features" ? denoiser::ConditionKind::RegionFeatures
                                                                            : denoiser::ConditionKind::MaskedSequence;
    c.use_spatial = d.at("use_spatial").get<bool>();
    c.degree_normalize = d.at("degree_normalize").get<bool>();
    c.kg_in_condition = d.at("kg_in_condition").get<bool>();
    m.model.volume_hidden = j.at("volume_hidden").get<int>();
    m.model.use_guide = j.at("use_guide").get<bool>();
    m.steps = j.at("schedule").at("steps").get<int>();
    m.beta_start = j.at("schedule").at("beta_start").get<double>();
    m.beta_end = j.at("schedule").at("beta_end").get<double>();
    m.flow_mean = j.at("normalization").at("flow_mean").get<double>();
    m.flow_std = j.at("normalization").at("flow_std").get<double>();
    m.channels = j.at("channels").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.history = j.at("history").get<int>();
    m.future = j.at("future").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("clip_x0").is_null()) {
        m.clip_x0 = diffusion::ClipRange{j["clip_x0"][0].get<double>(), j["clip_x0"][1].get<double>()};
    }
    return m;
}

}  // namespace

diffusion::NoiseSchedule CheckpointManifest::schedule() const {
    return diffusion::make_linear_schedule(steps, beta_start, beta_end);
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointManifest& manifest, const Model& model) {
    const std::string text = manifest_json(manifest).dump();
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out += text;
    const auto params = model.all_parameters();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.entries().size()));
    for (const auto& e : params.entries()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out += e.name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
        for (int dim : e.tensor.shape()) put<std::int32_t>(out, dim);
        put<std::uint64_t>(out, e.tensor.numel());
        out.append(reinterpret_cast<const char*>(e.tensor.value().data()), e.tensor.numel() * sizeof(double));
    }
    data::write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail("trainer", "checkpoint not found at '" + path.string() + "'");
    const std::string bytes = data::read_text(path);
    Reader in{bytes};
    if (in.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) fail("trainer", "not a checkpoint file");
    const auto mlen = in.get<std::uint32_t>();
    Checkpoint ck;
    try {
        ck.manifest = parse_manifest(json::parse(in.str(mlen)));
    } catch (const json::exception& e) {
        fail("trainer", std::string("bad checkpoint manifest: ") + e.what());
    }
    nn::ParameterSet denoiser_params, estimator_params;
    const auto count = in.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name = in.str(in.get<std::uint32_t>());
        const auto rank = in.get<std::uint32_t>();
        nn::Shape shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(in.get<std::int32_t>());
        const auto n = in.get<std::uint64_t>();
        if (n != nn::numel(shape)) fail("trainer", "checkpoint blob '" + name + "' has a bad size");
        std::vector<double> values(n);
        in.need(n * sizeof(double));
        std::memcpy(values.data(), bytes.data() + in.pos, n * sizeof(double));
        in.pos += n * sizeof(double);
        auto& target = name.rfind("volume.", 0) == 0 ? estimator_params : denoiser_params;
        target.add(name, nn::Tensor::parameter(std::move(shape), std::move(values)));
    }
    if (in.pos != bytes.size()) fail("trainer", "checkpoint has trailing bytes");
    ck.model.denoiser = denoiser::Denoiser(ck.manifest.model.denoiser, std::move(denoiser_params));
    ck.model.estimator = denoiser::VolumeEstimator(std::move(estimator_params));
    ck.model.use_guide = ck.manifest.model.use_guide;
    return ck;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
    const std::string bytes = data::read_text(path);
    return nn::fnv1a(bytes.data(), bytes.size());
}

}  // namespace flowdiff::trainer
