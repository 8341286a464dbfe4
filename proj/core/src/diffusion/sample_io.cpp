#include "flowdiff/diffusion/sample_io.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/nn/params.hpp"

namespace flowdiff::diffusion {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "npy output assumes a little-endian host");

std::string npy_bytes(const std::vector<FlowTensor>& samples) {
    std::size_t r = 0, t = 0, c = 0;
    if (!samples.empty()) {
        r = samples[0].regions();
        t = samples[0].horizon();
        c = samples[0].channels();
    }
    std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                         std::to_string(samples.size()) + ", " + std::to_string(r) + ", " +
                         std::to_string(t) + ", " + std::to_string(c) + "), }";
    const std::size_t preamble = 10;
    std::size_t total = preamble + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header.push_back('\n');

    std::string out = "\x93NUMPY";
    out.push_back('\x01');
    out.push_back('\x00');
    const auto len = static_cast<std::uint16_t>(header.size());
    out.push_back(static_cast<char>(len & 0xff));
    out.push_back(static_cast<char>(len >> 8));
    out += header;
    for (const auto& s : samples) {
        if (!s.same_shape(samples[0])) fail("diffusion", "samples have inconsistent shapes");
        out.append(reinterpret_cast<const char*>(s.values().data()), s.size() * sizeof(double));
    }
    return out;
}

std::string gzip(const std::string& raw) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        fail("io", "deflateInit2 failed");
    }
    std::string out(deflateBound(&zs, static_cast<uLong>(raw.size())) + 32, '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(raw.data()));
    zs.avail_in = static_cast<uInt>(raw.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) fail("io", "gzip compression failed");
    out.resize(zs.total_out);
    return out;
}

std::string gunzip(const std::string& packed) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) fail("io", "inflateInit2 failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(packed.data()));
    zs.avail_in = static_cast<uInt>(packed.size());
    std::string out;
    char buf[1 << 16];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            fail("io", "corrupt gzip stream");
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            fail("io", "truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::vector<std::size_t> parse_shape(const std::string& header) {
    const auto key = header.find("'shape'");
    const auto open = header.find('(', key);
    const auto close = header.find(')', open);
    if (key == std::string::npos || open == std::string::npos || close == std::string::npos) {
        fail("io", "npy header without shape");
    }
    std::vector<std::size_t> shape;
    std::stringstream ss(header.substr(open + 1, close - open - 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        shape.push_back(static_cast<std::size_t>(data::parse_int(item.substr(b), "npy shape")));
    }
    return shape;
}

}  // namespace

fs::path sample_sidecar_path(const fs::path& path) {
    std::string name = path.filename().string();
    const auto dot = name.find('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return path.parent_path() / (name + ".json");
}

void write_samples(const fs::path& path, const std::vector<FlowTensor>& samples, const SampleMetadata& meta) {
    data::write_file_atomic(path, gzip(npy_bytes(samples)));
    json j{{"seed", meta.seed},
           {"num_samples", samples.size()},
           {"schedule", {{"steps", meta.steps}, {"beta_start", meta.beta_start}, {"beta_end", meta.beta_end}}},
           {"normalization", {{"flow_mean", meta.flow_mean}, {"flow_std", meta.flow_std}}},
           {"region_ids", meta.region_ids},
           {"channels", meta.channels},
           {"space", meta.space == FlowSpace::Raw ? "raw" : "normalized"},
           {"hash", std::to_string(sample_hash(samples))}};
    data::write_file_atomic(sample_sidecar_path(path), j.dump(2) + "\n");
}

SampleSet read_samples(const fs::path& path) {
    if (!fs::exists(path)) fail("io", "samples not found at '" + path.string() + "'");
    const std::string raw = gunzip(data::read_text(path));
    if (raw.size() < 10 || raw.compare(0, 6, "\x93NUMPY") != 0) fail("io", "not an npy stream");
    const std::size_t hlen = static_cast<unsigned char>(raw[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(raw[9])) << 8);
    const std::string header = raw.substr(10, hlen);
    if (header.find("'<f8'") == std::string::npos) fail("io", "samples must be little-endian float64");
    const auto shape = parse_shape(header);
    if (shape.size() != 4) fail("io", "samples must have 4 axes");
    SampleSet set;
    const std::size_t per = shape[1] * shape[2] * shape[3];
    std::size_t pos = 10 + hlen;
    if (raw.size() != pos + shape[0] * per * sizeof(double)) fail("io", "sample payload size mismatch");

    const json j = json::parse(data::read_text(sample_sidecar_path(path)));
    set.meta.seed = j.at("seed").get<std::uint64_t>();
    set.meta.steps = j.at("schedule").at("steps").get<int>();
    set.meta.beta_start = j.at("schedule").at("beta_start").get<double>();
    set.meta.beta_end = j.at("schedule").at("beta_end").get<double>();
    set.meta.flow_mean = j.at("normalization").at("flow_mean").get<double>();
    set.meta.flow_std = j.at("normalization").at("flow_std").get<double>();
    set.meta.region_ids = j.at("region_ids").get<std::vector<std::string>>();
    set.meta.channels = j.at("channels").get<std::vector<std::string>>();
    set.meta.space = j.at("space").get<std::string>() == "raw" ? FlowSpace::Raw : FlowSpace::Normalized;

    for (std::size_t s = 0; s < shape[0]; ++s) {
        FlowTensor t(shape[1], shape[2], shape[3], 0.0, set.meta.space);
        std::memcpy(t.values().data(), raw.data() + pos, per * sizeof(double));
        pos += per * sizeof(double);
        set.samples.push_back(std::move(t));
    }
    return set;
}

std::uint64_t sample_hash(const std::vector<FlowTensor>& samples) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& s : samples) h = nn::fnv1a(s.values().data(), s.size() * sizeof(double), h);
    return h;
}

}  // namespace flowdiff::diffusion
