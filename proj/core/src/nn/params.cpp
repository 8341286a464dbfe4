#include "flowdiff/nn/params.hpp"

#include <algorithm>
#include <cmath>

#include "flowdiff/error.hpp"

namespace flowdiff::nn {

Tensor& ParameterSet::add(std::string name, Tensor tensor) {
    if (contains(name)) fail("nn", "duplicate parameter name '" + name + "'");
    entries_.push_back({std::move(name), std::move(tensor)});
    return entries_.back().tensor;
}

const Tensor& ParameterSet::get(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.tensor;
    }
    fail("nn", "unknown parameter '" + std::string(name) + "'");
}

Tensor& ParameterSet::get(std::string_view name) {
    return const_cast<Tensor&>(static_cast<const ParameterSet&>(*this).get(name));
}

bool ParameterSet::contains(std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Entry& e) { return e.name == name; });
}

std::vector<Tensor> ParameterSet::tensors() const {
    std::vector<Tensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.tensor);
    return out;
}

std::vector<ParameterSet::Entry> ParameterSet::with_prefix(std::string_view prefix) const {
    std::vector<Entry> out;
    for (const auto& e : entries_) {
        if (e.name.starts_with(prefix)) out.push_back(e);
    }
    return out;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.numel();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
}

void ParameterSet::append(const ParameterSet& other) {
    for (const auto& e : other.entries_) add(e.name, e.tensor);
}

std::vector<double> ParameterSet::snapshot() const {
    std::vector<double> out;
    out.reserve(scalar_count());
    for (const auto& e : entries_) out.insert(out.end(), e.tensor.value().begin(), e.tensor.value().end());
    return out;
}

void ParameterSet::restore(const std::vector<double>& values) {
    if (values.size() != scalar_count()) fail("nn", "restore: snapshot size mismatch");
    std::size_t off = 0;
    for (auto& e : entries_) {
        auto dst = e.tensor.mutable_value();
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), dst.size(), dst.begin());
        off += dst.size();
    }
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t ParameterSet::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& e : entries_) {
        h = fnv1a(e.name.data(), e.name.size(), h);
        h = fnv1a(e.tensor.value().data(), e.tensor.numel() * sizeof(double), h);
    }
    return h;
}

double ParameterSet::grad_norm() const {
    double s = 0.0;
    for (const auto& e : entries_) {
        if (!e.tensor.has_grad()) continue;
        for (double g : e.tensor.grad()) s += g * g;
    }
    return std::sqrt(s);
}

bool ParameterSet::all_finite() const {
    for (const auto& e : entries_) {
        for (double v : e.tensor.value()) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::parameter(std::move(shape), std::move(v));
}

Tensor uniform_fan_in(Shape shape, int fan_in, std::mt19937_64& rng) {
    return uniform(std::move(shape), 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1))), rng);
}

Tensor normal(Shape shape, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> v(numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::parameter(std::move(shape), std::move(v));
}

Tensor zeros_parameter(Shape shape) {
    std::vector<double> v(numel(shape), 0.0);
    return Tensor::parameter(std::move(shape), std::move(v));
}

Tensor ones_parameter(Shape shape) {
    std::vector<double> v(numel(shape), 1.0);
    return Tensor::parameter(std::move(shape), std::move(v));
}

}  // namespace flowdiff::nn
