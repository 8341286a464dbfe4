#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "flowdiff/nn/autograd.hpp"

namespace flowdiff::nn {

/// Named, ordered collection of trainable tensors. Order is insertion order and
/// is the order used for serialization and hashing.
class ParameterSet {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    Tensor& add(std::string name, Tensor tensor);
    const Tensor& get(std::string_view name) const;
    Tensor& get(std::string_view name);
    bool contains(std::string_view name) const;

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }
    std::vector<Tensor> tensors() const;
    /// Entries whose name starts with `prefix`.
    std::vector<Entry> with_prefix(std::string_view prefix) const;

    std::size_t scalar_count() const;
    void zero_grad();
    void append(const ParameterSet& other);

    std::vector<double> snapshot() const;
    void restore(const std::vector<double>& values);

    /// FNV-1a over the raw bytes of every value, in order.
    std::uint64_t hash() const;
    double grad_norm() const;
    bool all_finite() const;

private:
    std::vector<Entry> entries_;
};

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) fill.
Tensor uniform_fan_in(Shape shape, int fan_in, std::mt19937_64& rng);
Tensor uniform(Shape shape, double bound, std::mt19937_64& rng);
Tensor normal(Shape shape, double stddev, std::mt19937_64& rng);
Tensor zeros_parameter(Shape shape);
Tensor ones_parameter(Shape shape);

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace flowdiff::nn
