#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace flowdiff {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class FlowSpace { Raw, Normalized };

/// Dense (regions x horizon x channels) array, row-major with channels fastest.
class FlowTensor {
public:
    FlowTensor() = default;
    FlowTensor(std::size_t regions, std::size_t horizon, std::size_t channels,
               double fill = 0.0, FlowSpace space = FlowSpace::Normalized);

    std::size_t regions() const noexcept { return regions_; }
    std::size_t horizon() const noexcept { return horizon_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    FlowSpace space() const noexcept { return space_; }
    void set_space(FlowSpace s) noexcept { space_ = s; }

    double& operator()(std::size_t r, std::size_t t, std::size_t c) {
        return values_[(r * horizon_ + t) * channels_ + c];
    }
    double operator()(std::size_t r, std::size_t t, std::size_t c) const {
        return values_[(r * horizon_ + t) * channels_ + c];
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& storage() noexcept { return values_; }
    const std::vector<double>& storage() const noexcept { return values_; }

    bool same_shape(const FlowTensor& other) const noexcept {
        return regions_ == other.regions_ && horizon_ == other.horizon_ &&
               channels_ == other.channels_;
    }

    /// Rows `ids` (in that order) as a new tensor.
    FlowTensor select_regions(std::span<const std::size_t> ids) const;

    bool operator==(const FlowTensor& other) const = default;

private:
    std::size_t regions_ = 0;
    std::size_t horizon_ = 0;
    std::size_t channels_ = 0;
    FlowSpace space_ = FlowSpace::Normalized;
    std::vector<double> values_;
};

/// Throws flowdiff::Error tagged with `module` unless shapes agree.
void require_same_shape(const FlowTensor& a, const FlowTensor& b, const char* module);

}  // namespace flowdiff
