#include "flowdiff/flow_tensor.hpp"

#include <algorithm>
#include <string>

#include "flowdiff/error.hpp"

namespace flowdiff {

FlowTensor::FlowTensor(std::size_t regions, std::size_t horizon, std::size_t channels,
                       double fill, FlowSpace space)
    : regions_(regions),
      horizon_(horizon),
      channels_(channels),
      space_(space),
      values_(regions * horizon * channels, fill) {}

FlowTensor FlowTensor::select_regions(std::span<const std::size_t> ids) const {
    FlowTensor out(ids.size(), horizon_, channels_, 0.0, space_);
    const std::size_t row = horizon_ * channels_;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= regions_) fail("flow", "region index out of range");
        std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(ids[i] * row), row,
                    out.values_.begin() + static_cast<std::ptrdiff_t>(i * row));
    }
    return out;
}

void require_same_shape(const FlowTensor& a, const FlowTensor& b, const char* module) {
    if (!a.same_shape(b)) {
        fail(module, "shape mismatch: (" + std::to_string(a.regions()) + "," +
                         std::to_string(a.horizon()) + "," + std::to_string(a.channels()) +
                         ") vs (" + std::to_string(b.regions()) + "," +
                         std::to_string(b.horizon()) + "," + std::to_string(b.channels()) + ")");
    }
}

}  // namespace flowdiff
