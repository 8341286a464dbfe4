#pragma once

#include <unordered_map>
#include <vector>

#include "flowdiff/nn/autograd.hpp"

namespace flowdiff::nn {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double max_grad_norm = 0.0;  // 0 disables global-norm clipping
};

/// Adam with per-tensor moment state. `step` only touches the tensors passed
/// in, so disjoint parameter groups can share one optimizer instance.
class Adam {
public:
    explicit Adam(AdamOptions options = {}) : options_(options) {}

    void step(const std::vector<Tensor>& params);
    const AdamOptions& options() const { return options_; }
    void set_lr(double lr) { options_.lr = lr; }

private:
    struct State {
        std::vector<double> m;
        std::vector<double> v;
        long steps = 0;
    };
    AdamOptions options_;
    std::unordered_map<const Node*, State> state_;
};

}  // namespace flowdiff::nn
