#pragma once

// Minimal reverse-mode automatic differentiation over dense double tensors.
//
// A Tensor is a shared handle to a Node. Ops build a graph only when at least
// one input requires a gradient and gradient recording is enabled; everything
// else is evaluated eagerly with no tape.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace flowdiff::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node& self)>;

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    BackwardFn backward_fn;

    std::vector<double>& ensure_grad();
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor constant(Shape shape, double fill = 0.0);
    static Tensor parameter(Shape shape, std::vector<double> values);

    bool defined() const noexcept { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    int dim(int axis) const;
    int rank() const { return static_cast<int>(node_->shape.size()); }
    std::size_t numel() const { return node_->value.size(); }

    std::span<const double> value() const { return node_->value; }
    std::span<double> mutable_value() { return node_->value; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    /// Gradient accumulated by backward(); zeros if nothing flowed here.
    std::span<const double> grad() const;
    bool has_grad() const { return !node_->grad.empty(); }
    void zero_grad();

    /// Runs reverse accumulation from this scalar.
    void backward() const;

    Node* node() const { return node_.get(); }
    const NodePtr& node_ptr() const { return node_; }

private:
    NodePtr node_;
};

bool grad_enabled();

/// Disables graph recording for its lifetime (inference, sampling).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Creates an op result; attaches `backward` only if some input needs a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   BackwardFn backward);

}  // namespace flowdiff::nn
