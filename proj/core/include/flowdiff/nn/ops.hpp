#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "flowdiff/nn/autograd.hpp"

namespace flowdiff::nn {

// Shapes follow the "rows x features" convention: the last axis is the feature
// axis and every leading axis is flattened into rows for dense maps.

Tensor matmul(const Tensor& x, const Tensor& w);           // [..., k] x [k, m]
Tensor matmul_nt(const Tensor& x, const Tensor& w);        // [..., k] x [m, k]^T
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);  // matmul + bias

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
Tensor affine(const Tensor& x, double a, double b);  // a*x + b

/// Numpy-style expansion of size-1 axes; ranks must match.
Tensor broadcast_to(const Tensor& x, const Shape& shape);
Tensor reshape(const Tensor& x, Shape shape);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);

Tensor slice_last(const Tensor& x, int begin, int end);
Tensor concat_last(const std::vector<Tensor>& parts);

/// Mean over `axis`, keeping it with size 1.
Tensor mean_axis(const Tensor& x, int axis);
/// Sum over the last axis, keeping it with size 1.
Tensor sum_last(const Tensor& x);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// For x of shape [B, R, T, d]: out[b, l] = sum_{j in neighbors[l]} weight * x[b, j].
/// With `normalize` each neighbor contributes 1/|neighbors[l]|.
Tensor region_aggregate(const Tensor& x, const std::vector<std::vector<int>>& neighbors,
                        bool normalize = false);

/// Multi-head scaled dot-product self-attention over axis 1 of [S, T, d]
/// tensors. `probs_out`, when given, receives the [S, heads, T, T] weights.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                 std::vector<double>* probs_out = nullptr);

/// mean(|a - b|) and mean((a - b)^2).
Tensor mean_abs_error(const Tensor& a, const Tensor& b);
Tensor mean_squared_error(const Tensor& a, const Tensor& b);

/// Rows of `table` [n, d] picked by `index`: [index.size(), d].
Tensor gather_rows(const Tensor& table, const std::vector<int>& index);

/// Batched Tucker contraction: out[b, k] = sum_ij core[i, j, k] * h[b, i] * r[b, j].
Tensor tucker_contract(const Tensor& h, const Tensor& r, const Tensor& core);

/// Mean binary cross-entropy of sigmoid(logits) against constant targets.
Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& targets);

/// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

}  // namespace flowdiff::nn
