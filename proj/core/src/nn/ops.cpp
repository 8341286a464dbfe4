#include "flowdiff/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "flowdiff/error.hpp"

namespace flowdiff::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;
using Arr = Eigen::Map<Eigen::ArrayXd>;

Arr arr(std::vector<double>& v) { return Arr(v.data(), static_cast<Eigen::Index>(v.size())); }

// out (+)= op(a) * op(b), with op(a) rows x inner and op(b) inner x cols.
// Eigen's vectorized kernels pick their summation order from operand
// addresses, so products run on owned, aligned copies to keep results
// independent of where tensors happen to live.
void gemm(const double* a, bool a_t, const double* b, bool b_t, double* out, Eigen::Index rows,
          Eigen::Index inner, Eigen::Index cols, bool accumulate) {
    const RowMat am = a_t ? RowMat(MapC(a, inner, rows).transpose()) : RowMat(MapC(a, rows, inner));
    const RowMat bm = b_t ? RowMat(MapC(b, cols, inner).transpose()) : RowMat(MapC(b, inner, cols));
    RowMat prod(rows, cols);
    prod.noalias() = am * bm;
    const double* src = prod.data();
    const auto n = static_cast<std::size_t>(rows * cols);
    if (accumulate) {
        for (std::size_t i = 0; i < n; ++i) out[i] += src[i];
    } else {
        std::copy(src, src + n, out);
    }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        fail("nn", std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
    }
}

int last_dim(const Tensor& x, const char* op) {
    if (x.rank() < 1) fail("nn", std::string(op) + ": rank-0 input");
    return x.shape().back();
}

template <typename F, typename G>
Tensor unary(const Tensor& x, F f, G dfdx_from_xy) {
    const auto& xv = x.node()->value;
    std::vector<double> y(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
    return make_result(x.shape(), std::move(y), {x}, [dfdx_from_xy](Node& self) {
        Node& p = *self.parents[0];
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += self.grad[i] * dfdx_from_xy(p.value[i], self.value[i]);
        }
    });
}

}  // namespace

Tensor matmul(const Tensor& x, const Tensor& w) {
    if (w.rank() != 2) fail("nn", "matmul: weight must be rank 2, got " + shape_string(w.shape()));
    const int k = last_dim(x, "matmul");
    if (w.dim(0) != k) {
        fail("nn", "matmul: inner dims " + shape_string(x.shape()) + " x " +
                       shape_string(w.shape()));
    }
    const int m = w.dim(1);
    const auto rows = static_cast<Eigen::Index>(x.numel() / static_cast<std::size_t>(k));
    Shape out_shape = x.shape();
    out_shape.back() = m;
    std::vector<double> y(static_cast<std::size_t>(rows) * static_cast<std::size_t>(m));
    gemm(x.value().data(), false, w.value().data(), false, y.data(), rows, k, m, false);
    return make_result(std::move(out_shape), std::move(y), {x, w}, [rows, k, m](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        const double* dy = self.grad.data();
        if (px.requires_grad) gemm(dy, false, pw.value.data(), true, px.ensure_grad().data(), rows, m, k, true);
        if (pw.requires_grad) gemm(px.value.data(), true, dy, false, pw.ensure_grad().data(), k, rows, m, true);
    });
}

Tensor matmul_nt(const Tensor& x, const Tensor& w) {
    if (w.rank() != 2) fail("nn", "matmul_nt: weight must be rank 2");
    const int k = last_dim(x, "matmul_nt");
    if (w.dim(1) != k) {
        fail("nn", "matmul_nt: inner dims " + shape_string(x.shape()) + " x " +
                       shape_string(w.shape()) + "^T");
    }
    const int m = w.dim(0);
    const auto rows = static_cast<Eigen::Index>(x.numel() / static_cast<std::size_t>(k));
    Shape out_shape = x.shape();
    out_shape.back() = m;
    std::vector<double> y(static_cast<std::size_t>(rows) * static_cast<std::size_t>(m));
    gemm(x.value().data(), false, w.value().data(), true, y.data(), rows, k, m, false);
    return make_result(std::move(out_shape), std::move(y), {x, w}, [rows, k, m](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        const double* dy = self.grad.data();
        if (px.requires_grad) gemm(dy, false, pw.value.data(), false, px.ensure_grad().data(), rows, m, k, true);
        if (pw.requires_grad) gemm(dy, true, px.value.data(), false, pw.ensure_grad().data(), m, rows, k, true);
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2 || b.rank() != 1 || b.dim(0) != w.dim(1)) {
        fail("nn", "linear: bad parameter shapes " + shape_string(w.shape()) + ", " +
                       shape_string(b.shape()));
    }
    const int k = last_dim(x, "linear");
    if (w.dim(0) != k) {
        fail("nn", "linear: input " + shape_string(x.shape()) + " vs weight " +
                       shape_string(w.shape()));
    }
    const int m = w.dim(1);
    const auto rows = static_cast<Eigen::Index>(x.numel() / static_cast<std::size_t>(k));
    Shape out_shape = x.shape();
    out_shape.back() = m;
    std::vector<double> y(static_cast<std::size_t>(rows) * static_cast<std::size_t>(m));
    gemm(x.value().data(), false, w.value().data(), false, y.data(), rows, k, m, false);
    const auto bias = b.value();
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (int j = 0; j < m; ++j) y[static_cast<std::size_t>(r * m + j)] += bias[static_cast<std::size_t>(j)];
    }
    return make_result(std::move(out_shape), std::move(y), {x, w, b}, [rows, k, m](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        Node& pb = *self.parents[2];
        const double* dy = self.grad.data();
        if (px.requires_grad) gemm(dy, false, pw.value.data(), true, px.ensure_grad().data(), rows, m, k, true);
        if (pw.requires_grad) gemm(px.value.data(), true, dy, false, pw.ensure_grad().data(), k, rows, m, true);
        if (pb.requires_grad) {
            auto& gb = pb.ensure_grad();
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (int j = 0; j < m; ++j) gb[static_cast<std::size_t>(j)] += dy[r * m + j];
            }
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same(a, b, "add");
    std::vector<double> y(a.numel());
    arr(y) = arr(a.node()->value) + arr(b.node()->value);
    return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
        for (auto& p : self.parents) {
            if (p->requires_grad) arr(p->ensure_grad()) += arr(self.grad);
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same(a, b, "sub");
    std::vector<double> y(a.numel());
    arr(y) = arr(a.node()->value) - arr(b.node()->value);
    return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
        if (self.parents[0]->requires_grad) arr(self.parents[0]->ensure_grad()) += arr(self.grad);
        if (self.parents[1]->requires_grad) arr(self.parents[1]->ensure_grad()) -= arr(self.grad);
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mul");
    std::vector<double> y(a.numel());
    arr(y) = arr(a.node()->value) * arr(b.node()->value);
    return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) arr(pa.ensure_grad()) += arr(self.grad) * arr(pb.value);
        if (pb.requires_grad) arr(pb.ensure_grad()) += arr(self.grad) * arr(pa.value);
    });
}

Tensor scale(const Tensor& x, double s) { return affine(x, s, 0.0); }

Tensor affine(const Tensor& x, double a, double b) {
    std::vector<double> y(x.numel());
    arr(y) = arr(x.node()->value) * a + b;
    return make_result(x.shape(), std::move(y), {x}, [a](Node& self) {
        arr(self.parents[0]->ensure_grad()) += arr(self.grad) * a;
    });
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
    const Shape& in = x.shape();
    if (in.size() != shape.size()) {
        fail("nn", "broadcast_to: rank mismatch " + shape_string(in) + " -> " +
                       shape_string(shape));
    }
    const std::size_t rank = shape.size();
    std::vector<std::size_t> in_stride(rank, 0);
    std::size_t s = 1;
    for (std::size_t i = rank; i-- > 0;) {
        if (in[i] != shape[i] && in[i] != 1) {
            fail("nn", "broadcast_to: cannot expand " + shape_string(in) + " to " +
                           shape_string(shape));
        }
        in_stride[i] = (in[i] == 1) ? 0 : s;
        s *= static_cast<std::size_t>(in[i]);
    }
    if (in == shape) return x;

    // Precompute the source index of each output element.
    const std::size_t n = numel(shape);
    auto src = std::make_shared<std::vector<std::size_t>>(n);
    std::vector<int> counter(rank, 0);
    std::size_t offset = 0;
    for (std::size_t idx = 0; idx < n; ++idx) {
        (*src)[idx] = offset;
        for (std::size_t ax = rank; ax-- > 0;) {
            offset += in_stride[ax];
            if (++counter[ax] < shape[ax]) break;
            offset -= in_stride[ax] * static_cast<std::size_t>(shape[ax]);
            counter[ax] = 0;
        }
    }
    std::vector<double> y(n);
    const auto& xv = x.node()->value;
    for (std::size_t i = 0; i < n; ++i) y[i] = xv[(*src)[i]];
    return make_result(shape, std::move(y), {x}, [src](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < src->size(); ++i) g[(*src)[i]] += self.grad[i];
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.numel()) {
        fail("nn", "reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
    }
    std::vector<double> y(x.value().begin(), x.value().end());
    return make_result(std::move(shape), std::move(y), {x}, [](Node& self) {
        arr(self.parents[0]->ensure_grad()) += arr(self.grad);
    });
}

Tensor relu(const Tensor& x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
    return unary(
        x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor tanh(const Tensor& x) {
    return unary(
        x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
    return unary(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& x) {
    return unary(
        x, [](double v) { return v / (1.0 + std::exp(-v)); },
        [](double v, double) {
            const double s = 1.0 / (1.0 + std::exp(-v));
            return s * (1.0 + v * (1.0 - s));
        });
}

Tensor slice_last(const Tensor& x, int begin, int end) {
    const int d = last_dim(x, "slice_last");
    if (begin < 0 || end > d || begin >= end) {
        fail("nn", "slice_last: bad range [" + std::to_string(begin) + "," +
                       std::to_string(end) + ") of " + std::to_string(d));
    }
    const int w = end - begin;
    const std::size_t rows = x.numel() / static_cast<std::size_t>(d);
    Shape out_shape = x.shape();
    out_shape.back() = w;
    std::vector<double> y(rows * static_cast<std::size_t>(w));
    const auto& xv = x.node()->value;
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(r * d + begin), w,
                    y.begin() + static_cast<std::ptrdiff_t>(r * w));
    }
    return make_result(std::move(out_shape), std::move(y), {x}, [rows, d, w, begin](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            for (int c = 0; c < w; ++c) g[r * d + begin + c] += self.grad[r * w + c];
        }
    });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
    if (parts.empty()) fail("nn", "concat_last: no inputs");
    Shape lead = parts[0].shape();
    lead.pop_back();
    std::vector<int> widths;
    int total = 0;
    for (const auto& p : parts) {
        Shape l = p.shape();
        widths.push_back(l.back());
        l.pop_back();
        if (l != lead) fail("nn", "concat_last: leading shapes differ");
        total += widths.back();
    }
    const std::size_t rows = numel(lead);
    Shape out_shape = lead;
    out_shape.push_back(total);
    std::vector<double> y(rows * static_cast<std::size_t>(total));
    int off = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& v = parts[i].node()->value;
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * widths[i]), widths[i],
                        y.begin() + static_cast<std::ptrdiff_t>(r * total + off));
        }
        off += widths[i];
    }
    return make_result(std::move(out_shape), std::move(y), parts,
                       [rows, total, widths](Node& self) {
                           int o = 0;
                           for (std::size_t i = 0; i < self.parents.size(); ++i) {
                               Node& p = *self.parents[i];
                               if (p.requires_grad) {
                                   auto& g = p.ensure_grad();
                                   for (std::size_t r = 0; r < rows; ++r) {
                                       for (int c = 0; c < widths[i]; ++c) {
                                           g[r * widths[i] + c] += self.grad[r * total + o + c];
                                       }
                                   }
                               }
                               o += widths[i];
                           }
                       });
}

Tensor mean_axis(const Tensor& x, int axis) {
    const int r = x.rank();
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r) fail("nn", "mean_axis: axis out of range");
    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(x.shape()[i]);
    for (int i = axis + 1; i < r; ++i) inner *= static_cast<std::size_t>(x.shape()[i]);
    const std::size_t n = static_cast<std::size_t>(x.shape()[axis]);
    Shape out_shape = x.shape();
    out_shape[axis] = 1;
    std::vector<double> y(outer * inner, 0.0);
    const auto& xv = x.node()->value;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t a = 0; a < n; ++a) {
            const double* src = xv.data() + (o * n + a) * inner;
            double* dst = y.data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    }
    for (double& v : y) v *= inv;
    return make_result(std::move(out_shape), std::move(y), {x}, [outer, inner, n, inv](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t a = 0; a < n; ++a) {
                double* dst = g.data() + (o * n + a) * inner;
                const double* src = self.grad.data() + o * inner;
                for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i] * inv;
            }
        }
    });
}

Tensor sum_last(const Tensor& x) {
    const int d = last_dim(x, "sum_last");
    const std::size_t rows = x.numel() / static_cast<std::size_t>(d);
    Shape out_shape = x.shape();
    out_shape.back() = 1;
    std::vector<double> y(rows, 0.0);
    const auto& xv = x.node()->value;
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) s += xv[r * d + c];
        y[r] = s;
    }
    return make_result(std::move(out_shape), std::move(y), {x}, [rows, d](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            for (int c = 0; c < d; ++c) g[r * d + c] += self.grad[r];
        }
    });
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.value()) s += v;
    return make_result({1}, {s}, {x}, [](Node& self) {
        arr(self.parents[0]->ensure_grad()) += self.grad[0];
    });
}

Tensor mean_all(const Tensor& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x.numel())); }

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const int d = last_dim(x, "layer_norm");
    if (gamma.numel() != static_cast<std::size_t>(d) || beta.numel() != static_cast<std::size_t>(d)) {
        fail("nn", "layer_norm: parameter width mismatch");
    }
    const std::size_t rows = x.numel() / static_cast<std::size_t>(d);
    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    std::vector<double> y(x.numel());
    const auto& xv = x.node()->value;
    const auto& gv = gamma.node()->value;
    const auto& bv = beta.node()->value;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * d;
        double mean = 0.0;
        for (int c = 0; c < d; ++c) mean += row[c];
        mean /= d;
        double var = 0.0;
        for (int c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (int c = 0; c < d; ++c) {
            const double h = (row[c] - mean) * is;
            (*xhat)[r * d + c] = h;
            y[r * d + c] = h * gv[c] + bv[c];
        }
    }
    return make_result(x.shape(), std::move(y), {x, gamma, beta},
                       [rows, d, xhat, inv_std](Node& self) {
                           Node& px = *self.parents[0];
                           Node& pg = *self.parents[1];
                           Node& pb = *self.parents[2];
                           const auto& gv = pg.value;
                           std::vector<double> dxhat(static_cast<std::size_t>(d));
                           for (std::size_t r = 0; r < rows; ++r) {
                               const double* dy = self.grad.data() + r * d;
                               const double* h = xhat->data() + r * d;
                               if (pg.requires_grad) {
                                   auto& gg = pg.ensure_grad();
                                   for (int c = 0; c < d; ++c) gg[c] += dy[c] * h[c];
                               }
                               if (pb.requires_grad) {
                                   auto& gb = pb.ensure_grad();
                                   for (int c = 0; c < d; ++c) gb[c] += dy[c];
                               }
                               if (px.requires_grad) {
                                   double m1 = 0.0, m2 = 0.0;
                                   for (int c = 0; c < d; ++c) {
                                       dxhat[c] = dy[c] * gv[c];
                                       m1 += dxhat[c];
                                       m2 += dxhat[c] * h[c];
                                   }
                                   m1 /= d;
                                   m2 /= d;
                                   auto& gx = px.ensure_grad();
                                   const double is = (*inv_std)[r];
                                   for (int c = 0; c < d; ++c) {
                                       gx[r * d + c] += is * (dxhat[c] - m1 - h[c] * m2);
                                   }
                               }
                           }
                       });
}

Tensor region_aggregate(const Tensor& x, const std::vector<std::vector<int>>& neighbors,
                        bool normalize) {
    if (x.rank() != 4) fail("nn", "region_aggregate: expected [B,R,T,d], got " + shape_string(x.shape()));
    const int batch = x.dim(0);
    const int regions = x.dim(1);
    if (static_cast<int>(neighbors.size()) != regions) {
        fail("nn", "region_aggregate: adjacency has " + std::to_string(neighbors.size()) +
                       " regions, tensor has " + std::to_string(regions));
    }
    const std::size_t block = static_cast<std::size_t>(x.dim(2)) * static_cast<std::size_t>(x.dim(3));
    auto weights = std::make_shared<std::vector<double>>(static_cast<std::size_t>(regions), 1.0);
    for (int l = 0; l < regions; ++l) {
        for (int j : neighbors[l]) {
            if (j < 0 || j >= regions) fail("nn", "region_aggregate: neighbor index out of range");
        }
        if (normalize && !neighbors[l].empty()) {
            (*weights)[l] = 1.0 / static_cast<double>(neighbors[l].size());
        }
    }
    auto adj = std::make_shared<std::vector<std::vector<int>>>(neighbors);
    std::vector<double> y(x.numel(), 0.0);
    const auto& xv = x.node()->value;
    for (int b = 0; b < batch; ++b) {
        for (int l = 0; l < regions; ++l) {
            double* dst = y.data() + (static_cast<std::size_t>(b) * regions + l) * block;
            const double w = (*weights)[l];
            for (int j : neighbors[l]) {
                const double* src = xv.data() + (static_cast<std::size_t>(b) * regions + j) * block;
                for (std::size_t i = 0; i < block; ++i) dst[i] += w * src[i];
            }
        }
    }
    return make_result(x.shape(), std::move(y), {x}, [batch, regions, block, adj, weights](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (int b = 0; b < batch; ++b) {
            for (int l = 0; l < regions; ++l) {
                const double* src = self.grad.data() + (static_cast<std::size_t>(b) * regions + l) * block;
                const double w = (*weights)[l];
                for (int j : (*adj)[l]) {
                    double* dst = g.data() + (static_cast<std::size_t>(b) * regions + j) * block;
                    for (std::size_t i = 0; i < block; ++i) dst[i] += w * src[i];
                }
            }
        }
    });
}

Tensor mean_abs_error(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mean_abs_error");
    const auto& av = a.node()->value;
    const auto& bv = b.node()->value;
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
    const double n = static_cast<double>(av.size());
    return make_result({1}, {s / n}, {a, b}, [n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const double g = self.grad[0] / n;
        for (std::size_t i = 0; i < pa.value.size(); ++i) {
            const double diff = pa.value[i] - pb.value[i];
            const double sg = diff > 0.0 ? g : (diff < 0.0 ? -g : 0.0);
            if (pa.requires_grad) pa.ensure_grad()[i] += sg;
            if (pb.requires_grad) pb.ensure_grad()[i] -= sg;
        }
    });
}

Tensor mean_squared_error(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mean_squared_error");
    const auto& av = a.node()->value;
    const auto& bv = b.node()->value;
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
    const double n = static_cast<double>(av.size());
    return make_result({1}, {s / n}, {a, b}, [n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const double g = 2.0 * self.grad[0] / n;
        for (std::size_t i = 0; i < pa.value.size(); ++i) {
            const double diff = (pa.value[i] - pb.value[i]) * g;
            if (pa.requires_grad) pa.ensure_grad()[i] += diff;
            if (pb.requires_grad) pb.ensure_grad()[i] -= diff;
        }
    });
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& index) {
    if (table.rank() != 2) fail("nn", "gather_rows: table must be rank 2");
    const int n = table.dim(0);
    const int d = table.dim(1);
    std::vector<double> y(index.size() * static_cast<std::size_t>(d));
    const auto& tv = table.node()->value;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] < 0 || index[i] >= n) fail("nn", "gather_rows: index out of range");
        std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(index[i]) * d, d,
                    y.begin() + static_cast<std::ptrdiff_t>(i) * d);
    }
    auto idx = std::make_shared<std::vector<int>>(index);
    return make_result({static_cast<int>(index.size()), d}, std::move(y), {table},
                       [idx, d](Node& self) {
                           auto& g = self.parents[0]->ensure_grad();
                           for (std::size_t i = 0; i < idx->size(); ++i) {
                               for (int c = 0; c < d; ++c) {
                                   g[static_cast<std::size_t>((*idx)[i]) * d + c] +=
                                       self.grad[i * d + c];
                               }
                           }
                       });
}

Tensor tucker_contract(const Tensor& h, const Tensor& r, const Tensor& core) {
    if (h.rank() != 2 || r.shape() != h.shape()) fail("nn", "tucker_contract: bad vector shapes");
    const int d = h.dim(1);
    if (core.shape() != Shape{d, d, d}) {
        fail("nn", "tucker_contract: core " + shape_string(core.shape()) + " does not match d=" +
                       std::to_string(d));
    }
    const int batch = h.dim(0);
    // tmp[b, (j,k)] = sum_i h[b,i] core[i,j,k]
    auto tmp = std::make_shared<std::vector<double>>(static_cast<std::size_t>(batch) * d * d);
    gemm(h.value().data(), false, core.value().data(), false, tmp->data(), batch, d, d * d, false);
    std::vector<double> y(static_cast<std::size_t>(batch) * d);
    for (int b = 0; b < batch; ++b) {
        gemm(r.value().data() + static_cast<std::size_t>(b) * d, false,
             tmp->data() + static_cast<std::size_t>(b) * d * d, false,
             y.data() + static_cast<std::size_t>(b) * d, 1, d, d, false);
    }
    return make_result({batch, d}, std::move(y), {h, r, core}, [batch, d, tmp](Node& self) {
        Node& ph = *self.parents[0];
        Node& pr = *self.parents[1];
        Node& pc = *self.parents[2];
        std::vector<double> dtmp(static_cast<std::size_t>(batch) * d * d);
        for (int b = 0; b < batch; ++b) {
            const double* rb = pr.value.data() + static_cast<std::size_t>(b) * d;
            const double* gb = self.grad.data() + static_cast<std::size_t>(b) * d;
            double* db = dtmp.data() + static_cast<std::size_t>(b) * d * d;
            for (int j = 0; j < d; ++j) {
                for (int k = 0; k < d; ++k) db[j * d + k] = rb[j] * gb[k];
            }
            if (pr.requires_grad) {
                gemm(tmp->data() + static_cast<std::size_t>(b) * d * d, false, gb, true,
                     pr.ensure_grad().data() + static_cast<std::size_t>(b) * d, d, d, 1, true);
            }
        }
        if (ph.requires_grad) {
            gemm(dtmp.data(), false, pc.value.data(), true, ph.ensure_grad().data(), batch, d * d, d, true);
        }
        if (pc.requires_grad) {
            gemm(ph.value.data(), true, dtmp.data(), false, pc.ensure_grad().data(), d, batch, d * d, true);
        }
    });
}

Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& targets) {
    if (targets.size() != logits.numel()) fail("nn", "bce_with_logits: target size mismatch");
    const auto& xv = logits.node()->value;
    double s = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double x = xv[i];
        s += std::max(x, 0.0) - x * targets[i] + std::log1p(std::exp(-std::abs(x)));
    }
    const double n = static_cast<double>(xv.size());
    auto t = std::make_shared<std::vector<double>>(targets);
    return make_result({1}, {s / n}, {logits}, [t, n](Node& self) {
        Node& p = *self.parents[0];
        auto& g = p.ensure_grad();
        const double scale_factor = self.grad[0] / n;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double sig = 1.0 / (1.0 + std::exp(-p.value[i]));
            g[i] += (sig - (*t)[i]) * scale_factor;
        }
    });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) return x;
    if (rate >= 1.0) fail("nn", "dropout rate must be < 1");
    auto mask = std::make_shared<std::vector<double>>(x.numel());
    std::bernoulli_distribution keep(1.0 - rate);
    const double s = 1.0 / (1.0 - rate);
    for (double& m : *mask) m = keep(rng) ? s : 0.0;
    std::vector<double> y(x.numel());
    arr(y) = arr(x.node()->value) * arr(*mask);
    return make_result(x.shape(), std::move(y), {x}, [mask](Node& self) {
        arr(self.parents[0]->ensure_grad()) += arr(self.grad) * arr(*mask);
    });
}

}  // namespace flowdiff::nn
