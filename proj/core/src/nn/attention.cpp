#include <algorithm>
#include <cmath>

#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"

namespace flowdiff::nn {

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                 std::vector<double>* probs_out) {
    if (q.rank() != 3 || k.shape() != q.shape() || v.shape() != q.shape()) {
        fail("nn", "attention: expected matching [S,T,d] inputs, got " + shape_string(q.shape()));
    }
    const int seqs = q.dim(0);
    const int len = q.dim(1);
    const int d = q.dim(2);
    if (heads < 1 || d % heads != 0) {
        fail("nn", "attention: width " + std::to_string(d) + " not divisible by " +
                       std::to_string(heads) + " heads");
    }
    const int dh = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::size_t plane = static_cast<std::size_t>(len) * len;

    auto probs = std::make_shared<std::vector<double>>(static_cast<std::size_t>(seqs) * heads * plane);
    std::vector<double> y(q.numel(), 0.0);
    const double* qv = q.value().data();
    const double* kv = k.value().data();
    const double* vv = v.value().data();

    for (int s = 0; s < seqs; ++s) {
        const std::size_t base = static_cast<std::size_t>(s) * len * d;
        for (int h = 0; h < heads; ++h) {
            double* p = probs->data() + (static_cast<std::size_t>(s) * heads + h) * plane;
            const int off = h * dh;
            for (int t = 0; t < len; ++t) {
                const double* qt = qv + base + static_cast<std::size_t>(t) * d + off;
                double mx = -INFINITY;
                for (int u = 0; u < len; ++u) {
                    const double* ku = kv + base + static_cast<std::size_t>(u) * d + off;
                    double dot = 0.0;
                    for (int c = 0; c < dh; ++c) dot += qt[c] * ku[c];
                    p[t * len + u] = dot * inv_sqrt;
                    mx = std::max(mx, p[t * len + u]);
                }
                double z = 0.0;
                for (int u = 0; u < len; ++u) {
                    p[t * len + u] = std::exp(p[t * len + u] - mx);
                    z += p[t * len + u];
                }
                double* yt = y.data() + base + static_cast<std::size_t>(t) * d + off;
                for (int u = 0; u < len; ++u) {
                    p[t * len + u] /= z;
                    const double* vu = vv + base + static_cast<std::size_t>(u) * d + off;
                    for (int c = 0; c < dh; ++c) yt[c] += p[t * len + u] * vu[c];
                }
            }
        }
    }
    if (probs_out) *probs_out = *probs;

    return make_result(q.shape(), std::move(y), {q, k, v},
                       [seqs, len, d, heads, dh, inv_sqrt, plane, probs](Node& self) {
                           Node& pq = *self.parents[0];
                           Node& pk = *self.parents[1];
                           Node& pv = *self.parents[2];
                           auto& gq = pq.ensure_grad();
                           auto& gk = pk.ensure_grad();
                           auto& gv = pv.ensure_grad();
                           std::vector<double> dp(static_cast<std::size_t>(len));
                           for (int s = 0; s < seqs; ++s) {
                               const std::size_t base = static_cast<std::size_t>(s) * len * d;
                               for (int h = 0; h < heads; ++h) {
                                   const double* p =
                                       probs->data() + (static_cast<std::size_t>(s) * heads + h) * plane;
                                   const int off = h * dh;
                                   for (int t = 0; t < len; ++t) {
                                       const double* dy = self.grad.data() + base + static_cast<std::size_t>(t) * d + off;
                                       double dot_pp = 0.0;
                                       for (int u = 0; u < len; ++u) {
                                           const std::size_t vu = base + static_cast<std::size_t>(u) * d + off;
                                           double acc = 0.0;
                                           for (int c = 0; c < dh; ++c) {
                                               acc += dy[c] * pv.value[vu + c];
                                               gv[vu + c] += p[t * len + u] * dy[c];
                                           }
                                           dp[u] = acc;
                                           dot_pp += acc * p[t * len + u];
                                       }
                                       const std::size_t qt = base + static_cast<std::size_t>(t) * d + off;
                                       for (int u = 0; u < len; ++u) {
                                           const double ds = p[t * len + u] * (dp[u] - dot_pp) * inv_sqrt;
                                           if (ds == 0.0) continue;
                                           const std::size_t ku = base + static_cast<std::size_t>(u) * d + off;
                                           for (int c = 0; c < dh; ++c) {
                                               gq[qt + c] += ds * pk.value[ku + c];
                                               gk[ku + c] += ds * pq.value[qt + c];
                                           }
                                       }
                                   }
                               }
                           }
                       });
}

}  // namespace flowdiff::nn
