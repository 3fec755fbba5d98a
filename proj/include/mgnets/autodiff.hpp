#pragma once

// Reverse-mode autodiff over NCHW tensors.
//
// A Tape records every value in creation order, which is a topological order,
// so backward() simply walks it in reverse. Ops are free functions taking the
// tape and returning a Var handle. Convolutions lower to im2col + Eigen GEMM.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mgnets/error.hpp"
#include "mgnets/rng.hpp"
#include "mgnets/tensor.hpp"

namespace mgnets {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

template <class T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, Var self)>;

    /// A value gradients can flow into (parameters) or a constant (data).
    Var leaf(Tensor<T> value, bool requires_grad) { return push(std::move(value), {}, {}, requires_grad); }

    /// Output of an op; it needs a gradient iff any parent does.
    Var record(Tensor<T> value, std::vector<Var> parents, BackwardFn fn) {
        bool rg = false;
        for (Var p : parents) rg = rg || nodes_.at(p.id).requires_grad;
        return push(std::move(value), std::move(parents), rg ? std::move(fn) : BackwardFn{}, rg);
    }

    const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    const std::vector<Var>& parents(Var v) const { return nodes_.at(v.id).parents; }
    std::size_t size() const { return nodes_.size(); }

    /// Gradient buffer, allocated as zeros on first access.
    Tensor<T>& grad(Var v) {
        Node& n = nodes_.at(v.id);
        if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape(), T(0));
        return n.grad;
    }

    bool has_grad(Var v) const { return !nodes_.at(v.id).grad.empty(); }

    /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
    void backward(Var loss) {
        if (value(loss).size() != 1) throw InvalidArgument("backward: loss must be a scalar");
        if (!requires_grad(loss)) return;
        grad(loss)[0] = T(1);
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.backward && !n.grad.empty()) n.backward(*this, Var{i});
        }
    }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        std::vector<Var> parents;
        BackwardFn backward;
        bool requires_grad = false;
    };

    Var push(Tensor<T> value, std::vector<Var> parents, BackwardFn fn, bool rg) {
        nodes_.push_back(Node{std::move(value), {}, std::move(parents), std::move(fn), rg});
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    std::vector<Node> nodes_;
};

namespace detail {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapR = Eigen::Map<MatR<T>>;
template <class T>
using CMapR = Eigen::Map<const MatR<T>>;

inline void require_4d(const std::vector<int>& s, const char* op) {
    if (s.size() != 4) throw InvalidArgument(std::string(op) + ": expected NCHW tensor");
}

// Rows (ci, kh, kw), columns (h, w); zero padding of k/2.
template <class T>
void im2col(const T* x, int C, int H, int W, int k, T* cols) {
    const int pad = k / 2;
    const std::size_t HW = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c)
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
                T* row = cols + ((static_cast<std::size_t>(c) * k + kh) * k + kw) * HW;
                const int dy = kh - pad, dx = kw - pad;
                for (int h = 0; h < H; ++h) {
                    T* out = row + static_cast<std::size_t>(h) * W;
                    const int hs = h + dy;
                    if (hs < 0 || hs >= H) {
                        std::fill(out, out + W, T(0));
                        continue;
                    }
                    const T* in = x + (static_cast<std::size_t>(c) * H + hs) * W;
                    for (int w = 0; w < W; ++w) {
                        const int ws = w + dx;
                        out[w] = (ws >= 0 && ws < W) ? in[ws] : T(0);
                    }
                }
            }
}

template <class T>
void col2im_add(const T* cols, int C, int H, int W, int k, T* x) {
    const int pad = k / 2;
    const std::size_t HW = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c)
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
                const T* row = cols + ((static_cast<std::size_t>(c) * k + kh) * k + kw) * HW;
                const int dy = kh - pad, dx = kw - pad;
                for (int h = 0; h < H; ++h) {
                    const int hs = h + dy;
                    if (hs < 0 || hs >= H) continue;
                    const T* in = row + static_cast<std::size_t>(h) * W;
                    T* out = x + (static_cast<std::size_t>(c) * H + hs) * W;
                    const int w0 = std::max(0, -dx), w1 = std::min(W, W - dx);
                    for (int w = w0; w < w1; ++w) out[w + dx] += in[w];
                }
            }
}

}  // namespace detail

/// Cross-correlation with zero "same" padding. x (N,Ci,H,W), w (Co,Ci,k,k) with k odd, b (Co).
template <class T>
Var conv2d(Tape<T>& tape, Var x, Var w, Var b) {
    const auto& xs = tape.value(x).shape();
    const auto& ws = tape.value(w).shape();
    detail::require_4d(xs, "conv2d");
    if (ws.size() != 4 || ws[1] != xs[1] || ws[2] != ws[3] || ws[2] % 2 == 0)
        throw InvalidArgument("conv2d: weight " + Tensor<T>::shape_string(ws) + " incompatible with input " +
                              Tensor<T>::shape_string(xs));
    if (tape.value(b).size() != static_cast<std::size_t>(ws[0])) throw InvalidArgument("conv2d: bias size mismatch");
    const int N = xs[0], Ci = xs[1], H = xs[2], W = xs[3], Co = ws[0], k = ws[2];
    const int K = Ci * k * k, HW = H * W;

    Tensor<T> out({N, Co, H, W});
    std::vector<T> cols(static_cast<std::size_t>(K) * HW);
    {
        const T* xd = tape.value(x).data();
        detail::CMapR<T> Wm(tape.value(w).data(), Co, K);
        const T* bd = tape.value(b).data();
        for (int n = 0; n < N; ++n) {
            const T* xn = xd + static_cast<std::size_t>(n) * Ci * HW;
            detail::MapR<T> On(out.data() + static_cast<std::size_t>(n) * Co * HW, Co, HW);
            if (k == 1) {
                On.noalias() = Wm * detail::CMapR<T>(xn, Ci, HW);
            } else {
                detail::im2col(xn, Ci, H, W, k, cols.data());
                On.noalias() = Wm * detail::CMapR<T>(cols.data(), K, HW);
            }
            for (int c = 0; c < Co; ++c) On.row(c).array() += bd[c];
        }
    }
    return tape.record(std::move(out), {x, w, b}, [=](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        const T* xd = t.value(x).data();
        detail::CMapR<T> Wm(t.value(w).data(), Co, K);
        std::vector<T> buf(static_cast<std::size_t>(K) * HW);
        std::vector<T> dcols(static_cast<std::size_t>(K) * HW);
        const bool gx = t.requires_grad(x), gw = t.requires_grad(w), gb = t.requires_grad(b);
        for (int n = 0; n < N; ++n) {
            detail::CMapR<T> Gn(g.data() + static_cast<std::size_t>(n) * Co * HW, Co, HW);
            const T* xn = xd + static_cast<std::size_t>(n) * Ci * HW;
            if (gb) {
                T* db = t.grad(b).data();
                // Plain loop: Eigen's vectorized redux peels by address, so its rounding would vary per run.
                for (int c = 0; c < Co; ++c) {
                    const T* gr = g.data() + (static_cast<std::size_t>(n) * Co + c) * HW;
                    T s = 0;
                    for (int i = 0; i < HW; ++i) s += gr[i];
                    db[c] += s;
                }
            }
            if (gw) {
                detail::MapR<T> dW(t.grad(w).data(), Co, K);
                if (k == 1) {
                    dW.noalias() += Gn * detail::CMapR<T>(xn, Ci, HW).transpose();
                } else {
                    detail::im2col(xn, Ci, H, W, k, buf.data());
                    dW.noalias() += Gn * detail::CMapR<T>(buf.data(), K, HW).transpose();
                }
            }
            if (gx) {
                T* dxn = t.grad(x).data() + static_cast<std::size_t>(n) * Ci * HW;
                if (k == 1) {
                    detail::MapR<T>(dxn, Ci, HW).noalias() += Wm.transpose() * Gn;
                } else {
                    detail::MapR<T>(dcols.data(), K, HW).noalias() = Wm.transpose() * Gn;
                    detail::col2im_add(dcols.data(), Ci, H, W, k, dxn);
                }
            }
        }
    });
}

/// Stride-2 transposed convolution with a 2x2 kernel. x (N,Ci,H,W), w (Co,Ci,2,2), b (Co) -> (N,Co,2H,2W).
template <class T>
Var conv2d_transpose(Tape<T>& tape, Var x, Var w, Var b) {
    const auto& xs = tape.value(x).shape();
    const auto& ws = tape.value(w).shape();
    detail::require_4d(xs, "conv2d_transpose");
    if (ws.size() != 4 || ws[1] != xs[1] || ws[2] != 2 || ws[3] != 2)
        throw InvalidArgument("conv2d_transpose: weight " + Tensor<T>::shape_string(ws) + " incompatible with input " +
                              Tensor<T>::shape_string(xs));
    if (tape.value(b).size() != static_cast<std::size_t>(ws[0]))
        throw InvalidArgument("conv2d_transpose: bias size mismatch");
    const int N = xs[0], Ci = xs[1], H = xs[2], W = xs[3], Co = ws[0];
    const int HW = H * W, W2 = 2 * W;

    // Per-offset weight slices W_ab (Co, Ci).
    auto slice = [Co, Ci](const T* wd, int ab) {
        detail::MatR<T> m(Co, Ci);
        for (int o = 0; o < Co; ++o)
            for (int i = 0; i < Ci; ++i) m(o, i) = wd[(static_cast<std::size_t>(o) * Ci + i) * 4 + ab];
        return m;
    };

    Tensor<T> out({N, Co, 2 * H, 2 * W});
    {
        detail::MatR<T> Y(Co, HW);
        for (int ab = 0; ab < 4; ++ab) {
            const detail::MatR<T> Wab = slice(tape.value(w).data(), ab);
            const int a = ab / 2, bb = ab % 2;
            for (int n = 0; n < N; ++n) {
                Y.noalias() = Wab * detail::CMapR<T>(tape.value(x).data() + static_cast<std::size_t>(n) * Ci * HW, Ci, HW);
                for (int o = 0; o < Co; ++o) {
                    const T bias = tape.value(b)[o];
                    T* on = out.data() + (static_cast<std::size_t>(n) * Co + o) * 4 * HW;
                    for (int h = 0; h < H; ++h)
                        for (int ww = 0; ww < W; ++ww) on[(2 * h + a) * W2 + 2 * ww + bb] = Y(o, h * W + ww) + bias;
                }
            }
        }
    }
    return tape.record(std::move(out), {x, w, b}, [=](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        const bool gx = t.requires_grad(x), gw = t.requires_grad(w), gb = t.requires_grad(b);
        detail::MatR<T> G(Co, HW);
        for (int ab = 0; ab < 4; ++ab) {
            const detail::MatR<T> Wab = slice(t.value(w).data(), ab);
            detail::MatR<T> dWab = detail::MatR<T>::Zero(Co, Ci);
            const int a = ab / 2, bb = ab % 2;
            for (int n = 0; n < N; ++n) {
                for (int o = 0; o < Co; ++o) {
                    const T* gn = g.data() + (static_cast<std::size_t>(n) * Co + o) * 4 * HW;
                    for (int h = 0; h < H; ++h)
                        for (int ww = 0; ww < W; ++ww) G(o, h * W + ww) = gn[(2 * h + a) * W2 + 2 * ww + bb];
                }
                detail::CMapR<T> Xn(t.value(x).data() + static_cast<std::size_t>(n) * Ci * HW, Ci, HW);
                if (gw) dWab.noalias() += G * Xn.transpose();
                if (gx)
                    detail::MapR<T>(t.grad(x).data() + static_cast<std::size_t>(n) * Ci * HW, Ci, HW).noalias() +=
                        Wab.transpose() * G;
                if (gb) {
                    T* db = t.grad(b).data();
                    for (int o = 0; o < Co; ++o) db[o] += G.row(o).sum();
                }
            }
            if (gw) {
                T* dw = t.grad(w).data();
                for (int o = 0; o < Co; ++o)
                    for (int i = 0; i < Ci; ++i) dw[(static_cast<std::size_t>(o) * Ci + i) * 4 + ab] += dWab(o, i);
            }
        }
    });
}

/// 2x2 max-pool, stride 2; ties go to the first element in row-major window order.
template <class T>
Var maxpool2(Tape<T>& tape, Var x) {
    const auto& xs = tape.value(x).shape();
    detail::require_4d(xs, "maxpool2");
    if (xs[2] % 2 || xs[3] % 2) throw InvalidArgument("maxpool2: spatial dims must be even");
    const int N = xs[0], C = xs[1], H = xs[2], W = xs[3], Ho = H / 2, Wo = W / 2;
    Tensor<T> out({N, C, Ho, Wo});
    std::vector<std::uint32_t> arg(out.size());
    const T* xd = tape.value(x).data();
    std::size_t o = 0;
    for (int nc = 0; nc < N * C; ++nc) {
        const std::size_t base = static_cast<std::size_t>(nc) * H * W;
        for (int h = 0; h < Ho; ++h)
            for (int w = 0; w < Wo; ++w, ++o) {
                std::size_t best = base + static_cast<std::size_t>(2 * h) * W + 2 * w;
                const std::size_t cand[3] = {best + 1, best + W, best + W + 1};
                for (std::size_t c : cand)
                    if (xd[c] > xd[best]) best = c;
                out[o] = xd[best];
                arg[o] = static_cast<std::uint32_t>(best);
            }
    }
    return tape.record(std::move(out), {x}, [x, arg = std::move(arg)](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        Tensor<T>& dx = t.grad(x);
        for (std::size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += g[i];
    });
}

template <class T>
Var relu(Tape<T>& tape, Var x) {
    Tensor<T> out = tape.value(x);
    for (auto& v : out.values()) v = v > T(0) ? v : T(0);
    return tape.record(std::move(out), {x}, [x](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        const Tensor<T>& xv = t.value(x);
        Tensor<T>& dx = t.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > T(0)) dx[i] += g[i];
    });
}

/// Concatenation along the channel axis, in argument order.
template <class T>
Var concat_channels(Tape<T>& tape, const std::vector<Var>& xs) {
    if (xs.empty()) throw InvalidArgument("concat_channels: no inputs");
    const auto s0 = tape.value(xs[0]).shape();
    detail::require_4d(s0, "concat_channels");
    int C = 0;
    for (Var v : xs) {
        const auto& s = tape.value(v).shape();
        detail::require_4d(s, "concat_channels");
        if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3])
            throw InvalidArgument("concat_channels: batch/spatial mismatch");
        C += s[1];
    }
    const int N = s0[0], HW = s0[2] * s0[3];
    Tensor<T> out({N, C, s0[2], s0[3]});
    for (int n = 0; n < N; ++n) {
        T* dst = out.data() + static_cast<std::size_t>(n) * C * HW;
        for (Var v : xs) {
            const int c = tape.value(v).dim(1);
            const T* src = tape.value(v).data() + static_cast<std::size_t>(n) * c * HW;
            dst = std::copy(src, src + static_cast<std::size_t>(c) * HW, dst);
        }
    }
    return tape.record(std::move(out), xs, [xs, N, C, HW](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        for (int n = 0; n < N; ++n) {
            const T* src = g.data() + static_cast<std::size_t>(n) * C * HW;
            for (Var v : xs) {
                const int c = t.value(v).dim(1);
                const std::size_t len = static_cast<std::size_t>(c) * HW;
                if (t.requires_grad(v)) {
                    T* dst = t.grad(v).data() + static_cast<std::size_t>(n) * len;
                    for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
                }
                src += len;
            }
        }
    });
}

enum class BatchNormMode {
    Train,       // batch statistics, running statistics updated
    BatchStats,  // batch statistics, running statistics untouched
    Eval,        // running statistics
};

template <class T>
struct BatchNormState {
    std::vector<T> running_mean;
    std::vector<T> running_var;
    bool initialized = false;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// Per-channel normalization followed by scale/shift. Running statistics move
/// as r <- momentum*r + (1-momentum)*batch (biased batch variance); they are
/// state, not part of the differentiated graph.
template <class T>
Var batchnorm(Tape<T>& tape, Var x, Var scale, Var shift, BatchNormState<T>& state, BatchNormMode mode,
              double momentum = kBatchNormMomentum, double eps = kBatchNormEps) {
    const auto& xs = tape.value(x).shape();
    detail::require_4d(xs, "batchnorm");
    const int N = xs[0], C = xs[1], HW = xs[2] * xs[3];
    if (tape.value(scale).size() != static_cast<std::size_t>(C) || tape.value(shift).size() != static_cast<std::size_t>(C))
        throw InvalidArgument("batchnorm: scale/shift size mismatch");
    const std::size_t M = static_cast<std::size_t>(N) * HW;

    std::vector<T> mean(C), inv_std(C);
    if (mode == BatchNormMode::Eval) {
        if (!state.initialized) throw UninitializedStatistics("batchnorm: eval mode before any training step");
        for (int c = 0; c < C; ++c) {
            mean[c] = state.running_mean[c];
            inv_std[c] = T(1.0 / std::sqrt(static_cast<double>(state.running_var[c]) + eps));
        }
    } else {
        if (M < 2) throw InvalidArgument("batchnorm: training mode needs batch*spatial > 1");
        const T* xd = tape.value(x).data();
        std::vector<T> var(C);
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const T* p = xd + (static_cast<std::size_t>(n) * C + c) * HW;
                for (int i = 0; i < HW; ++i) s += p[i];
            }
            const double mu = s / static_cast<double>(M);
            double ss = 0.0;
            for (int n = 0; n < N; ++n) {
                const T* p = xd + (static_cast<std::size_t>(n) * C + c) * HW;
                for (int i = 0; i < HW; ++i) ss += (p[i] - mu) * (p[i] - mu);
            }
            const double v = ss / static_cast<double>(M);
            mean[c] = T(mu);
            var[c] = T(v);
            inv_std[c] = T(1.0 / std::sqrt(v + eps));
        }
        if (mode == BatchNormMode::Train) {
            if (!state.initialized) {
                state.running_mean.assign(C, T(0));
                state.running_var.assign(C, T(1));
                state.initialized = true;
            }
            for (int c = 0; c < C; ++c) {
                state.running_mean[c] = T(momentum * state.running_mean[c] + (1.0 - momentum) * mean[c]);
                state.running_var[c] = T(momentum * state.running_var[c] + (1.0 - momentum) * var[c]);
            }
        }
    }

    Tensor<T> out(xs);
    const T* xd = tape.value(x).data();
    const T* gm = tape.value(scale).data();
    const T* bt = tape.value(shift).data();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
            const T a = gm[c] * inv_std[c];
            const T b0 = bt[c] - a * mean[c];
            for (int i = 0; i < HW; ++i) out[off + i] = a * xd[off + i] + b0;
        }

    const bool batch_stats = mode != BatchNormMode::Eval;
    return tape.record(std::move(out), {x, scale, shift},
                       [=, mean = std::move(mean), inv_std = std::move(inv_std)](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        const T* xv = t.value(x).data();
        const T* gm2 = t.value(scale).data();
        const bool gx = t.requires_grad(x), gs = t.requires_grad(scale), gb = t.requires_grad(shift);
        for (int c = 0; c < C; ++c) {
            double sg = 0.0, sgx = 0.0;  // sum(dy), sum(dy * xhat)
            for (int n = 0; n < N; ++n) {
                const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
                for (int i = 0; i < HW; ++i) {
                    sg += g[off + i];
                    sgx += static_cast<double>(g[off + i]) * (xv[off + i] - mean[c]) * inv_std[c];
                }
            }
            if (gs) t.grad(scale)[c] += T(sgx);
            if (gb) t.grad(shift)[c] += T(sg);
            if (!gx) continue;
            T* dx = t.grad(x).data();
            const double k = static_cast<double>(gm2[c]) * inv_std[c];
            const double mg = sg / static_cast<double>(M), mgx = sgx / static_cast<double>(M);
            for (int n = 0; n < N; ++n) {
                const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
                for (int i = 0; i < HW; ++i) {
                    if (batch_stats) {
                        const double xhat = (xv[off + i] - mean[c]) * inv_std[c];
                        dx[off + i] += T(k * (g[off + i] - mg - xhat * mgx));
                    } else {
                        dx[off + i] += T(k * g[off + i]);
                    }
                }
            }
        }
    });
}

/// Mean over batch and spatial positions of -sum_k t_k log softmax(z)_k.
/// logits and targets are (N,K,H,W); targets are constants.
template <class T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, const Tensor<T>& targets) {
    const auto& s = tape.value(logits).shape();
    detail::require_4d(s, "softmax_cross_entropy");
    if (targets.shape() != s) throw InvalidArgument("softmax_cross_entropy: target shape mismatch");
    const int N = s[0], K = s[1], HW = s[2] * s[3];
    const double M = static_cast<double>(N) * HW;
    Tensor<T> prob(s);
    double loss = 0.0;
    const T* z = tape.value(logits).data();
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < HW; ++i) {
            const std::size_t base = static_cast<std::size_t>(n) * K * HW + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) mx = std::max(mx, static_cast<double>(z[base + k * HW]));
            double se = 0.0;
            for (int k = 0; k < K; ++k) se += std::exp(z[base + k * HW] - mx);
            const double lse = mx + std::log(se);
            for (int k = 0; k < K; ++k) {
                const std::size_t j = base + static_cast<std::size_t>(k) * HW;
                prob[j] = T(std::exp(z[j] - lse));
                loss -= targets[j] * (z[j] - lse);
            }
        }
    return tape.record(Tensor<T>::scalar(T(loss / M)), {logits},
                       [logits, targets, prob = std::move(prob), M](Tape<T>& t, Var self) {
        const double g = t.grad(self)[0] / M;
        Tensor<T>& dz = t.grad(logits);
        // d/dz of -sum t log p = p * sum(t) - t
        const auto& s2 = prob.shape();
        const int N2 = s2[0], K2 = s2[1], HW2 = s2[2] * s2[3];
        for (int n = 0; n < N2; ++n)
            for (int i = 0; i < HW2; ++i) {
                const std::size_t base = static_cast<std::size_t>(n) * K2 * HW2 + i;
                double ts = 0.0;
                for (int k = 0; k < K2; ++k) ts += targets[base + static_cast<std::size_t>(k) * HW2];
                for (int k = 0; k < K2; ++k) {
                    const std::size_t j = base + static_cast<std::size_t>(k) * HW2;
                    dz[j] += T(g * (prob[j] * ts - targets[j]));
                }
            }
    });
}

/// sum(x * c) for a constant tensor c; used for gradient checks and probes.
template <class T>
Var weighted_sum(Tape<T>& tape, Var x, const Tensor<T>& c) {
    const Tensor<T>& xv = tape.value(x);
    if (xv.shape() != c.shape()) throw InvalidArgument("weighted_sum: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += static_cast<double>(xv[i]) * c[i];
    return tape.record(Tensor<T>::scalar(T(s)), {x}, [x, c](Tape<T>& t, Var self) {
        const T g = t.grad(self)[0];
        Tensor<T>& dx = t.grad(x);
        for (std::size_t i = 0; i < c.size(); ++i) dx[i] += g * c[i];
    });
}

/// Glorot-uniform fill: U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
template <class T>
void glorot_uniform(Tensor<T>& w, double fan_in, double fan_out, Rng& rng) {
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : w.values()) v = T(rng.uniform(-lim, lim));
}

}  // namespace mgnets
