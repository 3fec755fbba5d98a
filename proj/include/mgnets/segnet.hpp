#pragma once

// Trainable 2D networks built from an ArchGraph, the Dice + cross-entropy
// loss, Adam, and the seeded train/validation loop.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "mgnets/autodiff.hpp"
#include "mgnets/cyclegraph.hpp"
#include "mgnets/error.hpp"
#include "mgnets/rng.hpp"
#include "mgnets/synthdata.hpp"
#include "mgnets/tensor.hpp"

namespace mgnets {

inline std::string node_key(int id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "n%03d", id);
    return buf;
}

template <class T>
struct Model {
    ArchSpec spec;
    ArchGraph graph;
    std::uint64_t seed = 0;
    std::map<std::string, Tensor<T>> params;       // "<node>.<part>", e.g. n004.conv1.w
    std::map<std::string, BatchNormState<T>> bn;  // "<node>.bn0" / "<node>.bn1"

    std::size_t num_parameters() const {
        std::size_t n = 0;
        for (const auto& [k, v] : params) n += v.size();
        return n;
    }
};

template <class T>
using ParamMap = std::map<std::string, Tensor<T>>;

namespace detail {

template <class T>
void init_node(Model<T>& m, int id, const NodeSpec& n) {
    const std::string key = node_key(id);
    Rng rng(derive_seed(m.seed, static_cast<std::uint64_t>(id)));
    const int ci = n.c_in, co = n.c_out;
    auto conv = [&](const std::string& name, int cin, int k) {
        Tensor<T> w({co, cin, k, k});
        glorot_uniform(w, static_cast<double>(cin) * k * k, static_cast<double>(co) * k * k, rng);
        m.params[key + "." + name + ".w"] = std::move(w);
        m.params[key + "." + name + ".b"] = Tensor<T>({co});
    };
    auto bnorm = [&](const std::string& name) {
        m.params[key + "." + name + ".scale"] = Tensor<T>({co}, T(1));
        m.params[key + "." + name + ".shift"] = Tensor<T>({co});
        m.bn[key + "." + name] = {};
    };
    switch (n.kind) {
        case NodeKind::ConvBlock:
            conv("conv0", ci, 3);
            bnorm("bn0");
            conv("conv1", co, 3);
            bnorm("bn1");
            break;
        case NodeKind::Up: conv("up", ci, 2); break;
        case NodeKind::Head: conv("head", ci, 1); break;
        case NodeKind::Down:
        case NodeKind::Concat: break;
    }
}

}  // namespace detail

/// Runs the graph on x (N, in, H, W); H and W must be divisible by 2^(depth-1).
/// Parameters enter the tape as leaves; their Vars are returned through `vars`.
template <class T>
Var forward(Tape<T>& tape, Model<T>& m, Var x, BatchNormMode mode, std::map<std::string, Var>* vars = nullptr) {
    const auto& xs = tape.value(x).shape();
    if (xs.size() != 4 || xs[1] != m.spec.in_channels)
        throw InvalidArgument("forward: expected input (N," + std::to_string(m.spec.in_channels) + ",H,W), got " +
                              Tensor<T>::shape_string(xs));
    const int f = 1 << (m.spec.depth - 1);
    if (xs[2] % f != 0 || xs[3] % f != 0)
        throw InvalidArgument("forward: spatial size must be divisible by " + std::to_string(f));

    const bool rg = vars != nullptr;
    auto p = [&](const std::string& name) {
        Var v = tape.leaf(m.params.at(name), rg);
        if (vars) (*vars)[name] = v;
        return v;
    };
    const auto& N = m.graph.nodes;
    std::vector<Var> out(N.size());
    for (std::size_t i = 0; i < N.size(); ++i) {
        const NodeSpec& n = N[i];
        const std::string key = node_key(static_cast<int>(i));
        const Var in = n.inputs.empty() ? x : out[static_cast<std::size_t>(n.inputs[0])];
        switch (n.kind) {
            case NodeKind::ConvBlock: {
                Var h = in;
                for (int u = 0; u < 2; ++u) {
                    const std::string c = key + ".conv" + std::to_string(u), b = key + ".bn" + std::to_string(u);
                    h = conv2d(tape, h, p(c + ".w"), p(c + ".b"));
                    h = batchnorm(tape, h, p(b + ".scale"), p(b + ".shift"), m.bn.at(b), mode);
                    h = relu(tape, h);
                }
                out[i] = h;
                break;
            }
            case NodeKind::Down: out[i] = maxpool2(tape, in); break;
            case NodeKind::Up: out[i] = conv2d_transpose(tape, in, p(key + ".up.w"), p(key + ".up.b")); break;
            case NodeKind::Concat: {
                std::vector<Var> xsv;
                for (int s : n.inputs) xsv.push_back(out[static_cast<std::size_t>(s)]);
                out[i] = concat_channels(tape, xsv);
                break;
            }
            case NodeKind::Head: out[i] = conv2d(tape, in, p(key + ".head.w"), p(key + ".head.b")); break;
        }
    }
    return out.back();
}

/// Seeded Glorot weights, zero biases, unit BN scale. 2D only.
template <class T>
Model<T> instantiate(const ArchSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.spatial_dims != 2) throw UnsupportedConfiguration("instantiate: only 2D networks can be trained");
    Model<T> m;
    m.spec = spec;
    m.seed = seed;
    m.graph = build_graph(spec);
    for (std::size_t i = 0; i < m.graph.nodes.size(); ++i) detail::init_node(m, static_cast<int>(i), m.graph.nodes[i]);

    // Probe: the smallest input every level can halve, in a mode that leaves BN state alone.
    const int s = 1 << (spec.depth - 1);
    Tape<T> tape;
    const Var x = tape.leaf(Tensor<T>({2, spec.in_channels, s, s}, T(0.5)), false);
    const auto& y = tape.value(forward(tape, m, x, BatchNormMode::BatchStats));
    if (y.shape() != std::vector<int>{2, spec.out_channels, s, s})
        throw StructuralError("instantiate: probe output has shape " + Tensor<T>::shape_string(y.shape()));
    return m;
}

inline constexpr double kDiceSmooth = 1e-6;

/// (1 - mean soft Dice over samples and foreground classes) + mean pixel cross-entropy.
/// logits and one-hot targets are (N,K,H,W), K >= 2; class 0 is background.
template <class T>
Var dice_ce_loss(Tape<T>& tape, Var logits, const Tensor<T>& targets, double eps = kDiceSmooth) {
    const auto& s = tape.value(logits).shape();
    detail::require_4d(s, "dice_ce_loss");
    if (targets.shape() != s)
        throw InvalidArgument("dice_ce_loss: targets " + Tensor<T>::shape_string(targets.shape()) + " vs logits " +
                              Tensor<T>::shape_string(s));
    const int N = s[0], K = s[1], HW = s[2] * s[3];
    if (K < 2) throw InvalidArgument("dice_ce_loss: need a background and at least one foreground class");
    const double M = static_cast<double>(N) * HW;
    const double nd = static_cast<double>(N) * (K - 1);

    std::vector<double> prob(targets.size());
    const T* z = tape.value(logits).data();
    const T* t = targets.data();
    double ce = 0.0;
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < HW; ++i) {
            const std::size_t base = static_cast<std::size_t>(n) * K * HW + i;
            double mx = -INFINITY;
            for (int k = 0; k < K; ++k) mx = std::max(mx, static_cast<double>(z[base + k * HW]));
            double se = 0.0;
            for (int k = 0; k < K; ++k) se += std::exp(z[base + k * HW] - mx);
            const double lse = mx + std::log(se);
            for (int k = 0; k < K; ++k) {
                const std::size_t j = base + static_cast<std::size_t>(k) * HW;
                prob[j] = std::exp(z[j] - lse);
                ce -= t[j] * (z[j] - lse);
            }
        }
    ce /= M;

    // Per (n, k): intersection, sum of probabilities, sum of targets.
    std::vector<double> I(static_cast<std::size_t>(N) * K), P(I.size()), Q(I.size());
    double dice_mean = 0.0;
    for (int n = 0; n < N; ++n)
        for (int k = 1; k < K; ++k) {
            const std::size_t nk = static_cast<std::size_t>(n) * K + k;
            const std::size_t off = nk * HW;
            for (int i = 0; i < HW; ++i) {
                I[nk] += prob[off + i] * t[off + i];
                P[nk] += prob[off + i];
                Q[nk] += t[off + i];
            }
            dice_mean += (2.0 * I[nk] + eps) / (P[nk] + Q[nk] + eps);
        }
    dice_mean /= nd;
    const double loss = (1.0 - dice_mean) + ce;

    return tape.record(Tensor<T>::scalar(T(loss)), {logits},
                       [=, prob = std::move(prob), I = std::move(I), P = std::move(P), Q = std::move(Q)](Tape<T>& tp, Var self) {
        const double g = tp.grad(self)[0];
        T* dz = tp.grad(logits).data();
        std::vector<double> gp(static_cast<std::size_t>(K));
        for (int n = 0; n < N; ++n)
            for (int i = 0; i < HW; ++i) {
                const std::size_t base = static_cast<std::size_t>(n) * K * HW + i;
                double st = 0.0, pg = 0.0;
                for (int k = 0; k < K; ++k) {
                    const std::size_t j = base + static_cast<std::size_t>(k) * HW;
                    st += t[j];
                    gp[k] = 0.0;
                    if (k > 0) {
                        const std::size_t nk = static_cast<std::size_t>(n) * K + k;
                        const double den = P[nk] + Q[nk] + eps;
                        gp[k] = -(2.0 * t[j] / den - (2.0 * I[nk] + eps) / (den * den)) / nd;
                    }
                    pg += prob[j] * gp[k];
                }
                for (int k = 0; k < K; ++k) {
                    const std::size_t j = base + static_cast<std::size_t>(k) * HW;
                    const double dce = (prob[j] * st - t[j]) / M;
                    dz[j] += T(g * (dce + prob[j] * (gp[k] - pg)));
                }
            }
    });
}

struct TrainConfig {
    double learning_rate = 3e-4;
    int batch_size = 8;
    int epochs = 25;
    std::uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-7;
    double val_fraction = 0.2;
    bool augment = true;

    void validate() const {
        if (!(learning_rate > 0)) throw InvalidArgument("TrainConfig: learning_rate must be > 0");
        if (batch_size < 2) throw InvalidArgument("TrainConfig: batch_size must be >= 2");
        if (epochs < 0) throw InvalidArgument("TrainConfig: epochs must be >= 0");
        if (!(val_fraction > 0 && val_fraction < 1)) throw InvalidArgument("TrainConfig: val_fraction must be in (0, 1)");
    }
};

template <class T>
struct AdamState {
    ParamMap<T> m, v;
    long step = 0;
};

/// One bias-corrected Adam update; `grads` must hold every parameter.
template <class T>
void adam_step(Model<T>& model, const ParamMap<T>& grads, const TrainConfig& cfg, AdamState<T>& st) {
    ++st.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    for (auto& [name, w] : model.params) {
        const auto it = grads.find(name);
        if (it == grads.end()) throw InvalidArgument("adam_step: no gradient for " + name);
        const Tensor<T>& g = it->second;
        if (g.shape() != w.shape()) throw InvalidArgument("adam_step: gradient shape mismatch for " + name);
        Tensor<T>& m = st.m[name];
        Tensor<T>& v = st.v[name];
        if (m.empty()) m = Tensor<T>(w.shape());
        if (v.empty()) v = Tensor<T>(w.shape());
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i];
            const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            m[i] = T(mi);
            v[i] = T(vi);
            w[i] = T(w[i] - cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg.adam_eps));
        }
    }
}

/// Normalized image (1,S,S) and one-hot target (K,S,S) for one case.
template <class T>
struct Sample {
    std::string case_id;
    Tensor<T> image;
    Tensor<T> target;
};

template <class T>
Sample<T> make_sample(const LoadedCase& c, int num_classes = kSynthClasses) {
    return {c.case_id, normalize_zscore_nonzero(c.image).template cast<T>(), to_onehot<T>(c.labels, num_classes)};
}

/// Stacks samples (optionally through a dihedral transform each) into (N,C,H,W) batches.
template <class T>
std::pair<Tensor<T>, Tensor<T>> make_batch(const std::vector<Sample<T>>& data, const std::vector<std::size_t>& idx,
                                           const std::vector<int>& codes = {}) {
    const auto& s0 = data.at(idx.at(0));
    const int C = s0.image.dim(0), K = s0.target.dim(0), H = s0.image.dim(1), W = s0.image.dim(2);
    const int N = static_cast<int>(idx.size());
    Tensor<T> x({N, C, H, W}), y({N, K, H, W});
    for (int n = 0; n < N; ++n) {
        const auto& s = data.at(idx[static_cast<std::size_t>(n)]);
        if (s.image.dim(1) != H || s.image.dim(2) != W) throw DataError("make_batch: mixed image sizes");
        const int code = codes.empty() ? 0 : codes[static_cast<std::size_t>(n)];
        const Tensor<T> im = code ? dihedral(s.image, code) : s.image;
        const Tensor<T> tg = code ? dihedral(s.target, code) : s.target;
        std::copy(im.values().begin(), im.values().end(), x.data() + static_cast<std::size_t>(n) * C * H * W);
        std::copy(tg.values().begin(), tg.values().end(), y.data() + static_cast<std::size_t>(n) * K * H * W);
    }
    return {std::move(x), std::move(y)};
}

/// Loss and parameter gradients for one batch.
template <class T>
std::pair<double, ParamMap<T>> loss_and_grads(Model<T>& m, const Tensor<T>& x, const Tensor<T>& y,
                                              BatchNormMode mode = BatchNormMode::Train) {
    Tape<T> tape;
    std::map<std::string, Var> vars;
    const Var in = tape.leaf(x, false);
    const Var loss = dice_ce_loss(tape, forward(tape, m, in, mode, &vars), y);
    tape.backward(loss);
    ParamMap<T> g;
    for (const auto& [name, v] : vars) g[name] = tape.has_grad(v) ? tape.grad(v) : Tensor<T>(tape.value(v).shape());
    return {static_cast<double>(tape.value(loss)[0]), std::move(g)};
}

template <class T>
double batch_loss(Model<T>& m, const Tensor<T>& x, const Tensor<T>& y, BatchNormMode mode) {
    Tape<T> tape;
    const Var in = tape.leaf(x, false);
    return static_cast<double>(tape.value(dice_ce_loss(tape, forward(tape, m, in, mode), y))[0]);
}

struct LossEntry {
    int epoch;
    double train_loss;
    double val_loss;
};

struct LossCurve {
    std::vector<LossEntry> entries;

    std::string to_csv() const {
        std::string s = "epoch,train_loss,val_loss\n";
        char buf[96];
        for (const auto& e : entries) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss);
            s += buf;
        }
        return s;
    }
};

struct DataSplit {
    std::vector<std::size_t> train, val;
};

/// Seeded 80/20 split (by default) of n cases.
inline DataSplit split_indices(std::size_t n, std::uint64_t seed, double val_fraction = 0.2) {
    std::size_t nv = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n) + 0.5));
    nv = std::max<std::size_t>(nv, 1);
    if (n < nv + 2) throw InvalidArgument("split: need at least two training cases and one validation case");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, 0x5117));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    return {std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(nv), idx.end()),
            std::vector<std::size_t>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nv))};
}

namespace detail {

template <class T>
void require_finite(const ParamMap<T>& ps, long step, const char* what) {
    for (const auto& [name, t] : ps)
        for (T v : t.values())
            if (!std::isfinite(static_cast<double>(v)))
                throw NumericFailure(std::string("non-finite ") + what + " in " + name + " at step " + std::to_string(step),
                                     step, name);
}

}  // namespace detail

/// Validation loss: mean over validation batches, BN on batch statistics.
template <class T>
double validation_loss(Model<T>& m, const std::vector<Sample<T>>& data, const std::vector<std::size_t>& val, int batch) {
    double sum = 0.0;
    for (std::size_t b = 0; b < val.size(); b += static_cast<std::size_t>(batch)) {
        const std::vector<std::size_t> idx(val.begin() + static_cast<std::ptrdiff_t>(b),
                                           val.begin() + static_cast<std::ptrdiff_t>(std::min(val.size(), b + batch)));
        const auto [x, y] = make_batch(data, idx);
        sum += batch_loss(m, x, y, BatchNormMode::BatchStats) * static_cast<double>(idx.size());
    }
    return sum / static_cast<double>(val.size());
}

using EpochCallback = std::function<void(const LossEntry&)>;

/// Epoch loop over a seeded split; a trailing batch smaller than 2 is dropped.
template <class T>
LossCurve train(Model<T>& m, const std::vector<Sample<T>>& data, const TrainConfig& cfg,
                const EpochCallback& on_epoch = {}) {
    cfg.validate();
    LossCurve curve;
    if (cfg.epochs == 0) return curve;
    const DataSplit split = split_indices(data.size(), cfg.seed, cfg.val_fraction);
    AdamState<T> opt;
    std::vector<std::size_t> order = split.train;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        double sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b + 2 <= order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                               order.begin() + static_cast<std::ptrdiff_t>(e));
            std::vector<int> codes(idx.size(), 0);
            if (cfg.augment)
                for (auto& c : codes) c = static_cast<int>(rng.below(8));
            const auto [x, y] = make_batch(data, idx, codes);
            auto [loss, grads] = loss_and_grads(m, x, y);
            const long step = opt.step + 1;
            // Blame a corrupted parameter before the gradients it poisoned.
            detail::require_finite(m.params, step, "parameter");
            if (!std::isfinite(loss)) throw NumericFailure("non-finite loss at step " + std::to_string(step), step, "loss");
            detail::require_finite(grads, step, "gradient");
            adam_step(m, grads, cfg, opt);
            sum += loss * static_cast<double>(idx.size());
            seen += idx.size();
        }
        const double vl = validation_loss(m, data, split.val, cfg.batch_size);
        if (!std::isfinite(vl)) throw NumericFailure("non-finite validation loss", opt.step, "validation");
        curve.entries.push_back({epoch, sum / static_cast<double>(seen), vl});
        if (on_epoch) on_epoch(curve.entries.back());
    }
    return curve;
}

/// Argmax segmentation of one (1,S,S) image. Uses running BN statistics once a
/// training step has populated them, batch statistics of the image otherwise.
template <class T>
LabelMask predict(Model<T>& m, const Tensor<T>& image) {
    const bool trained = !m.bn.empty() && m.bn.begin()->second.initialized;
    Tape<T> tape;
    std::vector<int> s{1};
    s.insert(s.end(), image.shape().begin(), image.shape().end());
    const Var x = tape.leaf(Tensor<T>(s, image.values()), false);
    const Tensor<T>& y = tape.value(forward(tape, m, x, trained ? BatchNormMode::Eval : BatchNormMode::BatchStats));
    return argmax_labels(Tensor<T>({y.dim(1), y.dim(2), y.dim(3)}, y.values()));
}

inline nlohmann::json spec_to_json(const ArchSpec& s) {
    return {{"family", to_string(s.family)},   {"depth", s.depth},
            {"spatial_dims", s.spatial_dims},  {"in_channels", s.in_channels},
            {"out_channels", s.out_channels},  {"base_features", s.base_features},
            {"channel_policy", to_string(s.channel_policy)}, {"fmg_final_vcycle", s.fmg_final_vcycle}};
}

inline ArchSpec spec_from_json(const nlohmann::json& j) {
    ArchSpec s;
    s.family = parse_family(j.at("family").get<std::string>());
    s.depth = j.at("depth").get<int>();
    s.spatial_dims = j.at("spatial_dims").get<int>();
    s.in_channels = j.at("in_channels").get<int>();
    s.out_channels = j.at("out_channels").get<int>();
    s.base_features = j.at("base_features").get<int>();
    const auto pol = j.at("channel_policy").get<std::string>();
    if (pol != "doubling" && pol != "pocket") throw DataError("checkpoint: unknown channel policy " + pol);
    s.channel_policy = pol == "pocket" ? ChannelPolicy::Pocket : ChannelPolicy::Doubling;
    s.fmg_final_vcycle = j.at("fmg_final_vcycle").get<bool>();
    return s;
}

/// params/<name>.tsr, bn/<name>.{mean,var}.tsr and manifest.json.
template <class T>
void save_checkpoint(const std::filesystem::path& dir, const Model<T>& m) {
    nlohmann::json j;
    j["spec"] = spec_to_json(m.spec);
    j["seed"] = m.seed;
    j["precision"] = sizeof(T) == 8 ? "float64" : "float32";
    j["params"] = nlohmann::json::array();
    for (const auto& [name, t] : m.params) {
        write_tsr(dir / "params" / (name + ".tsr"), t);
        j["params"].push_back({{"name", name}, {"shape", t.shape()}});
    }
    j["batchnorm"] = nlohmann::json::array();
    for (const auto& [name, st] : m.bn) {
        j["batchnorm"].push_back({{"name", name}, {"initialized", st.initialized}});
        if (!st.initialized) continue;
        const int c = static_cast<int>(st.running_mean.size());
        write_tsr(dir / "bn" / (name + ".mean.tsr"), Tensor<T>({c}, st.running_mean));
        write_tsr(dir / "bn" / (name + ".var.tsr"), Tensor<T>({c}, st.running_var));
    }
    write_bytes(dir / "manifest.json", j.dump(2) + "\n");
}

template <class T>
Model<T> load_checkpoint(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_bytes(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint manifest: ") + e.what());
    } catch (const std::runtime_error& e) {
        throw DataError(e.what());
    }
    try {
        Model<T> m = instantiate<T>(spec_from_json(j.at("spec")), j.at("seed").get<std::uint64_t>());
        if (j.at("params").size() != m.params.size()) throw DataError("checkpoint: parameter count mismatch");
        for (const auto& e : j.at("params")) {
            const auto name = e.at("name").get<std::string>();
            auto it = m.params.find(name);
            if (it == m.params.end()) throw DataError("checkpoint: unknown parameter " + name);
            Tensor<T> t = read_tsr<T>(dir / "params" / (name + ".tsr"));
            if (t.shape() != it->second.shape()) throw DataError("checkpoint: shape mismatch for " + name);
            it->second = std::move(t);
        }
        for (const auto& e : j.at("batchnorm")) {
            const auto name = e.at("name").get<std::string>();
            auto it = m.bn.find(name);
            if (it == m.bn.end()) throw DataError("checkpoint: unknown batchnorm " + name);
            if (!e.at("initialized").get<bool>()) continue;
            it->second.running_mean = read_tsr<T>(dir / "bn" / (name + ".mean.tsr")).values();
            it->second.running_var = read_tsr<T>(dir / "bn" / (name + ".var.tsr")).values();
            it->second.initialized = true;
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint manifest: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace mgnets
