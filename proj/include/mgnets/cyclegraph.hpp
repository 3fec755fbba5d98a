#pragma once

// Cycle schedules shared by the multigrid solver and the network builder, the
// skip-connection rules that turn a schedule into an encoder-decoder graph,
// and parameter counting over that graph.

#include <cstddef>
#include <cstdlib>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mgnets/error.hpp"

namespace mgnets {

enum class Family { UNet, FMGNet, WNet };
enum class Move { Down, Up };
enum class ChannelPolicy { Doubling, Pocket };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::UNet: return "unet";
        case Family::FMGNet: return "fmgnet";
        case Family::WNet: return "wnet";
    }
    return "?";
}

inline const char* to_string(ChannelPolicy p) { return p == ChannelPolicy::Doubling ? "doubling" : "pocket"; }

inline Family parse_family(std::string_view s) {
    if (s == "unet") return Family::UNet;
    if (s == "fmgnet" || s == "fmg") return Family::FMGNet;
    if (s == "wnet" || s == "w") return Family::WNet;
    throw InvalidArgument("unknown family '" + std::string(s) + "'");
}

inline ChannelPolicy default_policy(Family f) {
    return f == Family::UNet ? ChannelPolicy::Doubling : ChannelPolicy::Pocket;
}

/// Ordered level visits; levels[i+1] = levels[i] ± 1.
struct CycleSchedule {
    int depth = 0;
    std::vector<int> levels;

    std::vector<Move> moves() const {
        std::vector<Move> m;
        for (std::size_t i = 1; i < levels.size(); ++i) m.push_back(levels[i] > levels[i - 1] ? Move::Down : Move::Up);
        return m;
    }

    /// Throws StructuralError unless the invariants hold.
    void validate() const {
        if (depth < 2) throw StructuralError("schedule depth < 2");
        if (levels.empty()) throw StructuralError("empty schedule");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (levels[i] < 0 || levels[i] >= depth) throw StructuralError("schedule level out of range");
            if (i > 0 && std::abs(levels[i] - levels[i - 1]) != 1) throw StructuralError("schedule step is not ±1");
        }
        if (levels.back() != 0) throw StructuralError("schedule must end at level 0");
    }
};

namespace detail {

inline void append_merged(std::vector<int>& out, const std::vector<int>& seg) {
    for (int l : seg)
        if (out.empty() || out.back() != l) out.push_back(l);
}

// Visits of a gamma=2 cycle rooted at `level`, consecutive duplicates merged.
inline std::vector<int> w_levels(int level, int depth) {
    if (level == depth - 1) return {level};
    const std::vector<int> inner = w_levels(level + 1, depth);
    std::vector<int> out{level};
    append_merged(out, inner);
    append_merged(out, inner);
    out.push_back(level);
    return out;
}

}  // namespace detail

/// Level schedule for a network family.
///
/// unet: V schedule. wnet: gamma=2 W schedule. fmgnet: input stem 0→coarsest,
/// then classical FMG (prolong to each finer level and run a V-cycle there).
/// With `fmg_final_vcycle = false` the FMG schedule stops when it first
/// returns to level 0, dropping the closing finest-level V-cycle; this is the
/// form whose parameter counts match the published table.
inline CycleSchedule schedule(Family family, int depth, bool fmg_final_vcycle = true) {
    if (depth < 2) throw InvalidArgument("schedule: depth must be >= 2");
    CycleSchedule s{depth, {}};
    const int L = depth;
    switch (family) {
        case Family::UNet:
            for (int l = 0; l < L; ++l) s.levels.push_back(l);
            for (int l = L - 2; l >= 0; --l) s.levels.push_back(l);
            break;
        case Family::WNet:
            s.levels = detail::w_levels(0, L);
            break;
        case Family::FMGNet: {
            for (int l = 0; l < L; ++l) s.levels.push_back(l);
            for (int top = L - 2; top >= 0; --top) {
                s.levels.push_back(top);
                if (top == 0 && !fmg_final_vcycle) break;
                for (int l = top + 1; l < L; ++l) s.levels.push_back(l);
                for (int l = L - 2; l >= top; --l) s.levels.push_back(l);
            }
            break;
        }
    }
    s.validate();
    return s;
}

// ---------------------------------------------------------------- graphs

enum class NodeKind { ConvBlock, Down, Up, Concat, Head };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::ConvBlock: return "ConvBlock";
        case NodeKind::Down: return "Down";
        case NodeKind::Up: return "Up";
        case NodeKind::Concat: return "Concat";
        case NodeKind::Head: return "Head";
    }
    return "?";
}

struct NodeSpec {
    NodeKind kind = NodeKind::ConvBlock;
    int level = 0;
    int c_in = 0;
    int c_out = 0;
    std::vector<int> inputs;  // producers, in concatenation order

    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct ArchSpec {
    Family family = Family::UNet;
    int depth = 3;  // number of grid resolutions
    int spatial_dims = 2;
    int in_channels = 1;
    int out_channels = 2;
    int base_features = 32;
    ChannelPolicy channel_policy = ChannelPolicy::Doubling;
    bool fmg_final_vcycle = true;

    static ArchSpec make(Family f, int depth, int dims, int in, int out, int base = 32) {
        return ArchSpec{f, depth, dims, in, out, base, default_policy(f), true};
    }

    void validate() const {
        if (depth < 2) throw InvalidArgument("ArchSpec: depth must be >= 2");
        if (base_features < 1) throw InvalidArgument("ArchSpec: base_features must be >= 1");
        if (spatial_dims != 2 && spatial_dims != 3) throw InvalidArgument("ArchSpec: spatial_dims must be 2 or 3");
        if (in_channels < 1 || out_channels < 1) throw InvalidArgument("ArchSpec: channel counts must be >= 1");
    }
};

inline int channels(const ArchSpec& spec, int level) {
    if (level < 0 || level >= spec.depth) throw InvalidArgument("channels: level out of range");
    if (spec.channel_policy == ChannelPolicy::Pocket) return spec.base_features;
    return spec.base_features << level;
}

struct ArchGraph {
    std::vector<NodeSpec> nodes;

    /// (producer, consumer) pairs ordered by consumer, then input position.
    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> e;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (int p : nodes[i].inputs) e.emplace_back(p, static_cast<int>(i));
        return e;
    }

    std::vector<int> consumers(int node) const {
        std::vector<int> c;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (int p : nodes[i].inputs)
                if (p == node) c.push_back(static_cast<int>(i));
        return c;
    }

    std::size_t count(NodeKind k) const {
        std::size_t n = 0;
        for (const auto& nd : nodes) n += nd.kind == k;
        return n;
    }

    friend bool operator==(const ArchGraph&, const ArchGraph&) = default;
};

/// One ConvBlock per level visit (two at peaks: arrival and departure), with
/// Down/Up between visits. No skips and no head yet.
inline ArchGraph place_nodes(const ArchSpec& spec, const CycleSchedule& sched) {
    sched.validate();
    if (sched.levels.front() != 0) throw StructuralError("network schedule must start at level 0");
    if (sched.depth != spec.depth) throw StructuralError("schedule depth does not match spec");
    ArchGraph g;
    const auto& lv = sched.levels;
    int prev = -1;
    int prev_c = spec.in_channels;
    const auto add = [&](NodeKind k, int level, int c_out) {
        NodeSpec n{k, level, prev_c, c_out, {}};
        if (prev >= 0) n.inputs.push_back(prev);
        g.nodes.push_back(n);
        prev = static_cast<int>(g.nodes.size()) - 1;
        prev_c = c_out;
    };
    for (std::size_t i = 0; i < lv.size(); ++i) {
        const int l = lv[i];
        const bool arrive_up = i > 0 && lv[i - 1] > l;
        const bool leave_down = i + 1 < lv.size() && lv[i + 1] > l;
        if (arrive_up) add(NodeKind::Up, l, channels(spec, l));
        add(NodeKind::ConvBlock, l, channels(spec, l));
        if (arrive_up && leave_down) add(NodeKind::ConvBlock, l, channels(spec, l));
        if (leave_down) add(NodeKind::Down, l + 1, prev_c);
    }
    return g;
}

/// Inserts a Concat after every Up.
///
/// Rule 1: a ConvBlock feeding a Down whose block run began at a Down arrival
/// (or the input) is passed to every later Up arrival at its level.
/// Rule 2: a peak's departure block (its run began at an Up) is passed only to
/// the next Up arrival at its level.
/// Concat inputs: upsampled features, then Rule-1 sources in creation order,
/// then the pending peak.
inline ArchGraph apply_skip_rules(const ArchGraph& in) {
    const auto& N = in.nodes;
    for (const auto& n : N)
        if (n.kind == NodeKind::Concat || n.kind == NodeKind::Head)
            throw StructuralError("apply_skip_rules: graph already has Concat/Head nodes");
    if (N.empty() || N.front().kind != NodeKind::ConvBlock) throw StructuralError("graph must start with a ConvBlock");

    ArchGraph out;
    std::vector<int> remap(N.size(), -1);
    std::map<int, std::vector<int>> rule1;  // level -> new-graph node ids
    std::map<int, int> peak;                // level -> new-graph node id

    for (std::size_t i = 0; i < N.size(); ++i) {
        NodeSpec n = N[i];
        if (n.inputs.size() > 1) throw StructuralError("apply_skip_rules: node with multiple inputs");
        if (i > 0 && (n.inputs.size() != 1 || n.inputs[0] != static_cast<int>(i) - 1))
            throw StructuralError("apply_skip_rules: expected a chain graph");
        for (int& p : n.inputs) p = remap[p];
        out.nodes.push_back(n);
        const int id = static_cast<int>(out.nodes.size()) - 1;
        remap[i] = id;

        if (n.kind == NodeKind::Up) {
            if (i + 1 >= N.size() || N[i + 1].kind != NodeKind::ConvBlock)
                throw StructuralError("apply_skip_rules: Up must be followed by a ConvBlock");
            NodeSpec cat{NodeKind::Concat, n.level, 0, 0, {id}};
            for (int s : rule1[n.level]) cat.inputs.push_back(s);
            if (auto it = peak.find(n.level); it != peak.end()) {
                cat.inputs.push_back(it->second);
                peak.erase(it);
            }
            for (int p : cat.inputs) cat.c_in += out.nodes[p].c_out;
            cat.c_out = cat.c_in;
            out.nodes.push_back(cat);
            remap[i] = static_cast<int>(out.nodes.size()) - 1;  // consumers read the concat
            continue;
        }
        if (n.kind == NodeKind::ConvBlock && i + 1 < N.size() && N[i + 1].kind == NodeKind::Down) {
            if (N[i + 1].level != n.level + 1) throw StructuralError("apply_skip_rules: Down does not go one level coarser");
            std::size_t j = i;
            while (j > 0 && N[j - 1].kind == NodeKind::ConvBlock) --j;
            const bool from_up = j > 0 && N[j - 1].kind == NodeKind::Up;
            if (from_up)
                peak[n.level] = id;
            else
                rule1[n.level].push_back(id);
        }
    }
    // Channel widths of consumers follow their (possibly widened) producers.
    for (auto& n : out.nodes) {
        if (n.kind == NodeKind::Concat || n.inputs.empty()) continue;
        n.c_in = out.nodes[n.inputs[0]].c_out;
        if (n.kind == NodeKind::Down) n.c_out = n.c_in;
    }
    return out;
}

inline ArchGraph build_graph(const ArchSpec& spec) {
    spec.validate();
    const CycleSchedule s = schedule(spec.family, spec.depth, spec.fmg_final_vcycle);
    ArchGraph g = apply_skip_rules(place_nodes(spec, s));
    const int last = static_cast<int>(g.nodes.size()) - 1;
    g.nodes.push_back({NodeKind::Head, 0, g.nodes[last].c_out, spec.out_channels, {last}});
    return g;
}

/// Counting rules. `bn_per_channel` is 2 for trainable parameters (scale,
/// shift) and 4 when running mean/variance are included as framework totals do.
struct ParamConvention {
    int bn_per_channel = 2;
    bool conv_bias = true;
};

inline std::int64_t count_parameters(const ArchGraph& g, const ArchSpec& spec, ParamConvention conv = {}) {
    const std::int64_t k3 = spec.spatial_dims == 3 ? 27 : 9;
    const std::int64_t k2 = std::int64_t{1} << spec.spatial_dims;
    const std::int64_t bias = conv.conv_bias ? 1 : 0;
    std::int64_t total = 0;
    for (const auto& n : g.nodes) {
        const std::int64_t ci = n.c_in, co = n.c_out;
        switch (n.kind) {
            case NodeKind::ConvBlock:
                total += k3 * ci * co + bias * co + conv.bn_per_channel * co;
                total += k3 * co * co + bias * co + conv.bn_per_channel * co;
                break;
            case NodeKind::Up: total += k2 * ci * co + co; break;
            case NodeKind::Head: total += ci * co + co; break;
            case NodeKind::Down:
            case NodeKind::Concat: break;
        }
    }
    return total;
}

inline std::string emit_dot(const ArchGraph& g, std::string_view name = "arch") {
    std::ostringstream os;
    os << "digraph \"" << name << "\" {\n  rankdir=TB;\n  node [shape=box];\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto& n = g.nodes[i];
        os << "  n" << i << " [label=\"" << to_string(n.kind) << " L" << n.level << " " << n.c_in << "->" << n.c_out
           << "\"];\n";
    }
    for (auto [p, c] : g.edges()) os << "  n" << p << " -> n" << c << ";\n";
    os << "}\n";
    return os.str();
}

inline std::string params_csv_header() { return "family,depth,dims,policy,params\n"; }

inline std::string params_csv_row(const ArchSpec& s, std::int64_t params) {
    std::ostringstream os;
    os << to_string(s.family) << ',' << s.depth << ',' << s.spatial_dims << ',' << to_string(s.channel_policy) << ','
       << params << '\n';
    return os.str();
}

}  // namespace mgnets
