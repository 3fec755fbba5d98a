#pragma once

// Dice, HD95 and average surface distance over 2D/3D label masks.
//
// Surfaces are foreground voxels with at least one face neighbour in the
// background (outside the array counts as background). Point coordinates are
// voxel centres, index * spacing. Nearest-surface distances come from an
// exact Euclidean distance transform (Felzenszwalb-Huttenlocher, anisotropic).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mgnets/error.hpp"

namespace mgnets {

/// Row-major integer label volume with physical spacing (mm), last axis fastest.
struct LabelMask {
    std::vector<int> shape;
    std::vector<int> labels;
    std::vector<double> spacing;

    LabelMask() = default;
    LabelMask(std::vector<int> shp, std::vector<int> lab, std::vector<double> sp)
        : shape(std::move(shp)), labels(std::move(lab)), spacing(std::move(sp)) {
        validate();
    }

    std::size_t size() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }

    void validate() const {
        if (shape.size() != 2 && shape.size() != 3) throw InvalidArgument("LabelMask: 2D or 3D only");
        if (spacing.size() != shape.size()) throw InvalidArgument("LabelMask: spacing rank mismatch");
        for (int d : shape)
            if (d < 1) throw InvalidArgument("LabelMask: dims must be >= 1");
        for (double s : spacing)
            if (!(s > 0.0)) throw InvalidArgument("LabelMask: spacing must be positive");
        if (labels.size() != size()) throw InvalidArgument("LabelMask: label buffer size mismatch");
        for (int l : labels)
            if (l < 0) throw InvalidArgument("LabelMask: negative label");
    }
};

/// Binary mask; same layout conventions as LabelMask.
struct BinaryMask {
    std::vector<int> shape;
    std::vector<std::uint8_t> on;

    std::size_t count() const { return static_cast<std::size_t>(std::count(on.begin(), on.end(), 1)); }
    bool empty() const { return count() == 0; }
};

inline BinaryMask binarize(const LabelMask& m, const std::set<int>& labels) {
    BinaryMask b{m.shape, std::vector<std::uint8_t>(m.labels.size())};
    for (std::size_t i = 0; i < m.labels.size(); ++i) b.on[i] = labels.count(m.labels[i]) ? 1 : 0;
    return b;
}

namespace detail {

inline void check_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (a.shape != b.shape || a.on.size() != b.on.size()) throw InvalidArgument("masks differ in shape");
}

inline std::vector<int> unravel(std::size_t idx, const std::vector<int>& shape) {
    std::vector<int> c(shape.size());
    for (std::size_t ax = shape.size(); ax-- > 0;) {
        c[ax] = static_cast<int>(idx % static_cast<std::size_t>(shape[ax]));
        idx /= static_cast<std::size_t>(shape[ax]);
    }
    return c;
}

inline std::vector<std::size_t> strides(const std::vector<int>& shape) {
    std::vector<std::size_t> s(shape.size(), 1);
    for (std::size_t ax = shape.size() - 1; ax-- > 0;) s[ax] = s[ax + 1] * static_cast<std::size_t>(shape[ax + 1]);
    return s;
}

// Flat indices of surface voxels in ascending order.
inline std::vector<std::size_t> surface_indices(const BinaryMask& m) {
    const auto st = strides(m.shape);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.on.size(); ++i) {
        if (!m.on[i]) continue;
        const auto c = unravel(i, m.shape);
        bool boundary = false;
        for (std::size_t ax = 0; ax < m.shape.size() && !boundary; ++ax) {
            boundary = c[ax] == 0 || c[ax] == m.shape[ax] - 1 || !m.on[i - st[ax]] || !m.on[i + st[ax]];
        }
        if (boundary) out.push_back(i);
    }
    return out;
}

// 1D lower envelope of parabolas: d[q] = min_p (sp*(q-p))^2 + f[p], over finite f[p].
inline void edt_1d(const double* f, std::size_t stride, int n, double sp, double* d, std::vector<int>& v,
                   std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double s2 = sp * sp;
    const auto F = [&](int q) { return f[static_cast<std::size_t>(q) * stride]; };
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (F(q) == inf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s;
        while (true) {
            const int p = v[k];
            s = ((F(q) + s2 * q * q) - (F(p) + s2 * p * p)) / (2.0 * s2 * (q - p));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) d[static_cast<std::size_t>(q) * stride] = inf;
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[static_cast<std::size_t>(q) * stride] = s2 * dq * dq + F(v[k]);
    }
}

// Squared distance from every voxel to the nearest seed voxel.
inline std::vector<double> squared_edt(const std::vector<int>& shape, const std::vector<std::size_t>& seeds,
                                       const std::vector<double>& spacing) {
    std::size_t total = 1;
    for (int d : shape) total *= static_cast<std::size_t>(d);
    std::vector<double> g(total, std::numeric_limits<double>::infinity());
    for (std::size_t s : seeds) g[s] = 0.0;
    const auto st = strides(shape);
    int maxn = *std::max_element(shape.begin(), shape.end());
    std::vector<int> v(maxn);
    std::vector<double> z(maxn + 1), line(maxn), out(maxn);
    for (std::size_t ax = 0; ax < shape.size(); ++ax) {
        const int n = shape[ax];
        const std::size_t s = st[ax];
        // Every line along `ax` starts at an index whose `ax` coordinate is 0.
        for (std::size_t start = 0; start < total; ++start) {
            if ((start / s) % static_cast<std::size_t>(n) != 0) continue;
            for (int q = 0; q < n; ++q) line[q] = g[start + q * s];
            edt_1d(line.data(), 1, n, spacing[ax], out.data(), v, z);
            for (int q = 0; q < n; ++q) g[start + q * s] = out[q];
        }
    }
    return g;
}

}  // namespace detail

/// Surface voxel centres in mm; empty when the mask is empty.
inline std::vector<std::vector<double>> extract_surface(const BinaryMask& m, const std::vector<double>& spacing) {
    if (spacing.size() != m.shape.size()) throw InvalidArgument("extract_surface: spacing rank mismatch");
    std::vector<std::vector<double>> pts;
    for (std::size_t i : detail::surface_indices(m)) {
        const auto c = detail::unravel(i, m.shape);
        std::vector<double> p(c.size());
        for (std::size_t ax = 0; ax < c.size(); ++ax) p[ax] = c[ax] * spacing[ax];
        pts.push_back(std::move(p));
    }
    return pts;
}

/// For every surface voxel of `from`, the distance (mm) to the nearest surface voxel of `to`.
inline std::vector<double> directed_surface_distances(const BinaryMask& from, const BinaryMask& to,
                                                      const std::vector<double>& spacing) {
    detail::check_same_shape(from, to);
    if (spacing.size() != from.shape.size()) throw InvalidArgument("spacing rank mismatch");
    const auto src = detail::surface_indices(from);
    const auto dst = detail::surface_indices(to);
    if (src.empty() || dst.empty()) return {};
    const auto d2 = detail::squared_edt(to.shape, dst, spacing);
    std::vector<double> out;
    out.reserve(src.size());
    for (std::size_t i : src) out.push_back(std::sqrt(d2[i]));
    return out;
}

/// Nearest-rank percentile with the ceiling convention: the ceil(p/100 * n)-th smallest value.
inline double percentile_nearest_rank(std::vector<double> v, int p) {
    if (v.empty()) throw InvalidArgument("percentile of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    std::size_t rank = (static_cast<std::size_t>(p) * n + 99) / 100;
    rank = std::clamp<std::size_t>(rank, 1, n);
    return v[rank - 1];
}

/// 2|A∩B| / (|A|+|B|); two empty masks agree perfectly (1.0).
inline double dice(const BinaryMask& pred, const BinaryMask& truth) {
    detail::check_same_shape(pred, truth);
    std::size_t a = 0, b = 0, ab = 0;
    for (std::size_t i = 0; i < pred.on.size(); ++i) {
        a += pred.on[i];
        b += truth.on[i];
        ab += pred.on[i] & truth.on[i];
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(ab) / static_cast<double>(a + b);
}

/// Max of the two directed 95th-percentile surface distances; nullopt if either mask is empty.
inline std::optional<double> hd95(const BinaryMask& pred, const BinaryMask& truth, const std::vector<double>& spacing) {
    const auto ab = directed_surface_distances(pred, truth, spacing);
    const auto ba = directed_surface_distances(truth, pred, spacing);
    if (ab.empty() || ba.empty()) return std::nullopt;
    return std::max(percentile_nearest_rank(ab, 95), percentile_nearest_rank(ba, 95));
}

/// Mean of all directed nearest-surface distances pooled over both directions; nullopt if either mask is empty.
inline std::optional<double> asd(const BinaryMask& pred, const BinaryMask& truth, const std::vector<double>& spacing) {
    const auto ab = directed_surface_distances(pred, truth, spacing);
    const auto ba = directed_surface_distances(truth, pred, spacing);
    if (ab.empty() || ba.empty()) return std::nullopt;
    double s = 0.0;
    for (double d : ab) s += d;
    for (double d : ba) s += d;
    return s / static_cast<double>(ab.size() + ba.size());
}

struct ClassDef {
    std::string name;
    std::set<int> labels;
};

/// Nested composite classes of the synthetic data (whole ⊇ core ⊇ inner).
inline std::vector<ClassDef> default_class_map() {
    return {{"whole", {1, 2, 3}}, {"core", {2, 3}}, {"inner", {3}}};
}

struct MetricRow {
    std::string case_id;
    std::string cls;
    double dice = 0.0;
    std::optional<double> hd95_mm;
    std::optional<double> asd_mm;
};

inline std::vector<MetricRow> evaluate_classes(const LabelMask& pred, const LabelMask& truth,
                                               const std::vector<ClassDef>& class_map, const std::string& case_id = "") {
    pred.validate();
    truth.validate();
    if (pred.shape != truth.shape) throw InvalidArgument("evaluate_classes: shape mismatch");
    if (pred.spacing != truth.spacing) throw InvalidArgument("evaluate_classes: spacing mismatch");
    std::set<int> known{0};
    for (const auto& c : class_map) known.insert(c.labels.begin(), c.labels.end());
    for (const auto* m : {&pred, &truth})
        for (int l : m->labels)
            if (!known.count(l)) throw InvalidArgument("evaluate_classes: unknown label " + std::to_string(l));
    std::vector<MetricRow> rows;
    for (const auto& c : class_map) {
        const BinaryMask p = binarize(pred, c.labels);
        const BinaryMask t = binarize(truth, c.labels);
        rows.push_back({case_id, c.name, dice(p, t), hd95(p, t, pred.spacing), asd(p, t, pred.spacing)});
    }
    return rows;
}

inline std::string metrics_csv_header() { return "case_id,class,dice,hd95_mm,asd_mm\n"; }

inline std::string metrics_csv_row(const MetricRow& r) {
    const auto fmt = [](std::optional<double> v) {
        if (!v) return std::string("undef");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", *v);
        return std::string(buf);
    };
    return r.case_id + "," + r.cls + "," + fmt(r.dice) + "," + fmt(r.hd95_mm) + "," + fmt(r.asd_mm) + "\n";
}

}  // namespace mgnets
