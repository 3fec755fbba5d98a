#pragma once

// Seeded 2D segmentation cases: a brain-like ellipse on a zero background
// holding three strictly nested structures (outer ⊇ middle ⊇ inner).
//
// Each child ellipse is placed in its parent's normalized frame (the parent
// maps to the unit disk) with centre |c| <= 1 - r and semi-axes <= r, so
// containment holds by construction. r_mid <= 0.6 and r_in <= 0.4 bound the
// inner diameter by 0.24 of the outer one.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "mgnets/error.hpp"
#include "mgnets/rng.hpp"
#include "mgnets/segmetrics.hpp"
#include "mgnets/tensor.hpp"

namespace mgnets {

inline constexpr int kSynthGeneratorVersion = 1;
inline constexpr int kSynthClasses = 4;

struct Ellipse {
    double cx = 0, cy = 0;  // pixel units; x = column, y = row
    double ax = 1, ay = 1;  // semi-axes
    double theta = 0;

    /// Coordinates of (x, y) in the frame where this ellipse is the unit disk.
    std::pair<double, double> to_unit(double x, double y) const {
        const double c = std::cos(theta), s = std::sin(theta);
        const double dx = x - cx, dy = y - cy;
        return {(c * dx + s * dy) / ax, (-s * dx + c * dy) / ay};
    }
    std::pair<double, double> from_unit(double u, double v) const {
        const double c = std::cos(theta), s = std::sin(theta);
        const double px = u * ax, py = v * ay;
        return {cx + c * px - s * py, cy + s * px + c * py};
    }
    bool contains(double x, double y) const {
        const auto [u, v] = to_unit(x, y);
        return u * u + v * v <= 1.0;
    }
    double max_semi_axis() const { return std::max(ax, ay); }
};

struct SynthCase {
    std::string case_id;
    std::uint64_t seed = 0;
    Tensor<float> image;  // (1, S, S)
    LabelMask labels;     // 0 background, 1 outer, 2 middle, 3 inner
    Ellipse brain, outer, middle, inner;
};

namespace detail {

// Child ellipse inside `parent`: centre within radius (1 - r) of the parent's
// unit-disk centre, semi-axes in [0.7 r, r]. Mapped back to pixel space the
// child is an affine image of an ellipse inside the unit disk, so it stays inside.
inline Ellipse nested_ellipse(const Ellipse& parent, double r, Rng& rng) {
    const double rho = (1.0 - r) * std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double ra = r * rng.uniform(0.7, 1.0), rb = r * rng.uniform(0.7, 1.0);
    const double t = std::numbers::pi * rng.uniform();
    const double ux = rho * std::cos(phi), uy = rho * std::sin(phi);
    // Unit-frame ellipse {ux,uy,ra,rb,t}; its pixel-space image under the parent's affine map.
    // The parent map is A = R(theta) diag(ax, ay); the image of a rotated ellipse is another
    // ellipse whose axes follow from the SVD of A R(t) diag(ra, rb).
    const double c0 = std::cos(parent.theta), s0 = std::sin(parent.theta);
    const double c1 = std::cos(t), s1 = std::sin(t);
    // M = R0 * diag(ax, ay) * R1 * diag(ra, rb)
    const double m00 = c0 * parent.ax * c1 * ra - s0 * parent.ay * s1 * ra;
    const double m01 = -c0 * parent.ax * s1 * rb - s0 * parent.ay * c1 * rb;
    const double m10 = s0 * parent.ax * c1 * ra + c0 * parent.ay * s1 * ra;
    const double m11 = -s0 * parent.ax * s1 * rb + c0 * parent.ay * c1 * rb;
    // Ellipse = M * unit disk; M Mᵀ = Q diag(l1, l2) Qᵀ gives axes sqrt(l) along Q's columns.
    const double a = m00 * m00 + m01 * m01, b = m00 * m10 + m01 * m11, d = m10 * m10 + m11 * m11;
    const double tr = a + d, det = a * d - b * b;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double l1 = tr / 2.0 + disc, l2 = std::max(tr / 2.0 - disc, 0.0);
    const double ang = 0.5 * std::atan2(2.0 * b, a - d);
    Ellipse e;
    std::tie(e.cx, e.cy) = parent.from_unit(ux, uy);
    e.ax = std::sqrt(l1);
    e.ay = std::sqrt(l2);
    e.theta = ang;
    return e;
}

}  // namespace detail

/// One case, fully determined by (seed, index).
inline SynthCase generate_case(int size, std::uint64_t seed, int index) {
    if (size < 32 || (size & (size - 1)) != 0) throw InvalidArgument("synth: size must be a power of two >= 32");
    SynthCase c;
    c.case_id = "case_" + std::string(index < 10 ? "00" : index < 100 ? "0" : "") + std::to_string(index);
    c.seed = derive_seed(seed, static_cast<std::uint64_t>(index));
    Rng rng(c.seed);
    const double S = size;
    const std::size_t npx = static_cast<std::size_t>(size) * size;

    for (;;) {
        c.brain = {S / 2 + rng.uniform(-0.04, 0.04) * S, S / 2 + rng.uniform(-0.04, 0.04) * S,
                   rng.uniform(0.36, 0.44) * S, rng.uniform(0.30, 0.40) * S, std::numbers::pi * rng.uniform()};
        // Outer structure: a disk of radius R around its centre fits in the brain's inscribed disk.
        const double R = rng.uniform(0.12, 0.20) * S;
        const double inscribed = std::min(c.brain.ax, c.brain.ay);
        const double rho = (inscribed - R) * std::sqrt(rng.uniform());
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        c.outer = {c.brain.cx + rho * std::cos(phi), c.brain.cy + rho * std::sin(phi), R * rng.uniform(0.7, 1.0),
                   R * rng.uniform(0.7, 1.0), std::numbers::pi * rng.uniform()};
        c.middle = detail::nested_ellipse(c.outer, rng.uniform(0.45, 0.60), rng);
        c.inner = detail::nested_ellipse(c.middle, rng.uniform(0.25, 0.40), rng);

        std::vector<int> lab(npx, 0);
        std::size_t n1 = 0, n2 = 0, n3 = 0;
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j) {
                const double x = j + 0.5, y = i + 0.5;
                int l = 0;
                if (c.inner.contains(x, y))
                    l = 3;
                else if (c.middle.contains(x, y))
                    l = 2;
                else if (c.outer.contains(x, y))
                    l = 1;
                lab[static_cast<std::size_t>(i) * size + j] = l;
                n1 += l >= 1;
                n2 += l >= 2;
                n3 += l == 3;
            }
        // Counts of the composite regions are nested by construction; require strict
        // ordering of the individual classes and a non-empty inner structure.
        const std::size_t c1 = n1 - n2, c2 = n2 - n3, c3 = n3;
        if (!(c1 > c2 && c2 > c3 && c3 >= 1)) continue;

        const double tissue = 1.0 + rng.uniform(-0.1, 0.1);
        const double level[4] = {tissue, 1.5 + rng.uniform(-0.1, 0.1), 0.7 + rng.uniform(-0.1, 0.1),
                                 2.0 + rng.uniform(-0.1, 0.1)};
        const double sigma = 0.1 * 2.0;  // 10% of the nominal intensity range [0, 2]
        c.image = Tensor<float>({1, size, size});
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j) {
                const std::size_t k = static_cast<std::size_t>(i) * size + j;
                const double noise = rng.normal();
                if (!c.brain.contains(j + 0.5, i + 0.5) && lab[k] == 0) continue;
                double v = level[lab[k]] + sigma * noise;
                if (std::abs(v) < 1e-3) v = 1e-3;  // keep brain pixels distinguishable from background
                c.image[k] = static_cast<float>(v);
            }
        c.labels = LabelMask({size, size}, std::move(lab), {1.0, 1.0});
        return c;
    }
}

/// Z-score over the non-zero entries; zeros are left untouched.
template <class T>
Tensor<T> normalize_zscore_nonzero(const Tensor<T>& image) {
    double s = 0.0;
    std::size_t n = 0;
    for (T v : image.values())
        if (v != T(0)) {
            s += v;
            ++n;
        }
    if (n < 2) throw InvalidArgument("normalize_zscore_nonzero: need at least two non-zero pixels");
    const double mu = s / static_cast<double>(n);
    double ss = 0.0;
    for (T v : image.values())
        if (v != T(0)) ss += (v - mu) * (v - mu);
    const double var = ss / static_cast<double>(n);
    if (!(var > 1e-12)) throw InvalidArgument("normalize_zscore_nonzero: degenerate variance");
    const double inv = 1.0 / std::sqrt(var);
    Tensor<T> out = image;
    for (auto& v : out.values())
        if (v != T(0)) v = static_cast<T>((v - mu) * inv);
    return out;
}

/// (K, H, W) one-hot encoding of a 2D label mask.
template <class T>
Tensor<T> to_onehot(const LabelMask& m, int num_classes) {
    if (m.shape.size() != 2) throw InvalidArgument("to_onehot: 2D masks only");
    const int H = m.shape[0], W = m.shape[1];
    Tensor<T> out({num_classes, H, W});
    const std::size_t HW = static_cast<std::size_t>(H) * W;
    for (std::size_t i = 0; i < HW; ++i) {
        const int l = m.labels[i];
        if (l < 0 || l >= num_classes)
            throw InvalidArgument("to_onehot: label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes) + ")");
        out[static_cast<std::size_t>(l) * HW + i] = T(1);
    }
    return out;
}

/// Per-pixel argmax over the channel axis of a (K, H, W) tensor.
template <class T>
LabelMask argmax_labels(const Tensor<T>& scores, std::vector<double> spacing = {1.0, 1.0}) {
    if (scores.ndim() != 3) throw InvalidArgument("argmax_labels: expected (K,H,W)");
    const int K = scores.dim(0), H = scores.dim(1), W = scores.dim(2);
    const std::size_t HW = static_cast<std::size_t>(H) * W;
    std::vector<int> lab(HW);
    for (std::size_t i = 0; i < HW; ++i) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (scores[k * HW + i] > scores[best * HW + i]) best = k;
        lab[i] = best;
    }
    return LabelMask({H, W}, std::move(lab), std::move(spacing));
}

/// Dihedral transform of a (C, H, W) tensor with H == W: bit 0 flips rows,
/// bit 1 flips columns, bit 2 transposes. Codes 0..7 cover all flips and 90° rotations.
template <class T>
Tensor<T> dihedral(const Tensor<T>& x, int code) {
    if (x.ndim() != 3 || x.dim(1) != x.dim(2)) throw InvalidArgument("dihedral: expected square (C,H,W)");
    if (code < 0 || code > 7) throw InvalidArgument("dihedral: code must be in [0, 8)");
    const int C = x.dim(0), N = x.dim(1);
    Tensor<T> out(x.shape());
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                int a = (code & 1) ? N - 1 - i : i;
                int b = (code & 2) ? N - 1 - j : j;
                if (code & 4) std::swap(a, b);
                out[(static_cast<std::size_t>(c) * N + a) * N + b] = x[(static_cast<std::size_t>(c) * N + i) * N + j];
            }
    return out;
}

inline LabelMask dihedral(const LabelMask& m, int code) {
    const int N = m.shape.at(0);
    Tensor<float> t({1, N, m.shape.at(1)}, std::vector<float>(m.labels.begin(), m.labels.end()));
    const Tensor<float> r = dihedral(t, code);
    return LabelMask(m.shape, std::vector<int>(r.values().begin(), r.values().end()), m.spacing);
}

struct DatasetManifest {
    std::uint64_t seed = 0;
    int size = 0;
    int version = kSynthGeneratorVersion;
    std::vector<std::string> case_ids;
    std::vector<std::string> images;  // paths relative to the dataset directory
    std::vector<std::string> labels;
    std::vector<ClassDef> class_map = default_class_map();

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["generator"] = "mgnets-synth";
        j["version"] = version;
        j["seed"] = seed;
        j["size"] = size;
        j["num_classes"] = kSynthClasses;
        j["labels"] = {{"0", "background"}, {"1", "outer"}, {"2", "middle"}, {"3", "inner"}};
        nlohmann::json cm = nlohmann::json::object();
        for (const auto& c : class_map) cm[c.name] = std::vector<int>(c.labels.begin(), c.labels.end());
        j["class_map"] = cm;
        j["cases"] = nlohmann::json::array();
        for (std::size_t i = 0; i < case_ids.size(); ++i)
            j["cases"].push_back({{"case_id", case_ids[i]}, {"image", images[i]}, {"labels", labels[i]}});
        return j;
    }

    static DatasetManifest from_json(const nlohmann::json& j) {
        try {
            DatasetManifest m;
            m.seed = j.at("seed").get<std::uint64_t>();
            m.size = j.at("size").get<int>();
            m.version = j.at("version").get<int>();
            m.class_map.clear();
            for (auto it = j.at("class_map").begin(); it != j.at("class_map").end(); ++it) {
                const auto v = it.value().get<std::vector<int>>();
                m.class_map.push_back({it.key(), std::set<int>(v.begin(), v.end())});
            }
            std::set<std::string> seen;
            for (const auto& c : j.at("cases")) {
                m.case_ids.push_back(c.at("case_id").get<std::string>());
                m.images.push_back(c.at("image").get<std::string>());
                m.labels.push_back(c.at("labels").get<std::string>());
                if (!seen.insert(m.case_ids.back()).second) throw DataError("manifest: duplicate case_id " + m.case_ids.back());
            }
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("manifest: ") + e.what());
        }
    }
};

/// Writes images/<id>.tsr (float32, (1,S,S)), labels/<id>.tsr (float32, (S,S)) and manifest.json.
inline DatasetManifest generate(const std::filesystem::path& dir, int count, int size, std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("synth: count must be >= 1");
    if (size < 32 || (size & (size - 1)) != 0) throw InvalidArgument("synth: size must be a power of two >= 32");
    DatasetManifest m;
    m.seed = seed;
    m.size = size;
    for (int i = 0; i < count; ++i) {
        const SynthCase c = generate_case(size, seed, i);
        const std::string img = "images/" + c.case_id + ".tsr", lab = "labels/" + c.case_id + ".tsr";
        write_tsr(dir / img, c.image);
        write_tsr(dir / lab, Tensor<float>({size, size}, std::vector<float>(c.labels.labels.begin(), c.labels.labels.end())));
        m.case_ids.push_back(c.case_id);
        m.images.push_back(img);
        m.labels.push_back(lab);
    }
    write_bytes(dir / "manifest.json", m.to_json().dump(2) + "\n");
    return m;
}

struct LoadedCase {
    std::string case_id;
    Tensor<float> image;  // (1,S,S), raw intensities
    LabelMask labels;
};

inline DatasetManifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    if (!std::filesystem::exists(path)) throw DataError("no manifest.json in " + dir.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest.json: ") + e.what());
    }
    return DatasetManifest::from_json(j);
}

inline std::vector<LoadedCase> load_dataset(const std::filesystem::path& dir) {
    const DatasetManifest m = read_manifest(dir);
    std::vector<LoadedCase> out;
    for (std::size_t i = 0; i < m.case_ids.size(); ++i) {
        LoadedCase c;
        c.case_id = m.case_ids[i];
        c.image = read_tsr<float>(dir / m.images[i]);
        const Tensor<float> lab = read_tsr<float>(dir / m.labels[i]);
        if (c.image.ndim() != 3 || c.image.dim(0) != 1 || lab.ndim() != 2 || lab.dim(0) != c.image.dim(1) ||
            lab.dim(1) != c.image.dim(2))
            throw DataError("dataset: inconsistent shapes for " + c.case_id);
        std::vector<int> l(lab.size());
        for (std::size_t k = 0; k < l.size(); ++k) {
            const float v = lab[k];
            if (v < 0 || v >= kSynthClasses || v != std::floor(v)) throw DataError("dataset: bad label value in " + c.case_id);
            l[k] = static_cast<int>(v);
        }
        c.labels = LabelMask({lab.dim(0), lab.dim(1)}, std::move(l), {1.0, 1.0});
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace mgnets
