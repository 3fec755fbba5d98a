#pragma once

// Geometric multigrid for the finite-difference Poisson problem -Δu = f on the
// unit interval/square with zero Dirichlet boundaries.
//
// Transfer operators are full weighting (restriction) and linear interpolation
// (prolongation), so prolong = 2^dim · restrictᵀ. Coarsest grids are solved
// exactly with a cached dense Cholesky factorization.
//
// Work units: one smoothing sweep on level l costs 2^(-dim·l) (the finest
// sweep costs 1). Grid transfers and the coarse solve are free.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mgnets/error.hpp"

namespace mgnets {

/// Uniform grid of n interior points per axis on [0,1]^dim.
struct Grid {
    int dim = 1;
    int n = 1;

    double h() const { return 1.0 / (n + 1); }
    std::size_t size() const { return dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n; }
    bool coarsenable() const { return n >= 3 && n % 2 == 1; }
    Grid coarser() const { return {dim, (n - 1) / 2}; }
    Grid finer() const { return {dim, 2 * n + 1}; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

namespace detail {

inline bool is_pow2_minus_1(int n) {
    if (n < 1) return false;
    const unsigned v = static_cast<unsigned>(n) + 1u;
    return (v & (v - 1u)) == 0u;
}

inline void check_size(const Grid& g, std::size_t len, const char* what) {
    if (len != g.size()) {
        throw InvalidArgument(std::string(what) + ": expected " + std::to_string(g.size()) + " entries, got " +
                              std::to_string(len));
    }
}

}  // namespace detail

/// A Poisson model problem: grid plus f sampled at interior points.
struct PoissonProblem {
    Grid grid;
    std::vector<double> rhs;

    /// Samples f at interior points. 1D: f(x); 2D: f(x, y) with x varying fastest.
    static PoissonProblem sampled(int dim, int n, const std::function<double(double, double)>& f) {
        if (dim != 1 && dim != 2) throw InvalidArgument("PoissonProblem: dim must be 1 or 2");
        if (!detail::is_pow2_minus_1(n)) throw InvalidArgument("PoissonProblem: n must be 2^k - 1");
        PoissonProblem p{{dim, n}, {}};
        const double h = p.grid.h();
        p.rhs.resize(p.grid.size());
        if (dim == 1) {
            for (int i = 0; i < n; ++i) p.rhs[i] = f((i + 1) * h, 0.0);
        } else {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) p.rhs[i + static_cast<std::size_t>(n) * j] = f((i + 1) * h, (j + 1) * h);
        }
        return p;
    }
};

enum class SmootherKind { WeightedJacobi, GaussSeidel };

struct SmootherConfig {
    SmootherKind kind = SmootherKind::GaussSeidel;
    double omega = 2.0 / 3.0;
    int pre_sweeps = 2;
    int post_sweeps = 2;

    void validate() const {
        if (kind == SmootherKind::WeightedJacobi && !(omega > 0.0 && omega <= 1.0))
            throw InvalidArgument("SmootherConfig: omega must lie in (0, 1]");
        if (pre_sweeps < 0 || post_sweeps < 0) throw InvalidArgument("SmootherConfig: negative sweep count");
        if (pre_sweeps + post_sweeps < 1) throw InvalidArgument("SmootherConfig: need at least one sweep per cycle");
    }
};

/// Level visits and work recorded while a cycle runs.
///
/// Consecutive visits to the same level are merged: a W-cycle iterating its
/// coarse problem twice shows up as 0,1,2,1,2,1,0 rather than 0,1,2,1,1,2,1,0.
struct CycleTrace {
    std::vector<int> levels;
    double work_units = 0.0;

    void visit(int level) {
        if (levels.empty() || levels.back() != level) levels.push_back(level);
    }
};

struct ResidualEntry {
    int cycle = 0;
    double work_units = 0.0;
    double residual_l2 = 0.0;
};

using ResidualHistory = std::vector<ResidualEntry>;

// ---------------------------------------------------------------- operators

/// A·u for the 3-point (1D) or 5-point (2D) Laplacian with zero Dirichlet boundaries.
inline std::vector<double> apply_operator(const Grid& g, std::span<const double> u) {
    detail::check_size(g, u.size(), "apply_operator");
    const int n = g.n;
    const double inv_h2 = 1.0 / (g.h() * g.h());
    std::vector<double> out(u.size());
    if (g.dim == 1) {
        for (int i = 0; i < n; ++i) {
            const double l = i > 0 ? u[i - 1] : 0.0;
            const double r = i + 1 < n ? u[i + 1] : 0.0;
            out[i] = (2.0 * u[i] - l - r) * inv_h2;
        }
        return out;
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const std::size_t k = i + static_cast<std::size_t>(n) * j;
            const double l = i > 0 ? u[k - 1] : 0.0;
            const double r = i + 1 < n ? u[k + 1] : 0.0;
            const double d = j > 0 ? u[k - n] : 0.0;
            const double t = j + 1 < n ? u[k + n] : 0.0;
            out[k] = (4.0 * u[k] - l - r - d - t) * inv_h2;
        }
    }
    return out;
}

inline std::vector<double> apply_operator(const PoissonProblem& p, std::span<const double> u) {
    return apply_operator(p.grid, u);
}

/// f - A·u.
inline std::vector<double> residual(const Grid& g, std::span<const double> u, std::span<const double> rhs) {
    detail::check_size(g, rhs.size(), "residual");
    std::vector<double> r = apply_operator(g, u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
    return r;
}

inline double norm_l2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

namespace detail {

inline void gauss_seidel_sweep(const Grid& g, std::vector<double>& u, std::span<const double> f) {
    const int n = g.n;
    const double h2 = g.h() * g.h();
    if (g.dim == 1) {
        for (int i = 0; i < n; ++i) {
            const double l = i > 0 ? u[i - 1] : 0.0;
            const double r = i + 1 < n ? u[i + 1] : 0.0;
            u[i] = 0.5 * (h2 * f[i] + l + r);
        }
        return;
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const std::size_t k = i + static_cast<std::size_t>(n) * j;
            const double l = i > 0 ? u[k - 1] : 0.0;
            const double r = i + 1 < n ? u[k + 1] : 0.0;
            const double d = j > 0 ? u[k - n] : 0.0;
            const double t = j + 1 < n ? u[k + n] : 0.0;
            u[k] = 0.25 * (h2 * f[k] + l + r + d + t);
        }
    }
}

inline void jacobi_sweep(const Grid& g, std::vector<double>& u, std::span<const double> f, double omega) {
    const std::vector<double> r = residual(g, u, f);
    const double scale = omega * g.h() * g.h() / (2.0 * g.dim);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += scale * r[k];
}

inline void smooth_inplace(const Grid& g, std::vector<double>& u, std::span<const double> f,
                           const SmootherConfig& cfg, int sweeps) {
    for (int s = 0; s < sweeps; ++s) {
        if (cfg.kind == SmootherKind::GaussSeidel)
            gauss_seidel_sweep(g, u, f);
        else
            jacobi_sweep(g, u, f, cfg.omega);
    }
}

}  // namespace detail

/// `sweeps` relaxation sweeps (lexicographic Gauss-Seidel or weighted Jacobi).
inline std::vector<double> smooth(const Grid& g, std::span<const double> u, std::span<const double> rhs,
                                  const SmootherConfig& cfg, int sweeps) {
    detail::check_size(g, u.size(), "smooth");
    detail::check_size(g, rhs.size(), "smooth");
    if (sweeps < 0) throw InvalidArgument("smooth: negative sweep count");
    std::vector<double> out(u.begin(), u.end());
    detail::smooth_inplace(g, out, rhs, cfg, sweeps);
    return out;
}

// ---------------------------------------------------------------- transfers

/// Full weighting: [1,2,1]/4 per axis, centred on the fine points that coincide with coarse points.
inline std::vector<double> restrict_full_weighting(const Grid& fine, std::span<const double> v) {
    if (!fine.coarsenable()) throw InvalidArgument("restrict: fine grid with n=" + std::to_string(fine.n) + " cannot be coarsened");
    detail::check_size(fine, v.size(), "restrict");
    const Grid coarse = fine.coarser();
    const int m = coarse.n;
    const int nf = fine.n;
    std::vector<double> out(coarse.size());
    if (fine.dim == 1) {
        for (int i = 0; i < m; ++i) {
            const int c = 2 * i + 1;
            out[i] = 0.25 * (v[c - 1] + 2.0 * v[c] + v[c + 1]);
        }
        return out;
    }
    const auto at = [&](int i, int j) { return v[i + static_cast<std::size_t>(nf) * j]; };
    for (int J = 0; J < m; ++J) {
        for (int I = 0; I < m; ++I) {
            const int i = 2 * I + 1;
            const int j = 2 * J + 1;
            const double centre = at(i, j);
            const double edges = at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1);
            const double corners = at(i - 1, j - 1) + at(i + 1, j - 1) + at(i - 1, j + 1) + at(i + 1, j + 1);
            out[I + static_cast<std::size_t>(m) * J] = (4.0 * centre + 2.0 * edges + corners) / 16.0;
        }
    }
    return out;
}

/// Linear (bilinear in 2D) interpolation with zero boundary values.
inline std::vector<double> prolong_linear(const Grid& coarse, std::span<const double> v) {
    detail::check_size(coarse, v.size(), "prolong");
    const Grid fine = coarse.finer();
    const int m = coarse.n;
    const int nf = fine.n;
    // Coarse value at coarse index I, zero outside [0, m).
    const auto c1 = [&](int I) { return (I < 0 || I >= m) ? 0.0 : v[I]; };
    if (coarse.dim == 1) {
        std::vector<double> out(fine.size());
        for (int i = 0; i < nf; ++i) {
            if (i % 2 == 1)
                out[i] = c1((i - 1) / 2);
            else
                out[i] = 0.5 * (c1(i / 2 - 1) + c1(i / 2));
        }
        return out;
    }
    const auto c2 = [&](int I, int J) {
        return (I < 0 || I >= m || J < 0 || J >= m) ? 0.0 : v[I + static_cast<std::size_t>(m) * J];
    };
    // Per-axis weights: odd fine index -> one coarse point (weight 1); even -> two (1/2 each).
    std::vector<double> out(fine.size());
    for (int j = 0; j < nf; ++j) {
        const int Ja = j % 2 == 1 ? (j - 1) / 2 : j / 2 - 1;
        const int Jb = j % 2 == 1 ? Ja : j / 2;
        const double wj = j % 2 == 1 ? 1.0 : 0.5;
        for (int i = 0; i < nf; ++i) {
            const int Ia = i % 2 == 1 ? (i - 1) / 2 : i / 2 - 1;
            const int Ib = i % 2 == 1 ? Ia : i / 2;
            const double wi = i % 2 == 1 ? 1.0 : 0.5;
            double s = 0.0;
            if (i % 2 == 1 && j % 2 == 1) {
                s = c2(Ia, Ja);
            } else if (i % 2 == 1) {
                s = wj * (c2(Ia, Ja) + c2(Ia, Jb));
            } else if (j % 2 == 1) {
                s = wi * (c2(Ia, Ja) + c2(Ib, Ja));
            } else {
                s = wi * wj * (c2(Ia, Ja) + c2(Ib, Ja) + c2(Ia, Jb) + c2(Ib, Jb));
            }
            out[i + static_cast<std::size_t>(nf) * j] = s;
        }
    }
    return out;
}

// ---------------------------------------------------------------- hierarchy

/// Nested grids from the finest (level 0) down to the coarsest (level depth-1),
/// with the coarsest operator factorized once.
class GridHierarchy {
public:
    /// depth = 0 selects full coarsening down to n = 1.
    GridHierarchy(int dim, int finest_n, int depth = 0) {
        if (dim != 1 && dim != 2) throw InvalidArgument("GridHierarchy: dim must be 1 or 2");
        if (!detail::is_pow2_minus_1(finest_n)) throw InvalidArgument("GridHierarchy: n must be 2^k - 1");
        int k = 0;
        while ((1 << k) - 1 < finest_n) ++k;
        if (depth == 0) depth = k;
        if (depth < 2 || depth > k)
            throw InvalidArgument("GridHierarchy: depth " + std::to_string(depth) + " not in [2, " + std::to_string(k) + "]");
        Grid g{dim, finest_n};
        for (int l = 0; l < depth; ++l) {
            levels_.push_back(g);
            if (l + 1 < depth) g = g.coarser();
        }
        factorize_coarsest();
    }

    int depth() const { return static_cast<int>(levels_.size()); }
    int coarsest() const { return depth() - 1; }
    int dim() const { return levels_.front().dim; }
    const Grid& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
    const Grid& finest() const { return levels_.front(); }

    /// Exact solve on the coarsest grid.
    std::vector<double> coarse_solve(std::span<const double> rhs) const {
        const std::size_t n = chol_n_;
        detail::check_size(levels_.back(), rhs.size(), "coarse_solve");
        std::vector<double> y(rhs.begin(), rhs.end());
        for (std::size_t i = 0; i < n; ++i) {
            double s = y[i];
            for (std::size_t k = 0; k < i; ++k) s -= chol_[i * n + k] * y[k];
            y[i] = s / chol_[i * n + i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= chol_[k * n + ii] * y[k];
            y[ii] = s / chol_[ii * n + ii];
        }
        return y;
    }

private:
    void factorize_coarsest() {
        const Grid& g = levels_.back();
        const std::size_t n = g.size();
        chol_n_ = n;
        chol_.assign(n * n, 0.0);
        // Assemble A column by column, then Cholesky in place (lower triangle).
        std::vector<double> e(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            e[c] = 1.0;
            const std::vector<double> col = apply_operator(g, e);
            for (std::size_t r = 0; r < n; ++r) chol_[r * n + c] = col[r];
            e[c] = 0.0;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double d = chol_[j * n + j];
            for (std::size_t k = 0; k < j; ++k) d -= chol_[j * n + k] * chol_[j * n + k];
            chol_[j * n + j] = std::sqrt(d);
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = chol_[i * n + j];
                for (std::size_t k = 0; k < j; ++k) s -= chol_[i * n + k] * chol_[j * n + k];
                chol_[i * n + j] = s / chol_[j * n + j];
            }
        }
    }

    std::vector<Grid> levels_;
    std::vector<double> chol_;
    std::size_t chol_n_ = 0;
};

// ---------------------------------------------------------------- cycles

namespace detail {

inline double sweep_cost(const GridHierarchy& H, int level) {
    return std::ldexp(1.0, -H.dim() * level);
}

// One μ-cycle on `level`: pre-smooth, `gamma` iterations on the coarse
// residual problem (starting from zero), prolong and correct, post-smooth.
inline void mu_cycle(const GridHierarchy& H, int level, std::vector<double>& u, std::span<const double> f,
                     const SmootherConfig& cfg, int gamma, CycleTrace* trace) {
    if (level == H.coarsest()) {
        u = H.coarse_solve(f);
        if (trace) trace->visit(level);
        return;
    }
    const Grid& g = H.level(level);
    if (trace) {
        trace->visit(level);
        trace->work_units += cfg.pre_sweeps * sweep_cost(H, level);
    }
    smooth_inplace(g, u, f, cfg, cfg.pre_sweeps);

    const std::vector<double> rc = restrict_full_weighting(g, residual(g, u, f));
    std::vector<double> ec(rc.size(), 0.0);
    for (int it = 0; it < gamma; ++it) mu_cycle(H, level + 1, ec, rc, cfg, gamma, trace);
    const std::vector<double> correction = prolong_linear(H.level(level + 1), ec);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += correction[k];

    if (trace) {
        trace->visit(level);
        trace->work_units += cfg.post_sweeps * sweep_cost(H, level);
    }
    smooth_inplace(g, u, f, cfg, cfg.post_sweeps);
}

inline void check_cycle_args(const GridHierarchy& H, int level, std::span<const double> u, std::span<const double> rhs) {
    if (level < 0 || level >= H.depth()) throw InvalidArgument("cycle: level out of range");
    check_size(H.level(level), u.size(), "cycle(u)");
    check_size(H.level(level), rhs.size(), "cycle(rhs)");
}

}  // namespace detail

/// One V-cycle starting at `level` (single coarse recursion per level).
inline std::vector<double> v_cycle(const GridHierarchy& H, std::span<const double> u, std::span<const double> rhs,
                                   const SmootherConfig& cfg, int level = 0, CycleTrace* trace = nullptr) {
    cfg.validate();
    detail::check_cycle_args(H, level, u, rhs);
    std::vector<double> out(u.begin(), u.end());
    detail::mu_cycle(H, level, out, rhs, cfg, 1, trace);
    return out;
}

/// One W-cycle starting at `level`: every coarse problem is iterated twice.
inline std::vector<double> w_cycle(const GridHierarchy& H, std::span<const double> u, std::span<const double> rhs,
                                   const SmootherConfig& cfg, int level = 0, CycleTrace* trace = nullptr) {
    cfg.validate();
    detail::check_cycle_args(H, level, u, rhs);
    std::vector<double> out(u.begin(), u.end());
    detail::mu_cycle(H, level, out, rhs, cfg, 2, trace);
    return out;
}

/// Full multigrid from a zero guess: restrict f to every level, solve exactly on
/// the coarsest grid, then on each finer level prolong and apply one V-cycle.
inline std::vector<double> fmg_cycle(const GridHierarchy& H, std::span<const double> rhs, const SmootherConfig& cfg,
                                     CycleTrace* trace = nullptr) {
    cfg.validate();
    detail::check_size(H.finest(), rhs.size(), "fmg_cycle");
    std::vector<std::vector<double>> f(static_cast<std::size_t>(H.depth()));
    f[0].assign(rhs.begin(), rhs.end());
    for (int l = 0; l + 1 < H.depth(); ++l) f[l + 1] = restrict_full_weighting(H.level(l), f[l]);

    std::vector<double> u = H.coarse_solve(f.back());
    if (trace) trace->visit(H.coarsest());
    for (int l = H.coarsest() - 1; l >= 0; --l) {
        u = prolong_linear(H.level(l + 1), u);
        detail::mu_cycle(H, l, u, f[l], cfg, 1, trace);
    }
    return u;
}

enum class CycleKind { V, W, FMG };

inline const char* to_string(CycleKind k) {
    switch (k) {
        case CycleKind::V: return "v";
        case CycleKind::W: return "w";
        case CycleKind::FMG: return "fmg";
    }
    return "?";
}

struct SolveResult {
    std::vector<double> u;
    ResidualHistory history;
    bool converged = false;
};

/// Iterates a cycle from u = 0 until ‖r‖/‖f‖ ≤ tol or max_cycles is reached.
///
/// FMG iterates in correction form: each cycle runs a full-multigrid pass on
/// the current residual equation and adds the result (the first pass is
/// plain FMG because u starts at zero).
inline SolveResult solve(const GridHierarchy& H, std::span<const double> rhs, CycleKind kind, const SmootherConfig& cfg,
                         double tol, int max_cycles) {
    if (!(tol > 0.0)) throw InvalidArgument("solve: tol must be positive");
    if (max_cycles < 0) throw InvalidArgument("solve: max_cycles must be non-negative");
    cfg.validate();
    const Grid& g = H.finest();
    detail::check_size(g, rhs.size(), "solve");

    SolveResult out;
    out.u.assign(g.size(), 0.0);
    const double f_norm = norm_l2(rhs);
    double r_norm = norm_l2(residual(g, out.u, rhs));
    double work = 0.0;
    out.history.push_back({0, 0.0, r_norm});
    const auto done = [&] { return f_norm == 0.0 ? r_norm == 0.0 : r_norm / f_norm <= tol; };
    out.converged = done();

    for (int c = 1; c <= max_cycles && !out.converged; ++c) {
        CycleTrace trace;
        switch (kind) {
            case CycleKind::V: detail::mu_cycle(H, 0, out.u, rhs, cfg, 1, &trace); break;
            case CycleKind::W: detail::mu_cycle(H, 0, out.u, rhs, cfg, 2, &trace); break;
            case CycleKind::FMG: {
                const std::vector<double> e = fmg_cycle(H, residual(g, out.u, rhs), cfg, &trace);
                for (std::size_t k = 0; k < e.size(); ++k) out.u[k] += e[k];
                break;
            }
        }
        work += trace.work_units;
        r_norm = norm_l2(residual(g, out.u, rhs));
        out.history.push_back({c, work, r_norm});
        out.converged = done();
    }
    return out;
}

/// CSV with header `cycle,work_units,residual_l2`.
inline std::string history_csv(const ResidualHistory& h) {
    std::string s = "cycle,work_units,residual_l2\n";
    char buf[128];
    for (const auto& e : h) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.17g\n", e.cycle, e.work_units, e.residual_l2);
        s += buf;
    }
    return s;
}

}  // namespace mgnets
