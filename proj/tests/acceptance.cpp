// Acceptance run: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--only AC1,AC6,...] [--strict]
// Exit status is non-zero on an exception, or with --strict on any FAIL.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "mgnets/autodiff.hpp"
#include "mgnets/cyclegraph.hpp"
#include "mgnets/mgsolve.hpp"
#include "mgnets/segmetrics.hpp"
#include "mgnets/segnet.hpp"
#include "mgnets/synthdata.hpp"

using namespace mgnets;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string f(const char* fmt, double v) { return cli::fmt(fmt, v); }

// ---------------------------------------------------------------- AC1

Outcome ac1() {
    const auto t0 = Clock::now();
    const PoissonProblem p = cli::model_problem(2, 63);
    const GridHierarchy H(2, 63);
    const SmootherConfig cfg;  // Gauss-Seidel, 2 pre / 2 post
    const double tiny = 1e-300;
    const auto v = solve(H, p.rhs, CycleKind::V, cfg, tiny, 5).history;
    const auto w = solve(H, p.rhs, CycleKind::W, cfg, tiny, 5).history;
    const auto g = solve(H, p.rhs, CycleKind::FMG, cfg, tiny, 5).history;
    bool ordered = v.size() == 6 && w.size() == 6 && g.size() == 6;
    double worst_rho = 0;
    for (int c = 1; ordered && c <= 5; ++c) {
        ordered = g[c].residual_l2 <= w[c].residual_l2 && w[c].residual_l2 <= v[c].residual_l2;
        worst_rho = std::max(worst_rho, v[c].residual_l2 / v[c - 1].residual_l2);
    }
    const double dt = seconds_since(t0);
    const bool pass = ordered && worst_rho <= 0.25 && dt < 5.0;
    return {pass, std::string("FMG<=W<=V at cycles 1-5: ") + (ordered ? "yes" : "no") + ", worst V factor " +
                      f("%.4f", worst_rho) + ", cycle-5 residuals V " + f("%.3e", v[5].residual_l2) + " W " +
                      f("%.3e", w[5].residual_l2) + " FMG " + f("%.3e", g[5].residual_l2) + ", " + f("%.2f", dt) + " s"};
}

// ---------------------------------------------------------------- AC2

Outcome ac2() {
    const auto t0 = Clock::now();
    const int n = 127;
    const PoissonProblem p = cli::model_problem(1, n);
    const double h = p.grid.h();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0 / (h * h);
        if (i > 0) A(i, i - 1) = -1.0 / (h * h);
        if (i + 1 < n) A(i, i + 1) = -1.0 / (h * h);
    }
    const Eigen::VectorXd ud = A.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(p.rhs.data(), n));
    const auto u = fmg_cycle(GridHierarchy(1, n), p.rhs, SmootherConfig{});
    double alg = 0, disc = 0;
    for (int i = 0; i < n; ++i) {
        alg = std::max(alg, std::abs(u[i] - ud[i]));
        disc = std::max(disc, std::abs(ud[i] - std::sin(std::numbers::pi * (i + 1) * h)));
    }
    const double dt = seconds_since(t0);
    return {alg <= 2.0 * disc && dt < 1.0, "max algebraic error " + f("%.3e", alg) + " vs discretization error " +
                                               f("%.3e", disc) + " (ratio " + f("%.3f", alg / disc) + "), " +
                                               f("%.3f", dt) + " s"};
}

// ---------------------------------------------------------------- AC3

Outcome ac3() {
    struct Row {
        const char* fam;
        int depth;
        long long target;
    };
    const Row rows[] = {{"unet", 3, 5608036},   {"unet", 4, 22589796},  {"unet", 5, 90500964},
                        {"fmgnet", 3, 1108356}, {"fmgnet", 4, 1862980}, {"fmgnet", 5, 2847652},
                        {"wnet", 3, 1366372},   {"wnet", 4, 3235684},   {"wnet", 5, 7886692}};
    const fs::path out = fs::temp_directory_path() / "mgnets_acceptance_params";
    fs::remove_all(out);
    int exact = 0;
    bool all_within = true;
    std::string misses;
    for (const auto& r : rows) {
        const auto run = [&](std::vector<std::string> extra) {
            std::vector<std::string> a{"mgnets", "params", "--family", r.fam, "--depth", std::to_string(r.depth), "--dims", "3",
                                       "--expect", std::to_string(r.target), "--out", out.string()};
            a.insert(a.end(), extra.begin(), extra.end());
            std::vector<const char*> argv;
            for (const auto& s : a) argv.push_back(s.c_str());
            std::ostringstream o, e;
            return cli::run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
        };
        if (run({}) == 0) {
            ++exact;
            continue;
        }
        const bool within = run({"--rel-tol", "0.02"}) == 0;
        all_within = all_within && within;
        cli::ParamsOpts o;
        o.family = r.fam;
        o.depth = r.depth;
        const auto [spec, conv] = cli::params_setup(o);
        const auto n = count_parameters(build_graph(spec), spec, conv);
        misses += std::string(" ") + r.fam + " d" + std::to_string(r.depth) + " " + std::to_string(n) + " (" +
                  f("%+.2f%%", 100.0 * static_cast<double>(n - r.target) / static_cast<double>(r.target)) + ")";
    }
    fs::remove_all(out);
    const bool report = fs::exists(fs::path(MGNETS_SOURCE_DIR) / "docs" / "param_counts.md");
    if (exact == 9) return {true, "9/9 exact"};
    return {all_within && report, std::to_string(exact) + "/9 exact; fallback <=2%:" + misses +
                                      (report ? "; discrepancy report docs/param_counts.md" : "; report missing")};
}

// ---------------------------------------------------------------- AC4

using GT = Tape<double>;
using BuildFn = std::function<Var(GT&, const std::vector<Var>&)>;

Tensor<double> rand_t(const std::vector<int>& s, Rng& rng, double lo = -1, double hi = 1) {
    Tensor<double> t(s);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

/// Max relative error of the reverse-mode gradient of sum(c * build(inputs)) against central differences.
double fd_check(const BuildFn& build, std::vector<Tensor<double>> inputs, Rng& rng) {
    Tensor<double> proj;
    const auto eval = [&](std::vector<Tensor<double>>& in, bool grads, std::vector<Tensor<double>>* g) {
        GT t;
        std::vector<Var> vs;
        for (auto& x : in) vs.push_back(t.leaf(x, grads));
        const Var y = build(t, vs);
        if (proj.empty()) proj = rand_t(t.value(y).shape(), rng);
        const Var l = t.value(y).size() == 1 ? y : weighted_sum(t, y, proj);
        if (grads) {
            t.backward(l);
            for (auto v : vs) g->push_back(t.has_grad(v) ? t.grad(v) : Tensor<double>(t.value(v).shape()));
        }
        return t.value(l)[0];
    };
    std::vector<Tensor<double>> g;
    eval(inputs, true, &g);
    double worst = 0;
    const double h = 1e-5;
    for (std::size_t k = 0; k < inputs.size(); ++k)
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x0 = inputs[k][i];
            inputs[k][i] = x0 + h;
            const double fp = eval(inputs, false, nullptr);
            inputs[k][i] = x0 - h;
            const double fm = eval(inputs, false, nullptr);
            inputs[k][i] = x0;
            const double fd = (fp - fm) / (2 * h), an = g[k][i];
            // Denominator floor 1e-4: exact-zero gradients (e.g. a bias followed by batch norm) vs roundoff.
            worst = std::max(worst, std::abs(fd - an) / std::max(1e-4, std::abs(fd) + std::abs(an)));
        }
    return worst;
}

Outcome ac4() {
    const auto t0 = Clock::now();
    struct Case {
        std::string name;
        std::function<std::pair<BuildFn, std::vector<Tensor<double>>>(int, Rng&)> make;
    };
    const std::vector<int> N{1, 2, 2}, C{1, 2, 3}, H{3, 4, 5}, W{4, 3, 6};
    auto onehot = [](const std::vector<int>& s, Rng& rng) {
        Tensor<double> y(s);
        const int HW = s[2] * s[3];
        for (int n = 0; n < s[0]; ++n)
            for (int i = 0; i < HW; ++i) y[(static_cast<std::size_t>(n) * s[1] + rng.below(s[1])) * HW + i] = 1;
        return y;
    };
    std::vector<Case> cases{
        {"conv2d", [&](int i, Rng& r) {
             const int k = i == 2 ? 1 : 3;
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [](GT& t, const std::vector<Var>& v) { return conv2d(t, v[0], v[1], v[2]); },
                 {rand_t({N[i], C[i], H[i], W[i]}, r), rand_t({2, C[i], k, k}, r), rand_t({2}, r)}};
         }},
        {"conv2d_transpose", [&](int i, Rng& r) {
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [](GT& t, const std::vector<Var>& v) { return conv2d_transpose(t, v[0], v[1], v[2]); },
                 {rand_t({N[i], C[i], H[i], W[i]}, r), rand_t({3, C[i], 2, 2}, r), rand_t({3}, r)}};
         }},
        {"maxpool2", [&](int i, Rng& r) {
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [](GT& t, const std::vector<Var>& v) { return maxpool2(t, v[0]); },
                 {rand_t({N[i], C[i], 2 * H[i], 2 * W[i]}, r)}};
         }},
        {"relu", [&](int i, Rng& r) {
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [](GT& t, const std::vector<Var>& v) { return relu(t, v[0]); }, {rand_t({N[i], C[i], H[i], W[i]}, r)}};
         }},
        {"concat_channels", [&](int i, Rng& r) {
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [](GT& t, const std::vector<Var>& v) { return concat_channels(t, {v[0], v[1]}); },
                 {rand_t({N[i], C[i], H[i], W[i]}, r), rand_t({N[i], 2, H[i], W[i]}, r)}};
         }},
        {"batchnorm(train)", [&](int i, Rng& r) {
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [](GT& t, const std::vector<Var>& v) {
                     BatchNormState<double> s;
                     return batchnorm(t, v[0], v[1], v[2], s, BatchNormMode::Train);
                 },
                 {rand_t({N[i] + 1, C[i], H[i], W[i]}, r), rand_t({C[i]}, r, 0.5, 1.5), rand_t({C[i]}, r)}};
         }},
        {"batchnorm(batch-stats)", [&](int i, Rng& r) {
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [](GT& t, const std::vector<Var>& v) {
                     BatchNormState<double> s;
                     return batchnorm(t, v[0], v[1], v[2], s, BatchNormMode::BatchStats);
                 },
                 {rand_t({N[i] + 1, C[i], H[i], W[i]}, r), rand_t({C[i]}, r, 0.5, 1.5), rand_t({C[i]}, r)}};
         }},
        {"batchnorm(eval)", [&](int i, Rng& r) {
             BatchNormState<double> s{std::vector<double>(C[i]), std::vector<double>(C[i]), true};
             for (int c = 0; c < C[i]; ++c) {
                 s.running_mean[c] = r.uniform(-1, 1);
                 s.running_var[c] = r.uniform(0.5, 2);
             }
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [s](GT& t, const std::vector<Var>& v) mutable {
                     return batchnorm(t, v[0], v[1], v[2], s, BatchNormMode::Eval);
                 },
                 {rand_t({N[i], C[i], H[i], W[i]}, r), rand_t({C[i]}, r, 0.5, 1.5), rand_t({C[i]}, r)}};
         }},
        {"softmax_cross_entropy", [&](int i, Rng& r) {
             const std::vector<int> s{N[i], C[i] + 1, H[i], W[i]};
             const Tensor<double> y = onehot(s, r);
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [y](GT& t, const std::vector<Var>& v) { return softmax_cross_entropy(t, v[0], y); }, {rand_t(s, r, -2, 2)}};
         }},
        {"dice_ce_loss", [&](int i, Rng& r) {
             const std::vector<int> s{N[i], C[i] + 1, H[i], W[i]};
             const Tensor<double> y = onehot(s, r);
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [y](GT& t, const std::vector<Var>& v) { return dice_ce_loss(t, v[0], y); }, {rand_t(s, r, -2, 2)}};
         }},
        {"weighted_sum", [&](int i, Rng& r) {
             const Tensor<double> c = rand_t({N[i], C[i], H[i], W[i]}, r);
             return std::pair<BuildFn, std::vector<Tensor<double>>>{
                 [c](GT& t, const std::vector<Var>& v) { return weighted_sum(t, v[0], c); },
                 {rand_t({N[i], C[i], H[i], W[i]}, r)}};
         }},
        {"two-block network", [&](int i, Rng& r) {
             // conv-bn-relu x2, pool, block, up, concat skip, block, 1x1 head, cross-entropy.
             const int c0 = C[i], f = 2, h = 4, w = 4 + 2 * (i % 2), n = 2;
             const std::vector<int> ys{n, 3, h, w};
             const Tensor<double> y = onehot(ys, r);
             std::vector<Tensor<double>> in{rand_t({n, c0, h, w}, r)};
             auto add_block = [&](int ci) {
                 for (int u = 0; u < 2; ++u) {
                     in.push_back(rand_t({f, u == 0 ? ci : f, 3, 3}, r, -0.5, 0.5));
                     in.push_back(rand_t({f}, r));
                     in.push_back(rand_t({f}, r, 0.5, 1.5));
                     in.push_back(rand_t({f}, r));
                 }
             };
             add_block(c0);
             add_block(f);
             in.push_back(rand_t({f, f, 2, 2}, r, -0.5, 0.5));
             in.push_back(rand_t({f}, r));
             add_block(2 * f);
             in.push_back(rand_t({3, f, 1, 1}, r));
             in.push_back(rand_t({3}, r));
             BuildFn b = [y](GT& t, const std::vector<Var>& v) {
                 std::size_t k = 1;
                 auto block = [&](Var x) {
                     for (int u = 0; u < 2; ++u) {
                         BatchNormState<double> s;
                         x = relu(t, batchnorm(t, conv2d(t, x, v[k], v[k + 1]), v[k + 2], v[k + 3], s, BatchNormMode::Train));
                         k += 4;
                     }
                     return x;
                 };
                 const Var e = block(v[0]);
                 const Var c = block(maxpool2(t, e));
                 const Var up = conv2d_transpose(t, c, v[k], v[k + 1]);
                 k += 2;
                 const Var d = block(concat_channels(t, {up, e}));
                 return softmax_cross_entropy(t, conv2d(t, d, v[k], v[k + 1]), y);
             };
             return std::pair<BuildFn, std::vector<Tensor<double>>>{b, in};
         }},
    };
    double worst = 0;
    std::string worst_name;
    for (const auto& c : cases)
        for (int i = 0; i < 3; ++i) {
            Rng rng(derive_seed(1000 + static_cast<std::uint64_t>(i), c.name.size()));
            auto [build, inputs] = c.make(i, rng);
            const double e = fd_check(build, inputs, rng);
            if (e > worst) {
                worst = e;
                worst_name = c.name;
            }
        }
    const double dt = seconds_since(t0);
    return {worst < 1e-5 && dt < 60.0, std::to_string(cases.size()) + " checks x 3 shapes, max relative error " +
                                           f("%.2e", worst) + " (" + worst_name + "), " + f("%.2f", dt) + " s"};
}

// ---------------------------------------------------------------- AC5

BinaryMask random_mask(const std::vector<int>& shape, Rng& rng, double p) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    BinaryMask m{shape, std::vector<std::uint8_t>(n)};
    for (auto& v : m.on) v = rng.uniform() < p;
    return m;
}

std::vector<std::vector<double>> brute_surface(const BinaryMask& m, const std::vector<double>& sp) {
    const bool three = m.shape.size() == 3;
    const int a = m.shape[0], b = m.shape[1], c = three ? m.shape[2] : 1;
    auto on = [&](int i, int j, int k) {
        return i >= 0 && j >= 0 && k >= 0 && i < a && j < b && k < c && m.on[(static_cast<std::size_t>(i) * b + j) * c + k];
    };
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < b; ++j)
            for (int k = 0; k < c; ++k) {
                if (!on(i, j, k)) continue;
                bool s = !on(i - 1, j, k) || !on(i + 1, j, k) || !on(i, j - 1, k) || !on(i, j + 1, k);
                if (three) s = s || !on(i, j, k - 1) || !on(i, j, k + 1);
                if (!s) continue;
                if (three)
                    pts.push_back({i * sp[0], j * sp[1], k * sp[2]});
                else
                    pts.push_back({i * sp[0], j * sp[1]});
            }
    return pts;
}

Outcome ac5() {
    const auto t0 = Clock::now();
    Rng rng(5005);
    double worst = 0;
    int compared = 0;
    for (int t = 0; t < 100; ++t) {
        std::vector<int> shape;
        std::vector<double> sp;
        const int dims = t % 2 ? 2 : 3;
        for (int d = 0; d < dims; ++d) {
            shape.push_back(2 + static_cast<int>(rng.below(15)));
            sp.push_back(rng.uniform(0.5, 2.0));
        }
        const auto A = random_mask(shape, rng, rng.uniform(0.05, 0.6)), B = random_mask(shape, rng, rng.uniform(0.05, 0.6));
        const auto sa = brute_surface(A, sp), sb = brute_surface(B, sp);
        const auto h = hd95(A, B, sp), s = asd(A, B, sp);
        if (sa.empty() || sb.empty()) {
            if (h || s) return {false, "defined distance for an empty surface at pair " + std::to_string(t)};
            continue;
        }
        auto directed = [](const auto& P, const auto& Q) {
            std::vector<double> d;
            for (const auto& p : P) {
                double best = INFINITY;
                for (const auto& q : Q) {
                    double ss = 0;
                    for (std::size_t k = 0; k < p.size(); ++k) ss += (p[k] - q[k]) * (p[k] - q[k]);
                    best = std::min(best, std::sqrt(ss));
                }
                d.push_back(best);
            }
            return d;
        };
        auto p95 = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            const std::size_t r = (95 * v.size() + 99) / 100;
            return v[r - 1];
        };
        const auto dab = directed(sa, sb), dba = directed(sb, sa);
        double sum = 0;
        for (double d : dab) sum += d;
        for (double d : dba) sum += d;
        worst = std::max(worst, std::abs(*h - std::max(p95(dab), p95(dba))));
        worst = std::max(worst, std::abs(*s - sum / static_cast<double>(dab.size() + dba.size())));
        ++compared;
    }
    // Dice properties.
    bool dice_ok = true;
    for (int t = 0; t < 100; ++t) {
        const auto A = random_mask({9, 7}, rng, 0.4), B = random_mask({9, 7}, rng, 0.3);
        const double d = dice(A, B);
        dice_ok = dice_ok && d == dice(B, A) && d >= 0 && d <= 1 && dice(A, A) == 1.0;
    }
    BinaryMask a{{4, 4}, std::vector<std::uint8_t>(16)}, b = a;
    for (int i : {0, 1, 4, 5}) a.on[i] = 1;
    for (int i : {0, 1, 14, 15}) b.on[i] = 1;
    dice_ok = dice_ok && dice(a, b) == 0.5;
    const double dt = seconds_since(t0);
    return {worst <= 1e-9 && dice_ok && dt < 60.0, std::to_string(compared) + " non-empty pairs of 100, max deviation " +
                                                       f("%.2e", worst) + ", Dice properties " + (dice_ok ? "ok" : "FAILED") +
                                                       ", " + f("%.2f", dt) + " s"};
}

// ---------------------------------------------------------------- AC6

Outcome ac6() {
    const auto t0 = Clock::now();
    std::vector<Sample<float>> data;
    for (int i = 0; i < 200; ++i) {
        const SynthCase c = generate_case(64, 42, i);
        data.push_back(make_sample<float>(LoadedCase{c.case_id, c.image, c.labels}));
    }
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed : {42u, 43u, 44u}) {
        double val[3];
        int k = 0;
        for (Family fam : {Family::UNet, Family::FMGNet, Family::WNet}) {
            Model<float> m = instantiate<float>(ArchSpec::make(fam, 3, 2, 1, kSynthClasses, 16), seed);
            TrainConfig cfg;
            cfg.seed = seed;
            cfg.epochs = 25;
            val[k++] = train(m, data, cfg).entries.back().val_loss;
        }
        const bool win = std::min(val[1], val[2]) <= val[0];
        wins += win;
        detail += " seed " + std::to_string(seed) + ": unet " + f("%.4f", val[0]) + " fmgnet " + f("%.4f", val[1]) + " wnet " +
                  f("%.4f", val[2]) + (win ? " (min<=unet);" : " (unet lower);");
        std::cout << "  AC6" << detail.substr(detail.rfind(" seed")) << std::endl;
    }
    const double dt = seconds_since(t0);
    return {wins >= 2 && dt < 1800.0, std::to_string(wins) + "/3 seeds with min(FMG-Net, W-Net) <= U-Net at epoch 25;" +
                                          detail + " " + f("%.0f", dt) + " s"};
}

// ---------------------------------------------------------------- AC7

Outcome ac7() {
    const auto t0 = Clock::now();
    int agree = 0, total = 0;
    for (int d = 2; d <= 6; ++d) {
        const GridHierarchy H(1, 127, d);
        const std::vector<double> rhs(127, 1.0), u(127, 0.0);
        CycleTrace tv, tw, tf;
        v_cycle(H, u, rhs, SmootherConfig{}, 0, &tv);
        w_cycle(H, u, rhs, SmootherConfig{}, 0, &tw);
        fmg_cycle(H, rhs, SmootherConfig{}, &tf);
        auto fmg = schedule(Family::FMGNet, d).levels;
        fmg.erase(fmg.begin(), fmg.begin() + (d - 1));
        agree += schedule(Family::UNet, d).levels == tv.levels;
        agree += schedule(Family::WNet, d).levels == tw.levels;
        agree += fmg == tf.levels;
        total += 3;
    }
    const double dt = seconds_since(t0);
    return {agree == total && dt < 1.0, std::to_string(agree) + "/" + std::to_string(total) +
                                            " (family, depth) traces equal their schedules, " + f("%.3f", dt) + " s"};
}

// ---------------------------------------------------------------- AC8

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_bytes(e.path());
    return files;
}

Outcome ac8() {
    const auto t0 = Clock::now();
    const fs::path a = fs::temp_directory_path() / "mgnets_acceptance_repro_a";
    const fs::path b = fs::temp_directory_path() / "mgnets_acceptance_repro_b";
    for (const auto& dir : {a, b}) {
        fs::remove_all(dir);
        const std::vector<std::string> args{"mgnets", "repro", "--out", dir.string(), "--count", "20", "--test-count", "6",
                                            "--size", "32", "--epochs", "3", "--base", "4", "--batch", "4", "--precision",
                                            "float64", "--poisson-n", "31"};
        std::vector<const char*> argv;
        for (const auto& s : args) argv.push_back(s.c_str());
        std::ostringstream o, e;
        if (cli::run_cli(static_cast<int>(argv.size()), argv.data(), o, e) != 0) return {false, "repro failed: " + e.str()};
    }
    const auto sa = snapshot(a), sb = snapshot(b);
    int csv = 0, ckpt = 0;
    bool same = sa.size() == sb.size();
    for (const auto& [k, v] : sa) {
        const auto it = sb.find(k);
        same = same && it != sb.end() && it->second == v;
        csv += k.ends_with(".csv");
        ckpt += k.find("checkpoint_") != std::string::npos;
    }
    fs::remove_all(a);
    fs::remove_all(b);
    const double dt = seconds_since(t0);
    return {same && csv > 0 && ckpt > 0, std::to_string(sa.size()) + " files (" + std::to_string(csv) + " CSVs, " +
                                             std::to_string(ckpt) + " checkpoint files) " +
                                             (same ? "byte-identical" : "DIFFER") + " across two runs, float64, " +
                                             std::to_string(cli::thread_count()) + " thread, " + f("%.1f", dt) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> only;
    bool strict = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--strict") {
            strict = true;
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string x; std::getline(ss, x, ',');) only.insert(x);
        } else {
            std::cerr << "usage: acceptance [--only AC1,AC2,...] [--strict]\n";
            return 2;
        }
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}};
    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            std::cout << id << " ERROR " << e.what() << std::endl;
            return 1;
        }
        failed += !o.pass;
        std::cout << id << " " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << std::endl;
    }
    return strict && failed ? 1 : 0;
}
