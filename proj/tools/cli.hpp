#pragma once

// mgnets command-line driver. run_cli() holds everything so tests can call it
// in-process; main.cpp only forwards argv.
//
// Exit codes: 0 ok, 2 usage, 3 expectation mismatch, 4 numeric failure,
// 5 incompatible or unreadable data.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mgnets/cyclegraph.hpp"
#include "mgnets/mgsolve.hpp"
#include "mgnets/segmetrics.hpp"
#include "mgnets/segnet.hpp"
#include "mgnets/synthdata.hpp"

namespace mgnets::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kUsage = 2, kMismatch = 3, kNumeric = 4, kData = 5 };

inline constexpr const char* kVersion = "1.0.0";

/// Published 3D parameter counts (four input modalities, four output classes, 32 base features).
inline std::optional<std::int64_t> published_count(Family f, int depth) {
    static const std::map<std::pair<Family, int>, std::int64_t> table{
        {{Family::UNet, 3}, 5608036},   {{Family::UNet, 4}, 22589796},  {{Family::UNet, 5}, 90500964},
        {{Family::FMGNet, 3}, 1108356}, {{Family::FMGNet, 4}, 1862980}, {{Family::FMGNet, 5}, 2847652},
        {{Family::WNet, 3}, 1366372},   {{Family::WNet, 4}, 3235684},   {{Family::WNet, 5}, 7886692},
    };
    const auto it = table.find({f, depth});
    if (it == table.end()) return std::nullopt;
    return it->second;
}

/// Threads requested through MGNETS_THREADS (recorded in sidecars; kernels run single-threaded).
inline int thread_count() {
    const char* s = std::getenv("MGNETS_THREADS");
    if (!s || !*s) return 1;
    const int n = std::atoi(s);
    return n > 0 ? n : 1;
}

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

/// Writes run_<cmd>.json next to a command's outputs. No timestamps, so reruns are byte-identical.
inline void write_sidecar(const fs::path& dir, const std::string& cmd, std::uint64_t seed, const nlohmann::json& args,
                          const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = cmd;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["threads"] = thread_count();
    j["args"] = args;
    j["outputs"] = outputs;
    write_bytes(dir / ("run_" + cmd + ".json"), j.dump(2) + "\n");
}

/// Input path as seen from a sidecar's directory, so output trees stay relocatable.
inline std::string relative_to(const fs::path& dir, const std::string& path) {
    if (path.empty()) return path;
    return fs::absolute(path).lexically_normal().lexically_relative(fs::absolute(dir).lexically_normal()).generic_string();
}

inline void append_csv(const fs::path& path, const std::string& header, const std::string& row) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot append to " + path.string());
    if (fresh) out << header;
    out << row;
}

// ------------------------------------------------------------------ poisson

struct PoissonOpts {
    int dim = 2;
    int n = 63;
    std::string cycle = "all";
    std::string smoother = "gs";
    double omega = 2.0 / 3.0;
    int pre = 2, post = 2;
    double tol = 1e-10;
    int max_cycles = 10;
    std::string out = "out";
    std::uint64_t seed = 42;
};

/// Right-hand side with exact solution sin(pi x) [sin(pi y)].
inline PoissonProblem model_problem(int dim, int n) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return PoissonProblem::sampled(dim, n, [dim, pi2](double x, double y) {
        return dim == 1 ? pi2 * std::sin(std::numbers::pi * x)
                        : 2.0 * pi2 * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
    });
}

inline int cmd_poisson(const PoissonOpts& o, std::ostream& out) {
    SmootherConfig cfg;
    if (o.smoother == "gs")
        cfg.kind = SmootherKind::GaussSeidel;
    else if (o.smoother == "jacobi")
        cfg.kind = SmootherKind::WeightedJacobi;
    else
        throw InvalidArgument("unknown smoother " + o.smoother);
    cfg.omega = o.omega;
    cfg.pre_sweeps = o.pre;
    cfg.post_sweeps = o.post;

    std::vector<CycleKind> kinds;
    if (o.cycle == "all")
        kinds = {CycleKind::V, CycleKind::W, CycleKind::FMG};
    else if (o.cycle == "v")
        kinds = {CycleKind::V};
    else if (o.cycle == "w")
        kinds = {CycleKind::W};
    else if (o.cycle == "fmg")
        kinds = {CycleKind::FMG};
    else
        throw InvalidArgument("unknown cycle " + o.cycle);

    const PoissonProblem p = model_problem(o.dim, o.n);
    const GridHierarchy H(o.dim, o.n);
    const fs::path dir(o.out);
    std::vector<std::string> files;
    for (CycleKind k : kinds) {
        const SolveResult r = solve(H, p.rhs, k, cfg, o.tol, o.max_cycles);
        const std::string name = std::string("residuals_") + to_string(k) + ".csv";
        write_bytes(dir / name, history_csv(r.history));
        files.push_back(name);
        out << to_string(k) << ": cycles=" << r.history.back().cycle << " residual=" << fmt("%.6e", r.history.back().residual_l2)
            << " work=" << fmt("%.4g", r.history.back().work_units) << (r.converged ? " converged" : "") << "\n";
    }
    write_sidecar(dir, "poisson", o.seed,
                  {{"dim", o.dim}, {"n", o.n}, {"cycle", o.cycle}, {"smoother", o.smoother}, {"omega", o.omega},
                   {"pre", o.pre}, {"post", o.post}, {"tol", o.tol}, {"max_cycles", o.max_cycles}},
                  files);
    return kOk;
}

// ------------------------------------------------------------------- params

struct ParamsOpts {
    std::string family = "unet";
    int depth = 3;
    int dims = 3;
    int in = 4;
    int out_ch = 4;
    int base = 32;
    std::string policy;  // empty: family default
    std::string convention = "reference";
    std::optional<std::int64_t> expect;
    double rel_tol = 0.0;
    std::string out = "out";
    std::uint64_t seed = 42;
};

inline ChannelPolicy parse_policy(const std::string& s) {
    if (s == "doubling") return ChannelPolicy::Doubling;
    if (s == "pocket") return ChannelPolicy::Pocket;
    throw InvalidArgument("unknown channel policy " + s);
}

/// Architecture and counting rule for a params request. Under `reference`, depth counts
/// pooling steps (grids = depth + 1), BN reports four numbers per channel and
/// FMG-Net drops its closing finest-level V-cycle; `trainable` takes depth as
/// the number of grids and counts only trainable BN parameters.
inline std::pair<ArchSpec, ParamConvention> params_setup(const ParamsOpts& o) {
    const Family f = parse_family(o.family);
    ArchSpec s;
    ParamConvention conv;
    if (o.convention == "reference") {
        s = ArchSpec::make(f, o.depth + 1, o.dims, o.in, o.out_ch, o.base);
        s.fmg_final_vcycle = false;
        conv.bn_per_channel = 4;
    } else if (o.convention == "trainable") {
        s = ArchSpec::make(f, o.depth, o.dims, o.in, o.out_ch, o.base);
    } else {
        throw InvalidArgument("unknown convention " + o.convention);
    }
    if (!o.policy.empty()) s.channel_policy = parse_policy(o.policy);
    return {s, conv};
}

inline int cmd_params(const ParamsOpts& o, std::ostream& out) {
    const auto [spec, conv] = params_setup(o);
    const std::int64_t n = count_parameters(build_graph(spec), spec, conv);
    out << o.family << " depth=" << o.depth << " dims=" << o.dims << " policy=" << to_string(spec.channel_policy)
        << " convention=" << o.convention << " params=" << n << "\n";
    const bool published_setup = o.convention == "reference" && o.dims == 3 && o.in == 4 && o.out_ch == 4 && o.base == 32 &&
                                 spec.channel_policy == default_policy(spec.family);
    if (const auto target = published_count(spec.family, o.depth); target && published_setup)
        out << "published=" << *target << " rel_err=" << fmt("%+.4f%%", 100.0 * static_cast<double>(n - *target) / *target)
            << "\n";
    const fs::path dir(o.out);
    append_csv(dir / "params.csv", params_csv_header(), params_csv_row(spec, n));
    nlohmann::json args{{"family", o.family}, {"depth", o.depth}, {"dims", o.dims}, {"in", o.in}, {"out", o.out_ch},
                        {"base", o.base}, {"policy", to_string(spec.channel_policy)}, {"convention", o.convention}};
    if (o.expect) args["expect"] = *o.expect;
    write_sidecar(dir, "params", o.seed, args, {"params.csv"});
    if (o.expect) {
        const double rel = std::abs(static_cast<double>(n - *o.expect)) / static_cast<double>(*o.expect);
        const bool ok = n == *o.expect || rel <= o.rel_tol;
        out << "expect=" << *o.expect << (ok ? " ok" : " MISMATCH") << "\n";
        if (!ok) return kMismatch;
    }
    return kOk;
}

// -------------------------------------------------------------------- graph

struct GraphOpts {
    std::string family = "unet";
    int depth = 3;
    int dims = 2;
    int in = 1;
    int out_ch = 4;
    int base = 32;
    std::string policy;
    std::string out = "out";
    std::uint64_t seed = 42;
};

inline int cmd_graph(const GraphOpts& o, std::ostream& out) {
    ArchSpec s = ArchSpec::make(parse_family(o.family), o.depth, o.dims, o.in, o.out_ch, o.base);
    if (!o.policy.empty()) s.channel_policy = parse_policy(o.policy);
    const std::string name = o.family + "_d" + std::to_string(o.depth);
    const ArchGraph g = build_graph(s);
    write_bytes(fs::path(o.out) / (name + ".dot"), emit_dot(g, name));
    write_sidecar(o.out, "graph", o.seed,
                  {{"family", o.family}, {"depth", o.depth}, {"dims", o.dims}, {"in", o.in}, {"out", o.out_ch},
                   {"base", o.base}, {"policy", to_string(s.channel_policy)}},
                  {name + ".dot"});
    out << name << ".dot: " << g.nodes.size() << " nodes, " << g.edges().size() << " edges\n";
    return kOk;
}

// ---------------------------------------------------------------------- gen

struct GenOpts {
    int count = 200;
    int size = 64;
    std::uint64_t seed = 42;
    std::string out = "out/data";
};

inline int cmd_gen(const GenOpts& o, std::ostream& out) {
    const DatasetManifest m = generate(o.out, o.count, o.size, o.seed);
    write_sidecar(o.out, "gen", o.seed, {{"count", o.count}, {"size", o.size}}, {"manifest.json"});
    out << "generated " << m.case_ids.size() << " cases of " << o.size << "x" << o.size << " in " << o.out << "\n";
    return kOk;
}

// -------------------------------------------------------------------- train

struct TrainOpts {
    std::string family = "unet";
    int depth = 3;
    int base = 16;
    std::string data = "out/data";
    int epochs = 25;
    double lr = 3e-4;
    int batch = 8;
    std::uint64_t seed = 42;
    double val_fraction = 0.2;
    bool no_augment = false;
    std::string precision = "float64";
    std::string out = "out/train";
};

inline std::string run_tag(const std::string& family, int depth) { return family + "_d" + std::to_string(depth); }

template <class T>
LossCurve train_with(const TrainOpts& o, const std::vector<LoadedCase>& cases, const fs::path& ckpt, std::ostream& out) {
    if (cases.empty()) throw DataError("dataset is empty");
    const ArchSpec spec = ArchSpec::make(parse_family(o.family), o.depth, 2, 1, kSynthClasses, o.base);
    Model<T> m = instantiate<T>(spec, o.seed);
    const int f = 1 << (o.depth - 1);
    std::vector<Sample<T>> data;
    for (const auto& c : cases) {
        if (c.image.dim(1) % f != 0 || c.image.dim(2) % f != 0)
            throw DataError("image size " + std::to_string(c.image.dim(1)) + " not divisible by " + std::to_string(f));
        data.push_back(make_sample<T>(c));
    }
    TrainConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch;
    cfg.epochs = o.epochs;
    cfg.seed = o.seed;
    cfg.val_fraction = o.val_fraction;
    cfg.augment = !o.no_augment;
    const LossCurve curve = train(m, data, cfg, [&](const LossEntry& e) {
        out << "epoch " << e.epoch << " train " << fmt("%.6f", e.train_loss) << " val " << fmt("%.6f", e.val_loss) << "\n";
        out.flush();
    });
    save_checkpoint(ckpt, m);
    return curve;
}

inline int cmd_train(const TrainOpts& o, std::ostream& out) {
    if (o.precision != "float32" && o.precision != "float64") throw InvalidArgument("precision must be float32 or float64");
    const std::vector<LoadedCase> cases = load_dataset(o.data);
    const std::string tag = run_tag(o.family, o.depth);
    const fs::path dir(o.out), ckpt = dir / ("checkpoint_" + tag);
    fs::remove_all(ckpt);
    const LossCurve curve = o.precision == "float32" ? train_with<float>(o, cases, ckpt, out)
                                                     : train_with<double>(o, cases, ckpt, out);
    const std::string csv = "curve_" + tag + ".csv";
    write_bytes(dir / csv, curve.to_csv());
    write_sidecar(dir, "train_" + tag, o.seed,
                  {{"family", o.family}, {"depth", o.depth}, {"base", o.base}, {"data", relative_to(dir, o.data)}, {"epochs", o.epochs},
                   {"lr", o.lr}, {"batch", o.batch}, {"val_fraction", o.val_fraction}, {"augment", !o.no_augment},
                   {"precision", o.precision}},
                  {csv, "checkpoint_" + tag});
    return kOk;
}

// --------------------------------------------------------------------- eval

struct EvalOpts {
    std::string checkpoint;
    bool oracle = false;  // predictions = ground truth
    std::string data = "out/data";
    std::string tag;
    std::string out = "out/eval";
    std::uint64_t seed = 42;
};

struct SummaryRow {
    std::string cls, metric;
    double mean = 0, sd = 0;
    std::size_t n = 0;
};

/// Mean and sample standard deviation per (class, metric); undefined values are skipped.
inline std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows, const std::vector<ClassDef>& classes) {
    std::vector<SummaryRow> out;
    for (const auto& c : classes)
        for (const char* metric : {"dice", "hd95_mm", "asd_mm"}) {
            std::vector<double> v;
            for (const auto& r : rows) {
                if (r.cls != c.name) continue;
                const std::string m = metric;
                const std::optional<double> x = m == "dice" ? std::optional<double>(r.dice) : m == "hd95_mm" ? r.hd95_mm : r.asd_mm;
                if (x) v.push_back(*x);
            }
            SummaryRow s{c.name, metric, 0, 0, v.size()};
            if (!v.empty()) {
                for (double x : v) s.mean += x;
                s.mean /= static_cast<double>(v.size());
                if (v.size() > 1) {
                    double ss = 0;
                    for (double x : v) ss += (x - s.mean) * (x - s.mean);
                    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
                }
            }
            out.push_back(s);
        }
    return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string s = "class,metric,mean,std,n\n";
    char buf[160];
    for (const auto& r : rows) {
        if (r.n == 0)
            std::snprintf(buf, sizeof buf, "%s,%s,undef,undef,0\n", r.cls.c_str(), r.metric.c_str());
        else
            std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%zu\n", r.cls.c_str(), r.metric.c_str(), r.mean, r.sd, r.n);
        s += buf;
    }
    return s;
}

template <class T>
std::vector<LabelMask> predict_all(const fs::path& ckpt, const std::vector<LoadedCase>& cases) {
    Model<T> m = load_checkpoint<T>(ckpt);
    if (m.spec.in_channels != 1 || m.spec.out_channels != kSynthClasses)
        throw DataError("checkpoint expects " + std::to_string(m.spec.in_channels) + " input / " +
                        std::to_string(m.spec.out_channels) + " output channels");
    const int f = 1 << (m.spec.depth - 1);
    std::vector<LabelMask> out;
    for (const auto& c : cases) {
        if (c.image.dim(1) % f != 0 || c.image.dim(2) % f != 0)
            throw DataError("case " + c.case_id + " has a size the checkpoint cannot process");
        out.push_back(predict(m, normalize_zscore_nonzero(c.image).template cast<T>()));
    }
    return out;
}

inline int cmd_eval(const EvalOpts& o, std::ostream& out) {
    if (o.checkpoint.empty() == !o.oracle) throw InvalidArgument("eval: give exactly one of --checkpoint or --oracle");
    const std::vector<LoadedCase> cases = load_dataset(o.data);
    const DatasetManifest man = read_manifest(o.data);
    std::vector<LabelMask> preds;
    std::string tag = o.tag;
    if (o.oracle) {
        for (const auto& c : cases) preds.push_back(c.labels);
        if (tag.empty()) tag = "oracle";
    } else {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_bytes(fs::path(o.checkpoint) / "manifest.json"));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("checkpoint manifest: ") + e.what());
        }
        const std::string prec = j.value("precision", "float64");
        preds = prec == "float32" ? predict_all<float>(o.checkpoint, cases) : predict_all<double>(o.checkpoint, cases);
        if (tag.empty()) tag = j.at("spec").at("family").get<std::string>() + "_d" + std::to_string(j.at("spec").at("depth").get<int>());
    }
    std::string csv = metrics_csv_header();
    std::vector<MetricRow> rows;
    for (std::size_t i = 0; i < cases.size(); ++i)
        for (auto& r : evaluate_classes(preds[i], cases[i].labels, man.class_map, cases[i].case_id)) {
            csv += metrics_csv_row(r);
            rows.push_back(std::move(r));
        }
    const auto summary = summarize(rows, man.class_map);
    const fs::path dir(o.out);
    write_bytes(dir / ("metrics_" + tag + ".csv"), csv);
    write_bytes(dir / ("summary_" + tag + ".csv"), summary_csv(summary));
    write_sidecar(dir, "eval_" + tag, o.seed,
                  {{"checkpoint", relative_to(dir, o.checkpoint)}, {"oracle", o.oracle}, {"data", relative_to(dir, o.data)}, {"cases", cases.size()}},
                  {"metrics_" + tag + ".csv", "summary_" + tag + ".csv"});
    for (const auto& s : summary)
        if (s.metric == "dice") out << tag << " " << s.cls << " dice " << fmt("%.4f", s.mean) << " +- " << fmt("%.4f", s.sd) << "\n";
    return kOk;
}

// -------------------------------------------------------------------- repro

struct ReproOpts {
    std::string out = "out/repro";
    std::uint64_t seed = 42;
    int count = 200;
    int test_count = 50;
    int size = 64;
    int depth = 3;
    int base = 16;
    int epochs = 25;
    int batch = 8;
    std::string precision = "float64";
    int poisson_n = 63;
};

/// gen -> train x3 -> eval x3 -> poisson, with one summary.csv at the top.
inline int cmd_repro(const ReproOpts& o, std::ostream& out) {
    const fs::path dir(o.out);
    const std::string data = (dir / "data").string(), test = (dir / "test_data").string();
    cmd_gen({o.count, o.size, o.seed, data}, out);
    cmd_gen({o.test_count, o.size, derive_seed(o.seed, 0x7e57), test}, out);

    std::string summary = "family,depth,params,final_train_loss,final_val_loss,dice_whole,dice_core,dice_inner\n";
    for (const char* fam : {"unet", "fmgnet", "wnet"}) {
        TrainOpts t;
        t.family = fam;
        t.depth = o.depth;
        t.base = o.base;
        t.data = data;
        t.epochs = o.epochs;
        t.batch = o.batch;
        t.seed = o.seed;
        t.precision = o.precision;
        t.out = (dir / "train").string();
        out << "== train " << fam << "\n";
        cmd_train(t, out);
        const std::string tag = run_tag(fam, o.depth);
        EvalOpts e;
        e.checkpoint = (dir / "train" / ("checkpoint_" + tag)).string();
        e.data = test;
        e.out = (dir / "eval").string();
        e.seed = o.seed;
        cmd_eval(e, out);

        const std::string curve = read_bytes(dir / "train" / ("curve_" + tag + ".csv"));
        std::string last = "nan,nan";
        if (const auto p = curve.rfind('\n', curve.size() - 2); o.epochs > 0 && p != std::string::npos) {
            const std::string line = curve.substr(p + 1, curve.size() - p - 2);
            last = line.substr(line.find(',') + 1);
        }
        const ArchSpec spec = ArchSpec::make(parse_family(fam), o.depth, 2, 1, kSynthClasses, o.base);
        std::string row = std::string(fam) + "," + std::to_string(o.depth) + "," +
                          std::to_string(count_parameters(build_graph(spec), spec)) + "," + last;
        std::istringstream sm(read_bytes(dir / "eval" / ("summary_" + tag + ".csv")));
        std::string line;
        std::getline(sm, line);
        while (std::getline(sm, line)) {
            std::vector<std::string> f;
            std::stringstream ls(line);
            for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
            if (f.size() == 5 && f[1] == "dice") row += "," + f[2];
        }
        summary += row + "\n";
    }
    PoissonOpts p;
    p.n = o.poisson_n;
    p.out = (dir / "poisson").string();
    p.seed = o.seed;
    cmd_poisson(p, out);
    write_bytes(dir / "summary.csv", summary);
    write_sidecar(dir, "repro", o.seed,
                  {{"count", o.count}, {"test_count", o.test_count}, {"size", o.size}, {"depth", o.depth}, {"base", o.base},
                   {"epochs", o.epochs}, {"batch", o.batch}, {"precision", o.precision}, {"poisson_n", o.poisson_n}},
                  {"summary.csv", "data", "test_data", "train", "eval", "poisson"});
    out << summary;
    return kOk;
}

// ------------------------------------------------------------------ parsing

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"mgnets: multigrid solvers and multigrid-inspired segmentation networks"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    PoissonOpts po;
    auto* sp = app.add_subcommand("poisson", "Solve a model Poisson problem and write residual histories");
    sp->add_option("--dim", po.dim, "1 or 2")->check(CLI::IsMember({1, 2}));
    sp->add_option("--n", po.n, "interior points per axis, 2^k-1");
    sp->add_option("--cycle", po.cycle, "v, w, fmg or all")->check(CLI::IsMember({"v", "w", "fmg", "all"}));
    sp->add_option("--smoother", po.smoother, "gs or jacobi")->check(CLI::IsMember({"gs", "jacobi"}));
    sp->add_option("--omega", po.omega, "Jacobi damping");
    sp->add_option("--pre", po.pre, "pre-smoothing sweeps");
    sp->add_option("--post", po.post, "post-smoothing sweeps");
    sp->add_option("--tol", po.tol, "relative residual tolerance");
    sp->add_option("--max-cycles", po.max_cycles, "cycle limit");
    sp->add_option("--out", po.out, "output directory");
    sp->add_option("--seed", po.seed, "echoed into the sidecar");

    ParamsOpts pa;
    std::int64_t expect = 0;
    auto* spa = app.add_subcommand("params", "Count parameters of an architecture");
    spa->add_option("--family", pa.family)->check(CLI::IsMember({"unet", "fmgnet", "wnet"}));
    spa->add_option("--depth", pa.depth);
    spa->add_option("--dims", pa.dims)->check(CLI::IsMember({2, 3}));
    spa->add_option("--in", pa.in);
    spa->add_option("--out-channels", pa.out_ch);
    spa->add_option("--base", pa.base);
    spa->add_option("--policy", pa.policy)->check(CLI::IsMember({"doubling", "pocket"}));
    spa->add_option("--convention", pa.convention, "reference (depth = pooling steps) or trainable (depth = grids)")
        ->check(CLI::IsMember({"reference", "trainable"}));
    auto* expect_opt = spa->add_option("--expect", expect, "exit 3 unless the count matches");
    spa->add_option("--rel-tol", pa.rel_tol, "accepted relative deviation from --expect");
    spa->add_option("--out", pa.out, "directory for params.csv");
    spa->add_option("--seed", pa.seed);

    GraphOpts go;
    auto* sg = app.add_subcommand("graph", "Write an architecture graph as DOT");
    sg->add_option("--family", go.family)->check(CLI::IsMember({"unet", "fmgnet", "wnet"}));
    sg->add_option("--depth", go.depth, "number of grids");
    sg->add_option("--dims", go.dims)->check(CLI::IsMember({2, 3}));
    sg->add_option("--in", go.in);
    sg->add_option("--out-channels", go.out_ch);
    sg->add_option("--base", go.base);
    sg->add_option("--policy", go.policy)->check(CLI::IsMember({"doubling", "pocket"}));
    sg->add_option("--out", go.out);
    sg->add_option("--seed", go.seed);

    GenOpts ge;
    auto* sge = app.add_subcommand("gen", "Generate a synthetic segmentation dataset");
    sge->add_option("--count", ge.count);
    sge->add_option("--size", ge.size);
    sge->add_option("--seed", ge.seed);
    sge->add_option("--out", ge.out);

    TrainOpts tr;
    auto* st = app.add_subcommand("train", "Train one network and write its loss curve and checkpoint");
    st->add_option("--family", tr.family)->check(CLI::IsMember({"unet", "fmgnet", "wnet"}));
    st->add_option("--depth", tr.depth, "number of grids");
    st->add_option("--base", tr.base, "features at the finest level");
    st->add_option("--data", tr.data, "dataset directory")->required();
    st->add_option("--epochs", tr.epochs);
    st->add_option("--lr", tr.lr);
    st->add_option("--batch", tr.batch);
    st->add_option("--seed", tr.seed);
    st->add_option("--val-fraction", tr.val_fraction);
    st->add_flag("--no-augment", tr.no_augment);
    st->add_option("--precision", tr.precision)->check(CLI::IsMember({"float32", "float64"}));
    st->add_option("--out", tr.out);

    EvalOpts ev;
    auto* se = app.add_subcommand("eval", "Segment a dataset with a checkpoint and score it");
    se->add_option("--checkpoint", ev.checkpoint);
    se->add_flag("--oracle", ev.oracle, "score the ground truth against itself");
    se->add_option("--data", ev.data)->required();
    se->add_option("--tag", ev.tag, "name used in output files");
    se->add_option("--out", ev.out);
    se->add_option("--seed", ev.seed);

    ReproOpts re;
    auto* sr = app.add_subcommand("repro", "gen, train and eval all three families, then the Poisson comparison");
    sr->add_option("--out", re.out);
    sr->add_option("--seed", re.seed);
    sr->add_option("--count", re.count);
    sr->add_option("--test-count", re.test_count);
    sr->add_option("--size", re.size);
    sr->add_option("--depth", re.depth);
    sr->add_option("--base", re.base);
    sr->add_option("--epochs", re.epochs);
    sr->add_option("--batch", re.batch);
    sr->add_option("--precision", re.precision)->check(CLI::IsMember({"float32", "float64"}));
    sr->add_option("--poisson-n", re.poisson_n);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    if (*expect_opt) pa.expect = expect;

    try {
        if (*sp) return cmd_poisson(po, out);
        if (*spa) return cmd_params(pa, out);
        if (*sg) return cmd_graph(go, out);
        if (*sge) return cmd_gen(ge, out);
        if (*st) return cmd_train(tr, out);
        if (*se) return cmd_eval(ev, out);
        if (*sr) return cmd_repro(re, out);
    } catch (const NumericFailure& e) {
        err << "numeric failure at step " << e.step() << " in " << e.block() << ": " << e.what() << "\n";
        return kNumeric;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kData;
    } catch (const UninitializedStatistics& e) {
        err << "data error: " << e.what() << "\n";
        return kData;
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const UnsupportedConfiguration& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const StructuralError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace mgnets::cli
