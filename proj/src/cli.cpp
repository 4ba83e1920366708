#include "topobo/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "topobo/bo.hpp"
#include "topobo/datasets.hpp"
#include "topobo/errors.hpp"
#include "topobo/gp.hpp"
#include "topobo/io.hpp"
#include "topobo/parallel.hpp"
#include "topobo/pd_kernels.hpp"
#include "topobo/persistence.hpp"
#include "topobo/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace topobo::cli {

namespace {

struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

void write_config_echo(const std::string& path, const json& resolved) {
    write_text_file(path, resolved.dump(2) + "\n");
}

KernelKind parse_kernel(const std::string& s) {
    if (s == "pwgk_linear") return KernelKind::PwgkLinear;
    if (s == "pwgk_gaussian") return KernelKind::PwgkGaussian;
    if (s == "pfk") return KernelKind::Pfk;
    throw usage_error("unknown kernel '" + s + "' (pwgk_linear|pwgk_gaussian|pfk)");
}

DegreeChoice parse_degrees(const std::string& s) {
    if (s == "0" || s == "h0") return DegreeChoice::H0;
    if (s == "1" || s == "h1") return DegreeChoice::H1;
    if (s == "both") return DegreeChoice::Both;
    throw usage_error("unknown degrees '" + s + "' (0|1|both)");
}

MklMode parse_mkl(const std::string& s) {
    if (s == "none") return MklMode::None;
    if (s == "align") return MklMode::Align;
    if (s == "mle") return MklMode::Mle;
    throw usage_error("unknown mkl mode '" + s + "' (none|align|mle)");
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
                                ? c
                                : '_';
    return out;
}

// ---- gen-orbit ----------------------------------------------------------

struct GenOrbitOpts {
    int count = 1000;
    int points = 1000;
    double r_min = 2.0;
    double r_max = 4.3;
    std::uint64_t seed = 0;
    bool shared_start = false;
    int threads = 0;
    std::string out;
};

int cmd_gen_orbit(const GenOrbitOpts& o) {
    Pool pool = gen_orbit(o.count, o.points, o.r_min, o.r_max, o.seed, o.shared_start, o.threads);
    save_jsonl(pool, o.out);
    double lo = *pool.clouds.front().label, hi = lo;
    for (const auto& c : pool.clouds) {
        lo = std::min(lo, *c.label);
        hi = std::max(hi, *c.label);
    }
    std::printf("pool: %zu clouds of %d points, labels in [%.6f, %.6f] -> %s\n", pool.size(),
                o.points, lo, hi, o.out.c_str());
    write_config_echo(o.out + ".config.json",
                      json{{"command", "gen-orbit"},
                           {"count", o.count},
                           {"points", o.points},
                           {"r_min", o.r_min},
                           {"r_max", o.r_max},
                           {"seed", o.seed},
                           {"shared_start", o.shared_start},
                           {"threads", o.threads},
                           {"out", o.out}});
    return 0;
}

// ---- diagrams -----------------------------------------------------------

struct DiagramsOpts {
    std::string pool_path;
    std::string degree = "both";
    std::string max_radius = "auto";
    int subsample = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    std::size_t budget = kDefaultTriangleBudget;
    std::string out;
};

int cmd_diagrams(const DiagramsOpts& o) {
    Pool pool = load_jsonl(o.pool_path);
    std::vector<int> degrees;
    if (o.degree == "0") degrees = {0};
    else if (o.degree == "1") degrees = {1};
    else if (o.degree == "both") degrees = {0, 1};
    else throw usage_error("unknown degree '" + o.degree + "' (0|1|both)");

    double fixed_radius = -1.0;
    if (o.max_radius != "auto") {
        try {
            fixed_radius = std::stod(o.max_radius);
        } catch (...) {
            throw usage_error("bad --max-radius '" + o.max_radius + "' (auto or a positive real)");
        }
        if (!(fixed_radius > 0.0)) throw usage_error("--max-radius must be > 0");
    }

    std::map<CacheKey, CacheRecord> cache;
    if (fs::exists(o.out)) cache = read_pd_cache(o.out);

    struct Job {
        std::size_t cloud_index;
        int degree;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < pool.size(); ++i)
        for (int d : degrees) jobs.push_back({i, d});

    std::vector<CacheRecord> records(jobs.size());
    std::atomic<std::size_t> hits{0}, done{0};
    parallel_for(jobs.size(), o.threads, [&](std::size_t t) {
        const Job& job = jobs[t];
        const PointCloud& raw = pool.clouds[job.cloud_index];
        PointCloud cloud = raw;
        if (o.subsample > 0 && static_cast<std::size_t>(o.subsample) < raw.size())
            cloud = subsample_maxmin(raw, static_cast<std::size_t>(o.subsample),
                                     mix_seed(o.seed, job.cloud_index));
        double radius = fixed_radius > 0.0
                            ? fixed_radius
                            : (job.degree == 1 ? enclosing_radius(cloud) : full_mst_radius(cloud));
        if (!(radius > 0.0)) radius = 1e-9;  // single-point or fully degenerate cloud

        auto it = cache.find({cloud.id, job.degree});
        bool subsample_matches =
            it != cache.end() &&
            ((o.subsample > 0 && static_cast<std::size_t>(o.subsample) < raw.size())
                 ? (it->second.subsample && *it->second.subsample == o.subsample)
                 : !it->second.subsample);
        if (it != cache.end() && it->second.max_radius == radius && subsample_matches) {
            records[t] = it->second;
            hits.fetch_add(1);
        } else {
            CacheRecord rec;
            rec.id = cloud.id;
            rec.degree = job.degree;
            rec.max_radius = radius;
            if (o.subsample > 0 && static_cast<std::size_t>(o.subsample) < raw.size())
                rec.subsample = o.subsample;
            rec.diagram = job.degree == 0 ? compute_h0(cloud, radius)
                                          : compute_h1(cloud, radius, o.budget);
            records[t] = std::move(rec);
        }
        std::size_t d = done.fetch_add(1) + 1;
        if (d % std::max<std::size_t>(jobs.size() / 10, 1) == 0)
            std::fprintf(stderr, "diagrams: %zu/%zu\n", d, jobs.size());
    });

    write_pd_cache(records, o.out);
    std::printf("diagrams: %zu records (%zu cache hits) -> %s\n", records.size(), hits.load(),
                o.out.c_str());
    write_config_echo(o.out + ".config.json",
                      json{{"command", "diagrams"},
                           {"pool", o.pool_path},
                           {"degree", o.degree},
                           {"max_radius", o.max_radius},
                           {"subsample", o.subsample},
                           {"seed", o.seed},
                           {"threads", o.threads},
                           {"budget", o.budget},
                           {"out", o.out}});
    return 0;
}

// ---- run ----------------------------------------------------------------

struct RunOpts {
    std::string pool_path;
    std::string pds_path;
    std::string kernel = "pwgk_linear";
    std::string degrees = "h1";
    std::string mkl = "none";
    int steps = 100;
    int repeats = 30;
    int n_init = 10;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    bool use_rff = false;
    std::size_t rff_features = 2048;
    int threads = 0;
    std::string out_dir;
    std::string export_gram_dir;
};

int cmd_run(const RunOpts& o) {
    RunConfig cfg;
    cfg.kernel = parse_kernel(o.kernel);
    cfg.degrees = parse_degrees(o.degrees);
    cfg.mkl = parse_mkl(o.mkl);
    if (cfg.mkl != MklMode::None && cfg.degrees != DegreeChoice::Both)
        throw usage_error("--mkl " + o.mkl + " requires --degrees both");
    cfg.n_init = o.n_init;
    cfg.n_steps = o.steps;
    cfg.repeats = o.repeats;
    cfg.noise_sd = o.noise_sd;
    cfg.seed = o.seed;
    cfg.use_rff = o.use_rff;
    cfg.rff_features = o.rff_features;

    Pool pool = load_jsonl(o.pool_path);
    auto cache = read_pd_cache(o.pds_path);

    std::vector<int> wanted;
    if (cfg.degrees == DegreeChoice::H0) wanted = {0};
    else if (cfg.degrees == DegreeChoice::H1) wanted = {1};
    else wanted = {0, 1};

    PoolKernels pk;
    pk.ids.reserve(pool.size());
    pk.labels.resize(static_cast<Eigen::Index>(pool.size()));
    for (std::size_t i = 0; i < pool.size(); ++i) {
        pk.ids.push_back(pool.clouds[i].id);
        pk.labels(static_cast<Eigen::Index>(i)) = *pool.clouds[i].label;
    }

    json kernel_echo = json::array();
    for (int degree : wanted) {
        std::vector<PersistenceDiagram> diagrams;
        diagrams.reserve(pool.size());
        for (const auto& c : pool.clouds) {
            auto it = cache.find({c.id, degree});
            if (it == cache.end())
                throw input_error("PD cache lacks degree-" + std::to_string(degree) +
                                  " record for cloud '" + c.id + "'; run the diagrams command first");
            diagrams.push_back(it->second.diagram);
        }

        PoolChannel ch;
        ch.degree = degree;
        json echo = {{"degree", degree}};
        if (cfg.kernel == KernelKind::Pfk) {
            Heuristics h = heuristics(diagrams, true, o.threads);
            ch.pfk = h.pfk;
            echo["pfk_nu_grid"] = h.pfk.nu_grid;
            echo["pfk_inv_t_grid"] = h.pfk.inv_t_grid;
        } else {
            Heuristics h = heuristics(diagrams, false, o.threads);
            KernelSpec spec;
            spec.kind = cfg.kernel;
            spec.pwgk = h.pwgk;
            spec.use_rff = cfg.use_rff;
            spec.rff_features = cfg.rff_features;
            spec.rff_seed = mix_seed(cfg.seed, 0xF0F0 + static_cast<std::uint64_t>(degree));
            GramMatrix g = gram(pk.ids, diagrams, spec, o.threads);
            ch.gram = g.values;
            echo["pwgk"] = {{"C", h.pwgk.C},
                            {"p", h.pwgk.p},
                            {"nu", h.pwgk.nu},
                            {"tau", h.pwgk.tau.value_or(0.0)},
                            {"use_rff", cfg.use_rff}};
            if (!o.export_gram_dir.empty()) {
                fs::create_directories(o.export_gram_dir);
                write_gram_csv(g, (fs::path(o.export_gram_dir) /
                                   ("gram_h" + std::to_string(degree) + ".csv")).string());
            }
        }
        kernel_echo.push_back(std::move(echo));
        pk.channels.push_back(std::move(ch));
    }

    BenchmarkResult result = benchmark(pk, {cfg}, o.threads);

    fs::create_directories(o.out_dir);
    write_text_file((fs::path(o.out_dir) / "summary.csv").string(), summary_csv(result));
    std::string table = summary_table(result);
    write_text_file((fs::path(o.out_dir) / "summary.txt").string(), table);
    std::fputs(table.c_str(), stdout);

    std::map<std::string, int> rep_counter;
    for (const auto& trace : result.traces) {
        int rep = rep_counter[trace.kernel_desc]++;
        std::string base = sanitize(trace.kernel_desc) + "_rep" + std::to_string(rep);
        write_text_file((fs::path(o.out_dir) / (base + "_trace.csv")).string(), trace_csv(trace));
        write_text_file((fs::path(o.out_dir) / (base + "_sidecar.json")).string(),
                        trace_sidecar_json(trace, cfg));
    }

    write_config_echo((fs::path(o.out_dir) / "config_echo.json").string(),
                      json{{"command", "run"},
                           {"pool", o.pool_path},
                           {"pds", o.pds_path},
                           {"kernel", o.kernel},
                           {"degrees", o.degrees},
                           {"mkl", o.mkl},
                           {"steps", o.steps},
                           {"repeats", o.repeats},
                           {"n_init", o.n_init},
                           {"noise_sd", o.noise_sd},
                           {"seed", o.seed},
                           {"use_rff", o.use_rff},
                           {"rff_features", o.rff_features},
                           {"threads", o.threads},
                           {"out", o.out_dir},
                           {"kernels", kernel_echo}});
    return 0;
}

// ---- report -------------------------------------------------------------

struct ReportOpts {
    std::string runs_dir;
    std::string out;
};

int cmd_report(const ReportOpts& o) {
    if (!fs::is_directory(o.runs_dir)) throw input_error("not a directory: " + o.runs_dir);

    struct TraceData {
        std::string method;
        std::vector<double> best_per_step;  // index = step
        double target = 0.0;
    };
    std::vector<TraceData> traces;
    std::vector<fs::path> sidecars;
    for (const auto& entry : fs::directory_iterator(o.runs_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 13 && name.substr(name.size() - 13) == "_sidecar.json")
            sidecars.push_back(entry.path());
    }
    std::sort(sidecars.begin(), sidecars.end());
    if (sidecars.empty()) throw input_error("no run sidecars in " + o.runs_dir);

    for (const auto& side_path : sidecars) {
        json side = json::parse(read_text_file(side_path.string()));
        TraceData td;
        td.method = side.at("kernel_desc").get<std::string>();
        td.target = side.at("target").get<double>();

        std::string trace_path = side_path.string();
        trace_path.replace(trace_path.size() - 13, 13, "_trace.csv");
        std::istringstream in(read_text_file(trace_path));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string step_s, id, y_s, best_s;
            std::getline(row, step_s, ',');
            std::getline(row, id, ',');
            std::getline(row, y_s, ',');
            std::getline(row, best_s, ',');
            std::size_t step = std::stoul(step_s);
            double best = std::stod(best_s);
            if (td.best_per_step.size() <= step) td.best_per_step.resize(step + 1);
            td.best_per_step[step] = best;  // last record per step wins
        }
        traces.push_back(std::move(td));
    }

    double target = traces.front().target;
    for (const auto& t : traces)
        if (t.target != target)
            throw input_error("sidecars disagree on the target value; mixed pools in " + o.runs_dir);

    std::set<std::string> methods;
    std::size_t max_step = 0;
    for (const auto& t : traces) {
        methods.insert(t.method);
        max_step = std::max(max_step, t.best_per_step.size());
    }

    std::ostringstream out;
    out << "step";
    for (const auto& m : methods) out << "," << m;
    out << ",target\n";
    char buf[64];
    for (std::size_t s = 0; s < max_step; ++s) {
        out << s;
        for (const auto& m : methods) {
            double sum = 0.0;
            int count = 0;
            for (const auto& t : traces) {
                if (t.method != m || s >= t.best_per_step.size()) continue;
                sum += t.best_per_step[s];
                ++count;
            }
            if (count == 0) {
                out << ",";
            } else {
                std::snprintf(buf, sizeof(buf), ",%.17g", sum / count);
                out << buf;
            }
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", target);
        out << buf;
    }
    write_text_file(o.out, out.str());
    std::printf("report: %zu traces, %zu methods, %zu steps -> %s\n", traces.size(), methods.size(),
                max_step, o.out.c_str());
    write_config_echo(o.out + ".config.json",
                      json{{"command", "report"}, {"runs", o.runs_dir}, {"out", o.out}});
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Bayesian optimization over point-cloud pools via persistence diagram kernels"};
    app.require_subcommand(1);

    GenOrbitOpts gen;
    auto* sc_gen = app.add_subcommand("gen-orbit", "Generate a linked-twist-map orbit pool");
    sc_gen->add_option("--count", gen.count, "Number of clouds")->check(CLI::PositiveNumber);
    sc_gen->add_option("--points", gen.points, "Points per cloud")->check(CLI::PositiveNumber);
    sc_gen->add_option("--r-min", gen.r_min, "Lower bound of r");
    sc_gen->add_option("--r-max", gen.r_max, "Upper bound of r");
    sc_gen->add_option("--seed", gen.seed, "Master seed");
    sc_gen->add_flag("--shared-start", gen.shared_start, "Share (x0, y0) across clouds");
    sc_gen->add_option("--threads", gen.threads, "Worker threads (0 = all cores)");
    sc_gen->add_option("--out", gen.out, "Output pool JSONL")->required();

    DiagramsOpts dg;
    auto* sc_dg = app.add_subcommand("diagrams", "Compute persistence diagrams for a pool");
    sc_dg->add_option("--pool", dg.pool_path, "Pool JSONL")->required();
    sc_dg->add_option("--degree", dg.degree, "0|1|both");
    sc_dg->add_option("--max-radius", dg.max_radius, "auto or a positive real");
    sc_dg->add_option("--subsample", dg.subsample, "Maxmin-subsample clouds to this many points");
    sc_dg->add_option("--seed", dg.seed, "Seed for subsampling");
    sc_dg->add_option("--threads", dg.threads, "Worker threads (0 = all cores)");
    sc_dg->add_option("--budget", dg.budget, "Triangle budget for H1");
    sc_dg->add_option("--out", dg.out, "Output PD cache JSONL")->required();

    RunOpts rn;
    auto* sc_rn = app.add_subcommand("run", "Run BO benchmark against the random baseline");
    sc_rn->add_option("--pool", rn.pool_path, "Pool JSONL")->required();
    sc_rn->add_option("--pds", rn.pds_path, "PD cache JSONL")->required();
    sc_rn->add_option("--kernel", rn.kernel, "pwgk_linear|pwgk_gaussian|pfk");
    sc_rn->add_option("--degrees", rn.degrees, "0|1|both");
    sc_rn->add_option("--mkl", rn.mkl, "none|align|mle");
    sc_rn->add_option("--steps", rn.steps, "BO steps per run")->check(CLI::PositiveNumber);
    sc_rn->add_option("--repeats", rn.repeats, "Seeded repetitions")->check(CLI::PositiveNumber);
    sc_rn->add_option("--init", rn.n_init, "Initial design size")->check(CLI::PositiveNumber);
    sc_rn->add_option("--noise-sd", rn.noise_sd, "Observation noise standard deviation");
    sc_rn->add_option("--seed", rn.seed, "Master seed");
    sc_rn->add_flag("--rff", rn.use_rff, "Use random Fourier features for PWGK");
    sc_rn->add_option("--rff-features", rn.rff_features, "RFF feature count");
    sc_rn->add_option("--threads", rn.threads, "Worker threads (0 = all cores)");
    sc_rn->add_option("--out", rn.out_dir, "Output directory")->required();
    sc_rn->add_option("--export-gram-dir", rn.export_gram_dir, "Also export Gram CSVs here");

    ReportOpts rp;
    auto* sc_rp = app.add_subcommand("report", "Aggregate traces into convergence-curve data");
    sc_rp->add_option("--runs", rp.runs_dir, "Directory of run traces")->required();
    sc_rp->add_option("--out", rp.out, "Output CSV")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sc_gen->parsed()) return cmd_gen_orbit(gen);
        if (sc_dg->parsed()) return cmd_diagrams(dg);
        if (sc_rn->parsed()) return cmd_run(rn);
        if (sc_rp->parsed()) return cmd_report(rp);
        return 2;
    } catch (const usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const resource_error& e) {
        std::fprintf(stderr, "resource error: %s\n", e.what());
        return 5;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const input_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace topobo::cli
