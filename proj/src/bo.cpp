#include "topobo/bo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "topobo/errors.hpp"
#include "topobo/gp.hpp"
#include "topobo/mkl.hpp"
#include "topobo/parallel.hpp"
#include "topobo/rng.hpp"

using json = nlohmann::json;

namespace topobo {

std::string degree_choice_name(DegreeChoice d) {
    switch (d) {
        case DegreeChoice::H0: return "h0";
        case DegreeChoice::H1: return "h1";
        case DegreeChoice::Both: return "h0+h1";
    }
    return "?";
}

std::string mkl_mode_name(MklMode m) {
    switch (m) {
        case MklMode::None: return "none";
        case MklMode::Align: return "align";
        case MklMode::Mle: return "mle";
    }
    return "?";
}

void RunConfig::validate() const {
    if (mkl != MklMode::None && degrees != DegreeChoice::Both)
        throw input_error("mkl requires degrees = both");
    if (n_init < 1) throw input_error("n_init must be >= 1");
    if (n_steps < 1) throw input_error("n_steps must be >= 1");
    if (repeats < 1) throw input_error("repeats must be >= 1");
    if (noise_sd < 0.0) throw input_error("noise_sd must be >= 0");
}

std::string RunConfig::method_desc() const {
    std::string s = kernel_kind_name(kernel) + "[" + degree_choice_name(degrees);
    if (mkl != MklMode::None) s += "|" + mkl_mode_name(mkl);
    s += "]";
    return s;
}

namespace {

std::vector<int> sample_initial(Rng& rng, int pool_size, int n_init) {
    std::vector<int> idx(static_cast<std::size_t>(pool_size));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n_init; ++i) {
        std::size_t j = static_cast<std::size_t>(i) + rng.below(static_cast<std::size_t>(pool_size - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(n_init));
    return idx;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& full, const std::vector<int>& idx) {
    Eigen::MatrixXd out(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) out(a, b) = full(idx[a], idx[b]);
    return out;
}

Eigen::MatrixXd pfk_gram_from_fim(const Eigen::MatrixXd& fim, double inv_t) {
    return (-fim / inv_t).array().exp();
}

// Joint (nu, 1/t) and noise selection for one PFK channel: mle_noise per
// candidate, keep the combo with the best resulting likelihood.
struct PfkSelection {
    std::size_t nu_index = 0;
    double nu = 0.0;
    double q = 0.0;  // 1/t
    double sigma2 = 0.0;
    double loglik = 0.0;
};

PfkSelection select_pfk(const PfkGrid& grid, const std::vector<int>& observed,
                        const Eigen::VectorXd& y) {
    PfkSelection best;
    bool first = true;
    for (std::size_t a = 0; a < grid.nu_grid.size(); ++a) {
        Eigen::MatrixXd fim_obs = submatrix(grid.fim[a], observed);
        for (double q : grid.inv_t_grid[a]) {
            Eigen::MatrixXd k_obs = pfk_gram_from_fim(fim_obs, q);
            double s2, ll;
            try {
                // the discretized PFK Gram can be indefinite beyond the jitter
                // ceiling for some (nu, t); such combos are simply not eligible
                s2 = mle_noise(k_obs, y);
                ll = log_marginal_likelihood(k_obs, y, s2);
            } catch (const numerical_error&) {
                continue;
            }
            if (first || ll > best.loglik) {
                best = {a, grid.nu_grid[a], q, s2, ll};
                first = false;
            }
        }
    }
    if (first) throw numerical_error("no PFK grid combination is factorizable on the observed set");
    return best;
}

struct RefitResult {
    Eigen::MatrixXd k_full;  // combined full-pool Gram
    double sigma2 = 0.0;
    Eigen::VectorXd alpha;
    std::vector<std::pair<double, double>> pfk_selected;
};

RefitResult refit(const PoolKernels& pool, const RunConfig& cfg, const std::vector<int>& observed,
                  const Eigen::VectorXd& y, Eigen::VectorXd& mkl_warm) {
    RefitResult out;
    const bool is_pfk = cfg.kernel == KernelKind::Pfk;

    // materialize per-channel full Grams (PFK channels select hyperparameters first)
    std::vector<Eigen::MatrixXd> fulls;
    fulls.reserve(pool.channels.size());
    std::vector<double> channel_sigma2;
    for (const auto& ch : pool.channels) {
        if (is_pfk) {
            if (!ch.pfk) throw input_error("pfk run requires PFK grid data per channel");
            PfkSelection sel = select_pfk(*ch.pfk, observed, y);
            fulls.push_back(pfk_gram_from_fim(ch.pfk->fim[sel.nu_index], sel.q));
            out.pfk_selected.emplace_back(sel.nu, 1.0 / sel.q);
            channel_sigma2.push_back(sel.sigma2);
        } else {
            // cosine-normalize each channel to unit diagonal: PWGK-Linear
            // self-similarities scale like the tenth power of persistence,
            // which both underflows the noise floor and spreads the prior
            // variance over several orders of magnitude. D^-1/2 K D^-1/2 is a
            // congruence, so PSD is preserved; unit-diagonal kernels pass
            // through unchanged. Rows of empty diagrams (zero self-similarity)
            // stay zero.
            Eigen::VectorXd inv_sqrt = ch.gram.diagonal().cwiseMax(0.0).cwiseSqrt();
            for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
                inv_sqrt(i) = inv_sqrt(i) > 0.0 ? 1.0 / inv_sqrt(i) : 0.0;
            fulls.push_back(
                (inv_sqrt.asDiagonal() * ch.gram * inv_sqrt.asDiagonal()).eval());
        }
    }

    if (pool.channels.size() == 1) {
        out.k_full = fulls[0];
        out.alpha = Eigen::VectorXd::Ones(1);
        if (is_pfk) {
            out.sigma2 = channel_sigma2[0];
        } else {
            out.sigma2 = mle_noise(submatrix(out.k_full, observed), y);
        }
        return out;
    }

    // MKL over the channel Grams
    std::vector<Eigen::MatrixXd> obs_mats;
    obs_mats.reserve(fulls.size());
    for (const auto& f : fulls) obs_mats.push_back(submatrix(f, observed));

    if (cfg.mkl == MklMode::Align) {
        MklWeights w = solve_alignment_qp(obs_mats, y);
        out.alpha = w.alpha;
        out.sigma2 = mle_noise(combine(obs_mats, out.alpha), y);
    } else {
        // two alternations: fix alpha -> mle_noise, fix sigma^2 -> mle_weights
        Eigen::VectorXd alpha = mkl_warm;
        for (int round = 0; round < 2; ++round) {
            out.sigma2 = mle_noise(combine(obs_mats, alpha), y);
            alpha = mle_weights(obs_mats, y, out.sigma2, &alpha).alpha;
        }
        out.alpha = alpha;
        mkl_warm = alpha;
    }
    out.k_full = combine(fulls, out.alpha);
    return out;
}

double min_label(const Eigen::VectorXd& labels) { return labels.minCoeff(); }

}  // namespace

BOTrace run_bo(const PoolKernels& pool, const RunConfig& cfg, const std::vector<int>* forced_init) {
    cfg.validate();
    const int n = static_cast<int>(pool.ids.size());
    if (pool.labels.size() != n) throw input_error("run_bo: labels/ids size mismatch");
    if (pool.channels.empty()) throw input_error("run_bo: no kernel channels");
    if (n <= cfg.n_init) throw input_error("pool size must exceed n_init");
    if (cfg.mkl == MklMode::None && pool.channels.size() != 1)
        throw input_error("single-kernel run expects exactly one channel");
    if (cfg.mkl != MklMode::None && pool.channels.size() < 2)
        throw input_error("mkl run expects two channels");

    Rng rng(cfg.seed);
    BOTrace trace;
    trace.seed = cfg.seed;
    trace.kernel_desc = cfg.method_desc();
    trace.target = min_label(pool.labels);

    std::vector<int> observed = forced_init ? *forced_init
                                            : sample_initial(rng, n, cfg.n_init);
    if (static_cast<int>(observed.size()) != cfg.n_init)
        throw input_error("initial design size mismatch");

    std::vector<bool> is_observed(static_cast<std::size_t>(n), false);
    std::vector<double> y_values;
    double best = std::numeric_limits<double>::infinity();
    for (int idx : observed) {
        if (idx < 0 || idx >= n || is_observed[static_cast<std::size_t>(idx)])
            throw input_error("invalid or duplicate initial index");
        is_observed[static_cast<std::size_t>(idx)] = true;
        double obs = pool.labels(idx) + (cfg.noise_sd > 0.0 ? cfg.noise_sd * rng.normal() : 0.0);
        y_values.push_back(obs);
        best = std::min(best, obs);
        trace.steps.push_back({0, pool.ids[static_cast<std::size_t>(idx)], obs, best});
    }

    Eigen::VectorXd mkl_warm =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(pool.channels.size()),
                                  1.0 / static_cast<double>(pool.channels.size()));

    for (int step = 1; step <= cfg.n_steps; ++step) {
        if (static_cast<int>(observed.size()) >= n) {
            trace.truncated = true;
            break;
        }
        // center observations on their running mean; the zero-mean GP then
        // models residuals, so similarity to good points lowers the predicted
        // value instead of raising it for any all-positive label scale
        Eigen::VectorXd y_raw = Eigen::Map<const Eigen::VectorXd>(
            y_values.data(), static_cast<Eigen::Index>(y_values.size()));
        const double y_mean = y_raw.mean();
        Eigen::VectorXd y = y_raw.array() - y_mean;
        RefitResult rf = refit(pool, cfg, observed, y, mkl_warm);

        GPState state = fit(submatrix(rf.k_full, observed), y, rf.sigma2);
        state.observed = observed;
        if (std::getenv("TOPOBO_GP_LOG"))
            std::fprintf(stderr, "[gp] step=%d n=%zu jitter=%g sigma2=%g loglik=%g\n", step,
                         observed.size(), state.jitter, rf.sigma2, log_marginal_likelihood(state));

        const double y_best = *std::min_element(y_values.begin(), y_values.end());
        int chosen = -1;
        double best_ei = -1.0;
        Eigen::VectorXd k_vec(static_cast<Eigen::Index>(observed.size()));
        for (int j = 0; j < n; ++j) {
            if (is_observed[static_cast<std::size_t>(j)]) continue;
            for (std::size_t a = 0; a < observed.size(); ++a)
                k_vec(static_cast<Eigen::Index>(a)) = rf.k_full(observed[a], j);
            auto [mu, var] = predict(state, k_vec, rf.k_full(j, j));
            double ei = expected_improvement(mu + y_mean, std::sqrt(var), y_best);
            if (ei > best_ei) {
                best_ei = ei;
                chosen = j;
            }
        }

        double obs = pool.labels(chosen) + (cfg.noise_sd > 0.0 ? cfg.noise_sd * rng.normal() : 0.0);
        observed.push_back(chosen);
        is_observed[static_cast<std::size_t>(chosen)] = true;
        y_values.push_back(obs);
        best = std::min(best, obs);
        trace.steps.push_back({step, pool.ids[static_cast<std::size_t>(chosen)], obs, best});

        StepDiagnostics diag;
        diag.step = step;
        diag.sigma2 = rf.sigma2;
        diag.alpha.assign(rf.alpha.data(), rf.alpha.data() + rf.alpha.size());
        diag.max_ei = best_ei;
        diag.pfk_selected = rf.pfk_selected;
        trace.diagnostics.push_back(std::move(diag));
    }

    trace.aucc = aucc(trace, trace.target);
    return trace;
}

BOTrace run_random(const PoolKernels& pool, const RunConfig& cfg, const std::vector<int>* forced_init) {
    const int n = static_cast<int>(pool.ids.size());
    if (pool.labels.size() != n) throw input_error("run_random: labels/ids size mismatch");
    if (n <= cfg.n_init) throw input_error("pool size must exceed n_init");

    Rng rng(cfg.seed);
    BOTrace trace;
    trace.seed = cfg.seed;
    trace.kernel_desc = "random";
    trace.target = min_label(pool.labels);

    std::vector<int> observed = forced_init ? *forced_init : sample_initial(rng, n, cfg.n_init);
    std::vector<bool> is_observed(static_cast<std::size_t>(n), false);
    double best = std::numeric_limits<double>::infinity();
    for (int idx : observed) {
        if (idx < 0 || idx >= n || is_observed[static_cast<std::size_t>(idx)])
            throw input_error("invalid or duplicate initial index");
        is_observed[static_cast<std::size_t>(idx)] = true;
        double obs = pool.labels(idx) + (cfg.noise_sd > 0.0 ? cfg.noise_sd * rng.normal() : 0.0);
        best = std::min(best, obs);
        trace.steps.push_back({0, pool.ids[static_cast<std::size_t>(idx)], obs, best});
    }

    std::vector<int> unobserved;
    for (int j = 0; j < n; ++j)
        if (!is_observed[static_cast<std::size_t>(j)]) unobserved.push_back(j);

    for (int step = 1; step <= cfg.n_steps; ++step) {
        if (unobserved.empty()) {
            trace.truncated = true;
            break;
        }
        std::size_t pick = rng.below(unobserved.size());
        int j = unobserved[pick];
        unobserved.erase(unobserved.begin() + static_cast<std::ptrdiff_t>(pick));
        double obs = pool.labels(j) + (cfg.noise_sd > 0.0 ? cfg.noise_sd * rng.normal() : 0.0);
        best = std::min(best, obs);
        trace.steps.push_back({step, pool.ids[static_cast<std::size_t>(j)], obs, best});
    }

    trace.aucc = aucc(trace, trace.target);
    return trace;
}

double aucc(const BOTrace& trace, double target) {
    if (trace.steps.empty()) return 0.0;
    double total = 0.0;
    int prev_step = 0;
    double best_at_step = trace.steps.front().best_so_far;
    for (const auto& rec : trace.steps) {
        if (rec.step != prev_step) {
            total += best_at_step - target;
            prev_step = rec.step;
        }
        best_at_step = rec.best_so_far;
    }
    total += best_at_step - target;
    return total;
}

BenchmarkResult benchmark(const PoolKernels& pool, const std::vector<RunConfig>& configs, int threads) {
    if (configs.empty()) throw input_error("benchmark: no configs");
    for (const auto& c : configs) c.validate();

    const RunConfig& base = configs.front();
    struct Task {
        int config_index;  // -1 = random baseline
        int repeat;
    };
    std::vector<Task> tasks;
    for (int r = 0; r < base.repeats; ++r) tasks.push_back({-1, r});
    for (std::size_t c = 0; c < configs.size(); ++c)
        for (int r = 0; r < configs[c].repeats; ++r) tasks.push_back({static_cast<int>(c), r});

    std::vector<BOTrace> traces(tasks.size());
    parallel_for(tasks.size(), threads, [&](std::size_t t) {
        const Task& task = tasks[t];
        if (task.config_index < 0) {
            RunConfig cfg = base;
            cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(task.repeat));
            traces[t] = run_random(pool, cfg);
        } else {
            RunConfig cfg = configs[static_cast<std::size_t>(task.config_index)];
            cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(task.repeat));
            traces[t] = run_bo(pool, cfg);
        }
    });

    BenchmarkResult result;
    result.traces = traces;

    auto summarize = [&](int config_index, const std::string& name) {
        std::vector<double> vals;
        for (std::size_t t = 0; t < tasks.size(); ++t)
            if (tasks[t].config_index == config_index) vals.push_back(traces[t].aucc);
        BenchmarkRow row;
        row.method = name;
        row.repeats = static_cast<int>(vals.size());
        double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
        double sq = 0.0;
        for (double v : vals) sq += (v - mean) * (v - mean);
        row.mean_aucc = mean;
        row.se_aucc = vals.size() > 1
                          ? std::sqrt(sq / (vals.size() - 1)) / std::sqrt(static_cast<double>(vals.size()))
                          : 0.0;
        return row;
    };

    BenchmarkRow random_row = summarize(-1, "random");
    const double random_mean = random_row.mean_aucc;
    auto ratio = [&](double mean) { return random_mean != 0.0 ? mean / random_mean : 0.0; };
    random_row.ratio = ratio(random_row.mean_aucc);
    result.rows.push_back(random_row);
    for (std::size_t c = 0; c < configs.size(); ++c) {
        BenchmarkRow row = summarize(static_cast<int>(c), configs[c].method_desc());
        row.ratio = ratio(row.mean_aucc);
        result.rows.push_back(row);
    }
    return result;
}

std::string summary_csv(const BenchmarkResult& result) {
    std::ostringstream out;
    out << "method,mean_aucc,se_aucc,ratio,repeats\n";
    char buf[160];
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%d\n", row.method.c_str(),
                      row.mean_aucc, row.se_aucc, row.ratio, row.repeats);
        out << buf;
    }
    return out.str();
}

std::string summary_table(const BenchmarkResult& result) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-28s %14s %12s %10s\n", "method", "mean AUCC", "std err",
                  "ratio");
    out << buf;
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%-28s %14.4f %12.4f %10.4f\n", row.method.c_str(),
                      row.mean_aucc, row.se_aucc, row.ratio);
        out << buf;
    }
    return out.str();
}

std::string trace_csv(const BOTrace& trace) {
    std::ostringstream out;
    out << "step,chosen_id,observed_y,best_so_far\n";
    char buf[160];
    for (const auto& rec : trace.steps) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g\n", rec.step, rec.chosen_id.c_str(),
                      rec.observed_y, rec.best_so_far);
        out << buf;
    }
    return out.str();
}

std::string trace_sidecar_json(const BOTrace& trace, const RunConfig& cfg) {
    json side;
    side["seed"] = trace.seed;
    side["kernel_desc"] = trace.kernel_desc;
    side["target"] = trace.target;
    side["aucc"] = trace.aucc;
    side["truncated"] = trace.truncated;
    side["config"] = {{"kernel", kernel_kind_name(cfg.kernel)},
                      {"degrees", degree_choice_name(cfg.degrees)},
                      {"mkl", mkl_mode_name(cfg.mkl)},
                      {"n_init", cfg.n_init},
                      {"n_steps", cfg.n_steps},
                      {"noise_sd", cfg.noise_sd},
                      {"repeats", cfg.repeats},
                      {"use_rff", cfg.use_rff},
                      {"rff_features", cfg.rff_features}};
    json per_step = json::array();
    for (const auto& d : trace.diagnostics) {
        json rec = {{"step", d.step}, {"sigma2", d.sigma2}, {"alpha", d.alpha}, {"max_ei", d.max_ei}};
        if (!d.pfk_selected.empty()) {
            json sel = json::array();
            for (auto [nu, t] : d.pfk_selected) sel.push_back({{"nu", nu}, {"t", t}});
            rec["pfk"] = std::move(sel);
        }
        per_step.push_back(std::move(rec));
    }
    side["per_step"] = std::move(per_step);
    return side.dump(2);
}

}  // namespace topobo
