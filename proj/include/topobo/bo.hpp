#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topobo/pd_kernels.hpp"

namespace topobo {

enum class DegreeChoice { H0, H1, Both };
enum class MklMode { None, Align, Mle };

std::string degree_choice_name(DegreeChoice d);
std::string mkl_mode_name(MklMode m);

struct RunConfig {
    KernelKind kernel = KernelKind::PwgkLinear;
    DegreeChoice degrees = DegreeChoice::H1;
    MklMode mkl = MklMode::None;       // requires degrees == Both when not None
    int n_init = 10;
    int n_steps = 100;
    double noise_sd = 0.0;
    int repeats = 30;
    std::uint64_t seed = 0;
    bool use_rff = false;
    std::size_t rff_features = 2048;

    void validate() const;
    std::string method_desc() const;  // e.g. "pwgk_linear[h0+h1|mle]"
};

// Full-pool kernel assets the loop consumes. PWGK channels carry a fixed Gram;
// PFK channels carry per-nu d_FIM matrices plus the 1/t grid and are re-selected
// by marginal likelihood at every refit.
struct PoolChannel {
    int degree = 0;
    Eigen::MatrixXd gram;
    std::optional<PfkGrid> pfk;
};

struct PoolKernels {
    std::vector<std::string> ids;
    Eigen::VectorXd labels;
    std::vector<PoolChannel> channels;  // empty for pure random search
};

struct StepRecord {
    int step = 0;  // 0 for the initial design, then 1..n_steps
    std::string chosen_id;
    double observed_y = 0.0;
    double best_so_far = 0.0;
};

struct StepDiagnostics {
    int step = 0;
    double sigma2 = 0.0;
    std::vector<double> alpha;
    double max_ei = 0.0;
    std::vector<std::pair<double, double>> pfk_selected;  // (nu, t) per channel
};

struct BOTrace {
    std::uint64_t seed = 0;
    std::string kernel_desc;
    std::vector<StepRecord> steps;
    std::vector<StepDiagnostics> diagnostics;
    double target = 0.0;  // pool minimum label
    double aucc = 0.0;
    bool truncated = false;
};

// EI-driven pool optimization. forced_init overrides the seeded initial design
// (used by permutation tests and fixtures).
BOTrace run_bo(const PoolKernels& pool, const RunConfig& cfg,
               const std::vector<int>* forced_init = nullptr);

// Uniform random baseline over the same trace schema.
BOTrace run_random(const PoolKernels& pool, const RunConfig& cfg,
                   const std::vector<int>* forced_init = nullptr);

// Unit-width rectangle sum of (best_so_far - target) from step 0 (post-init)
// through the last recorded step.
double aucc(const BOTrace& trace, double target);

struct BenchmarkRow {
    std::string method;
    double mean_aucc = 0.0;
    double se_aucc = 0.0;
    double ratio = 0.0;  // mean / random mean
    int repeats = 0;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;     // Random first, then configs in order
    std::vector<BOTrace> traces;        // all traces, random included
};

// Runs every config plus the random baseline, `repeats` times each with seeds
// mix_seed(cfg.seed, repeat); repeats parallelize across threads.
BenchmarkResult benchmark(const PoolKernels& pool, const std::vector<RunConfig>& configs,
                          int threads = 0);

std::string summary_csv(const BenchmarkResult& result);
std::string summary_table(const BenchmarkResult& result);
std::string trace_csv(const BOTrace& trace);
std::string trace_sidecar_json(const BOTrace& trace, const RunConfig& cfg);

}  // namespace topobo
