#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topobo/persistence.hpp"

namespace topobo {

// Weight function and bandwidths of the persistence weighted Gaussian kernel.
struct PwgkParams {
    double C = 1.0;    // weight scale
    double p = 5.0;    // weight exponent
    double nu = 1.0;   // inner (component) bandwidth
    std::optional<double> tau;  // outer bandwidth, Gaussian variant only
};

// Persistence Fisher kernel: component standard deviation nu, outer scale t.
struct PfkParams {
    double nu = 1.0;
    double t = 1.0;
};

// Random Fourier feature draw for the PWGK component kernel exp(-||x-y||^2 / (2 nu^2)).
struct RffEmbedding {
    std::size_t num_features = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd frequencies;  // num_features x 2, iid N(0, 1/nu^2)
    Eigen::VectorXd phases;       // uniform on [0, 2 pi)

    static RffEmbedding create(std::size_t num_features, double nu, std::uint64_t seed);
};

double pers(const DiagramPoint& x);

// arctan(C * pers(x)^p), strictly in (0, pi/2)
double pwgk_weight(const DiagramPoint& x, const PwgkParams& params);

// Linear kernel on the RKHS embeddings: double sum of w(x) w(y) exp(-||x-y||^2/(2 nu^2)).
double pwgk_inner(const PersistenceDiagram& di, const PersistenceDiagram& dj, const PwgkParams& params);

// exp(-||E(mu_Di) - E(mu_Dj)||_H^2 / (2 tau^2)) via the three-double-sum expansion.
double pwgk_gaussian(const PersistenceDiagram& di, const PersistenceDiagram& dj, const PwgkParams& params);

// feature_m = sqrt(2/M) * sum_x w(x) cos(<freq_m, x> + phase_m)
Eigen::VectorXd rff_embed(const PersistenceDiagram& d, const PwgkParams& params, const RffEmbedding& emb);

// Fisher information metric between the diagonally-augmented normal mixtures,
// discretized on Theta = Di u proj(Dj) u Dj u proj(Di). Both empty -> 0.
double pfk_fim(const PersistenceDiagram& di, const PersistenceDiagram& dj, double nu);

double pfk(const PersistenceDiagram& di, const PersistenceDiagram& dj, const PfkParams& params);

enum class KernelKind { PwgkLinear, PwgkGaussian, Pfk };

std::string kernel_kind_name(KernelKind kind);

struct KernelSpec {
    KernelKind kind = KernelKind::PwgkLinear;
    PwgkParams pwgk;
    PfkParams pfk;
    bool use_rff = false;          // PWGK only; exact evaluation is the default
    std::size_t rff_features = 2048;
    std::uint64_t rff_seed = 0;
};

struct GramMatrix {
    std::vector<std::string> ids;
    Eigen::MatrixXd values;
};

GramMatrix gram(const std::vector<std::string>& ids, const std::vector<PersistenceDiagram>& diagrams,
                const KernelSpec& spec, int threads = 0);

// Pairwise d_FIM matrices (one per nu) plus the 1/t quantile grid derived from them.
struct PfkGrid {
    std::vector<double> nu_grid;                 // {1e-3, 10, 1e3}
    std::vector<Eigen::MatrixXd> fim;            // per nu, pairwise d_FIM over the diagrams
    std::vector<std::vector<double>> inv_t_grid; // per nu: {q1, q2, q5, q10, q20, q50}
};

struct Heuristics {
    PwgkParams pwgk;  // C, p = 5, nu, tau
    PfkGrid pfk;
};

// Median-based defaults. C = median of per-diagram median persistence;
// nu = median of per-diagram median pairwise point distance (fallback: median
// distance across all points of all diagrams); tau = median pairwise RKHS
// distance. PFK grids are skipped when with_pfk_grid is false.
Heuristics heuristics(const std::vector<PersistenceDiagram>& diagrams, bool with_pfk_grid = true,
                      int threads = 0);

// tau recovered from an existing linear Gram: median over i<j of
// sqrt(K_ii + K_jj - 2 K_ij).
double tau_from_linear_gram(const Eigen::MatrixXd& gram_linear);

double median(std::vector<double> values);

// Linear interpolation between order statistics, s in [0, 100].
double quantile(std::vector<double> values, double s);

}  // namespace topobo
