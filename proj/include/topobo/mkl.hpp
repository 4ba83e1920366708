#pragma once

#include <Eigen/Dense>
#include <vector>

namespace topobo {

// Nonnegative coefficients of a kernel combination; the alignment path
// returns them with unit Euclidean norm.
struct MklWeights {
    Eigen::VectorXd alpha;
};

// Entrywise weighted sum of Gram matrices; preserves symmetry and PSD for alpha >= 0.
Eigen::MatrixXd combine(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& alpha);

// K - row means - column means + grand mean.
Eigen::MatrixXd center_gram(const Eigen::MatrixXd& k);

// <Kc, K'c>_F / (||Kc||_F ||K'c||_F) in [-1, 1].
double alignment(const Eigen::MatrixXd& k1, const Eigen::MatrixXd& k2);

// Alignment maximization: min_{v>=0} v^T M v - 2 v^T a with M_ij = <K_ic, K_jc>_F
// and a_i = <K_ic, y y^T>_F, solved by projected gradient from the uniform start;
// returns v*/||v*||. v* = 0 falls back to uniform weights.
MklWeights solve_alignment_qp(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y);

struct MleWeightsResult {
    Eigen::VectorXd alpha;
    double loglik = 0.0;
    int iterations = 0;
    std::vector<double> loglik_path;  // accepted values, non-decreasing
};

// Maximizes the GP log-likelihood over alpha >= 0 via softplus-reparameterized
// gradient ascent with backtracking; warm_start (if given) replaces the uniform
// initialization.
MleWeightsResult mle_weights(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y,
                             double noise_var, const Eigen::VectorXd* warm_start = nullptr);

// Gradient of the log-likelihood wrt alpha at the given point (exposed for tests).
Eigen::VectorXd mle_weights_gradient(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y,
                                     double noise_var, const Eigen::VectorXd& alpha);

double mkl_log_likelihood(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y,
                          double noise_var, const Eigen::VectorXd& alpha);

}  // namespace topobo
