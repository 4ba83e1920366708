#pragma once

#include <Eigen/Dense>
#include <vector>

namespace topobo {

// Factorized posterior state over the observed subset.
struct GPState {
    std::vector<int> observed;   // pool indices, filled by the caller
    Eigen::VectorXd y;
    double noise_var = 0.0;
    double jitter = 0.0;         // ridge added on top of noise_var to factorize
    Eigen::MatrixXd chol_lower;  // L with L L^T = K + (noise_var + jitter) I
    Eigen::VectorXd alpha_vec;   // (K + noise_var I)^-1 y via triangular solves

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
};

// Cholesky with escalating jitter: 0, then 1e-10 up to 1e-4 in x10 steps.
// Throws numerical_error naming the smallest eigenvalue if all fail.
GPState fit(const Eigen::MatrixXd& k_obs, const Eigen::VectorXd& y, double noise_var);

// mu = k_vec . alpha, var = k_self - k_vec (K + noise I)^-1 k_vec, clamped at 0.
std::pair<double, double> predict(const GPState& state, const Eigen::VectorXd& k_vec, double k_self);

// log p(y) = -1/2 log|K + noise I| - 1/2 y^T (K + noise I)^-1 y (up to the constant term)
double log_marginal_likelihood(const Eigen::MatrixXd& k_obs, const Eigen::VectorXd& y, double noise_var);

// same quantity read off an existing factorization
double log_marginal_likelihood(const GPState& state);

// Maximizes the log-likelihood over noise_var on a 25-point log grid spanning
// [1e-6 var(y), var(y)], then golden-section refinement around the best cell.
// var(y) == 0 returns the 1e-6 floor.
double mle_noise(const Eigen::MatrixXd& k_obs, const Eigen::VectorXd& y);

// Minimization-convention EI: sd * (Z Phi(Z) + phi(Z)) with Z = (y_best - mu)/sd;
// 0 when sd == 0.
double expected_improvement(double mu, double sd, double y_best);

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace topobo
