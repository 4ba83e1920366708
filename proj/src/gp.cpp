#include "topobo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "topobo/errors.hpp"

namespace topobo {

namespace {

const double kJitterLadder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};

bool try_llt(const Eigen::MatrixXd& a, Eigen::LLT<Eigen::MatrixXd>& llt) {
    llt.compute(a);
    return llt.info() == Eigen::Success;
}

}  // namespace

GPState fit(const Eigen::MatrixXd& k_obs, const Eigen::VectorXd& y, double noise_var) {
    if (k_obs.rows() != k_obs.cols() || k_obs.rows() != y.size())
        throw input_error("fit: dimension mismatch");
    const Eigen::Index n = k_obs.rows();
    Eigen::MatrixXd base = k_obs;
    base.diagonal().array() += noise_var;

    Eigen::LLT<Eigen::MatrixXd> llt;
    for (double jitter : kJitterLadder) {
        Eigen::MatrixXd a = base;
        a.diagonal().array() += jitter;
        if (try_llt(a, llt)) {
            GPState state;
            state.y = y;
            state.noise_var = noise_var;
            state.jitter = jitter;
            state.chol_lower = llt.matrixL();
            state.alpha_vec = llt.solve(y);
            return state;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "Cholesky failed at max jitter 1e-4; smallest eigenvalue of K + noise I is "
        << es.eigenvalues().minCoeff() << " (n = " << n << ")";
    throw numerical_error(msg.str());
}

std::pair<double, double> predict(const GPState& state, const Eigen::VectorXd& k_vec, double k_self) {
    if (k_vec.size() != state.y.size()) throw input_error("predict: k_vec length mismatch");
    const double mu = k_vec.dot(state.alpha_vec);
    Eigen::VectorXd v = state.chol_lower.triangularView<Eigen::Lower>().solve(k_vec);
    const double var = std::max(k_self - v.squaredNorm(), 0.0);
    return {mu, var};
}

double log_marginal_likelihood(const GPState& state) {
    double logdet = 2.0 * state.chol_lower.diagonal().array().log().sum();
    return -0.5 * logdet - 0.5 * state.y.dot(state.alpha_vec);
}

double log_marginal_likelihood(const Eigen::MatrixXd& k_obs, const Eigen::VectorXd& y, double noise_var) {
    return log_marginal_likelihood(fit(k_obs, y, noise_var));
}

namespace {

// log-likelihood over noise_var, evaluated in O(n) from one eigendecomposition
struct NoiseLikelihood {
    Eigen::VectorXd lambda;  // eigenvalues of K, clamped at 0
    Eigen::VectorXd z2;      // squared projections of y

    double operator()(double noise_var) const {
        double logdet = 0.0, quad = 0.0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            double d = lambda(i) + noise_var;
            logdet += std::log(d);
            quad += z2(i) / d;
        }
        return -0.5 * logdet - 0.5 * quad;
    }
};

}  // namespace

double mle_noise(const Eigen::MatrixXd& k_obs, const Eigen::VectorXd& y) {
    const Eigen::Index n = y.size();
    if (n < 2) throw input_error("mle_noise needs n >= 2");
    const double mean = y.mean();
    const double var_y = (y.array() - mean).square().sum() / static_cast<double>(n);
    if (var_y <= 0.0) return 1e-6;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k_obs);
    NoiseLikelihood ll;
    ll.lambda = es.eigenvalues().cwiseMax(0.0);
    ll.z2 = (es.eigenvectors().transpose() * y).array().square();

    const double lo = 1e-6 * var_y, hi = var_y;
    const int grid_n = 25;
    std::vector<double> grid(grid_n);
    for (int i = 0; i < grid_n; ++i)
        grid[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (grid_n - 1));

    int best = 0;
    double best_ll = ll(grid[0]);
    for (int i = 1; i < grid_n; ++i) {
        double v = ll(grid[i]);
        if (v > best_ll) {
            best_ll = v;
            best = i;
        }
    }

    // golden-section on log sigma^2 around the best grid cell
    double a = std::log(grid[std::max(0, best - 1)]);
    double b = std::log(grid[std::min(grid_n - 1, best + 1)]);
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = ll(std::exp(x1)), f2 = ll(std::exp(x2));
    for (int it = 0; it < 60 && (b - a) > 1e-12; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = ll(std::exp(x2));
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = ll(std::exp(x1));
        }
    }
    double refined = std::exp((a + b) / 2.0);
    double candidate = ll(refined) > best_ll ? refined : grid[best];
    return std::clamp(candidate, lo, hi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) * 0.3989422804014326779; }

double expected_improvement(double mu, double sd, double y_best) {
    if (sd <= 0.0) return 0.0;
    const double z = (y_best - mu) / sd;
    return std::max(sd * (z * normal_cdf(z) + normal_pdf(z)), 0.0);
}

}  // namespace topobo
