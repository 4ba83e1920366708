#include "topobo/mkl.hpp"

#include <algorithm>
#include <cmath>

#include "topobo/errors.hpp"
#include "topobo/gp.hpp"

namespace topobo {

Eigen::MatrixXd combine(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& alpha) {
    if (ks.empty()) throw input_error("combine: no kernels");
    if (static_cast<Eigen::Index>(ks.size()) != alpha.size())
        throw input_error("combine: weight count mismatch");
    for (const auto& k : ks)
        if (k.rows() != ks[0].rows() || k.cols() != ks[0].cols())
            throw input_error("combine: Gram dimension mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ks[0].rows(), ks[0].cols());
    for (std::size_t i = 0; i < ks.size(); ++i) out += alpha(static_cast<Eigen::Index>(i)) * ks[i];
    return out;
}

Eigen::MatrixXd center_gram(const Eigen::MatrixXd& k) {
    if (k.rows() != k.cols()) throw input_error("center_gram: matrix not square");
    const double grand = k.mean();
    Eigen::VectorXd row_means = k.rowwise().mean();
    Eigen::RowVectorXd col_means = k.colwise().mean();
    Eigen::MatrixXd out = k;
    out.colwise() -= row_means;
    out.rowwise() -= col_means;
    out.array() += grand;
    return out;
}

double alignment(const Eigen::MatrixXd& k1, const Eigen::MatrixXd& k2) {
    Eigen::MatrixXd c1 = center_gram(k1);
    Eigen::MatrixXd c2 = center_gram(k2);
    const double n1 = c1.norm();
    const double n2 = c2.norm();
    if (n1 <= 0.0 || n2 <= 0.0)
        throw input_error("alignment undefined: a centered Gram matrix has zero norm");
    return c1.cwiseProduct(c2).sum() / (n1 * n2);
}

MklWeights solve_alignment_qp(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y) {
    if (ks.empty()) throw input_error("solve_alignment_qp: no kernels");
    const Eigen::Index k = static_cast<Eigen::Index>(ks.size());
    std::vector<Eigen::MatrixXd> centered;
    centered.reserve(ks.size());
    for (const auto& ki : ks) centered.push_back(center_gram(ki));

    Eigen::MatrixXd m(k, k);
    Eigen::VectorXd a(k);
    Eigen::MatrixXd yy = y * y.transpose();
    for (Eigen::Index i = 0; i < k; ++i) {
        a(i) = centered[static_cast<std::size_t>(i)].cwiseProduct(yy).sum();
        for (Eigen::Index j = i; j < k; ++j) {
            double v = centered[static_cast<std::size_t>(i)]
                           .cwiseProduct(centered[static_cast<std::size_t>(j)])
                           .sum();
            m(i, j) = v;
            m(j, i) = v;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    double lip = std::max(es.eigenvalues().maxCoeff(), 1e-300);

    Eigen::VectorXd v = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXd next = (v - (m * v - a) / lip).cwiseMax(0.0);
        double moved = (next - v).norm();
        v = next;
        if (moved < 1e-10) break;
    }

    MklWeights w;
    const double norm = v.norm();
    if (norm <= 0.0) {
        // no kernel has positive alignment with yy^T; fall back to uniform
        w.alpha = Eigen::VectorXd::Constant(k, 1.0 / std::sqrt(static_cast<double>(k)));
        return w;
    }
    w.alpha = v / norm;
    return w;
}

double mkl_log_likelihood(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y,
                          double noise_var, const Eigen::VectorXd& alpha) {
    return log_marginal_likelihood(combine(ks, alpha), y, noise_var);
}

Eigen::VectorXd mle_weights_gradient(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y,
                                     double noise_var, const Eigen::VectorXd& alpha) {
    GPState state = fit(combine(ks, alpha), y, noise_var);
    // beta = G^-1 y with G = sum alpha_i K_i + noise I
    const Eigen::VectorXd& beta = state.alpha_vec;
    Eigen::VectorXd grad(alpha.size());
    auto llt = state.chol_lower.triangularView<Eigen::Lower>();
    for (std::size_t i = 0; i < ks.size(); ++i) {
        double quad = beta.dot(ks[i] * beta);
        // tr(G^-1 K_i) via two triangular solves
        Eigen::MatrixXd x = llt.solve(ks[i]);
        state.chol_lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
        grad(static_cast<Eigen::Index>(i)) = 0.5 * quad - 0.5 * x.trace();
    }
    return grad;
}

namespace {

double softplus(double b) { return b > 30.0 ? b : std::log1p(std::exp(b)); }
double softplus_inv(double a) { return a > 30.0 ? a : std::log(std::expm1(std::max(a, 1e-300))); }
double sigmoid(double b) { return 1.0 / (1.0 + std::exp(-b)); }

}  // namespace

MleWeightsResult mle_weights(const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y,
                             double noise_var, const Eigen::VectorXd* warm_start) {
    if (ks.empty()) throw input_error("mle_weights: no kernels");
    const Eigen::Index k = static_cast<Eigen::Index>(ks.size());

    Eigen::VectorXd beta(k);
    if (warm_start) {
        for (Eigen::Index i = 0; i < k; ++i) beta(i) = softplus_inv(std::max((*warm_start)(i), 1e-12));
    } else {
        beta.setConstant(softplus_inv(1.0 / static_cast<double>(k)));
    }

    auto alpha_of = [&](const Eigen::VectorXd& b) {
        Eigen::VectorXd a(k);
        for (Eigen::Index i = 0; i < k; ++i) a(i) = softplus(b(i));
        return a;
    };

    MleWeightsResult res;
    Eigen::VectorXd alpha = alpha_of(beta);
    double ll = mkl_log_likelihood(ks, y, noise_var, alpha);
    res.loglik_path.push_back(ll);

    int it = 0;
    for (; it < 500; ++it) {
        Eigen::VectorXd grad_alpha = mle_weights_gradient(ks, y, noise_var, alpha);
        Eigen::VectorXd grad_beta(k);
        for (Eigen::Index i = 0; i < k; ++i) grad_beta(i) = grad_alpha(i) * sigmoid(beta(i));
        if (grad_beta.norm() < 1e-6) break;

        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            Eigen::VectorXd beta_try = beta + step * grad_beta;
            Eigen::VectorXd alpha_try = alpha_of(beta_try);
            double ll_try;
            try {
                ll_try = mkl_log_likelihood(ks, y, noise_var, alpha_try);
            } catch (const numerical_error&) {
                step *= 0.5;
                continue;
            }
            if (ll_try > ll) {
                beta = beta_try;
                alpha = alpha_try;
                ll = ll_try;
                res.loglik_path.push_back(ll);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no ascent direction at line-search resolution
    }

    res.alpha = alpha;
    res.loglik = ll;
    res.iterations = it;
    return res;
}

}  // namespace topobo
