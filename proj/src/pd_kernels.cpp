#include "topobo/pd_kernels.hpp"

#include <algorithm>
#include <cmath>

#include "topobo/errors.hpp"
#include "topobo/parallel.hpp"
#include "topobo/rng.hpp"

namespace topobo {

double pers(const DiagramPoint& x) { return x.death - x.birth; }

double pwgk_weight(const DiagramPoint& x, const PwgkParams& params) {
    return std::atan(params.C * std::pow(pers(x), params.p));
}

namespace {

// Canonical total order on diagrams so that k(Di, Dj) and k(Dj, Di) run the
// identical float operations and agree bitwise.
bool diagram_less(const PersistenceDiagram& a, const PersistenceDiagram& b) {
    if (a.points.size() != b.points.size()) return a.points.size() < b.points.size();
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        if (a.points[i].birth != b.points[i].birth) return a.points[i].birth < b.points[i].birth;
        if (a.points[i].death != b.points[i].death) return a.points[i].death < b.points[i].death;
    }
    return false;
}

double pwgk_inner_ordered(const PersistenceDiagram& da, const PersistenceDiagram& db,
                          const PwgkParams& params) {
    const double inv_two_nu2 = 1.0 / (2.0 * params.nu * params.nu);
    double total = 0.0;
    for (const auto& x : da.points) {
        const double wx = pwgk_weight(x, params);
        double row = 0.0;
        for (const auto& y : db.points) {
            const double db_ = x.birth - y.birth;
            const double dd = x.death - y.death;
            row += pwgk_weight(y, params) * std::exp(-(db_ * db_ + dd * dd) * inv_two_nu2);
        }
        total += wx * row;
    }
    return total;
}

}  // namespace

double pwgk_inner(const PersistenceDiagram& di, const PersistenceDiagram& dj, const PwgkParams& params) {
    if (di.points.empty() || dj.points.empty()) return 0.0;
    return diagram_less(dj, di) ? pwgk_inner_ordered(dj, di, params)
                                : pwgk_inner_ordered(di, dj, params);
}

double pwgk_gaussian(const PersistenceDiagram& di, const PersistenceDiagram& dj, const PwgkParams& params) {
    if (!params.tau) throw input_error("pwgk_gaussian requires tau");
    const PersistenceDiagram& a = diagram_less(dj, di) ? dj : di;
    const PersistenceDiagram& b = diagram_less(dj, di) ? di : dj;
    double d2 = pwgk_inner(a, a, params) + pwgk_inner(b, b, params) - 2.0 * pwgk_inner(a, b, params);
    d2 = std::max(d2, 0.0);
    return std::exp(-d2 / (2.0 * (*params.tau) * (*params.tau)));
}

RffEmbedding RffEmbedding::create(std::size_t num_features, double nu, std::uint64_t seed) {
    RffEmbedding emb;
    emb.num_features = num_features;
    emb.seed = seed;
    emb.frequencies.resize(static_cast<Eigen::Index>(num_features), 2);
    emb.phases.resize(static_cast<Eigen::Index>(num_features));
    Rng rng(seed);
    const double sigma = 1.0 / nu;
    for (std::size_t mth = 0; mth < num_features; ++mth) {
        emb.frequencies(static_cast<Eigen::Index>(mth), 0) = sigma * rng.normal();
        emb.frequencies(static_cast<Eigen::Index>(mth), 1) = sigma * rng.normal();
        emb.phases(static_cast<Eigen::Index>(mth)) = rng.uniform(0.0, 6.283185307179586476925286766559);
    }
    return emb;
}

Eigen::VectorXd rff_embed(const PersistenceDiagram& d, const PwgkParams& params, const RffEmbedding& emb) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(emb.num_features));
    const double scale = std::sqrt(2.0 / static_cast<double>(emb.num_features));
    for (const auto& x : d.points) {
        const double w = pwgk_weight(x, params);
        for (Eigen::Index mth = 0; mth < out.size(); ++mth) {
            double arg = emb.frequencies(mth, 0) * x.birth + emb.frequencies(mth, 1) * x.death +
                         emb.phases(mth);
            out(mth) += w * std::cos(arg);
        }
    }
    return out * scale;
}

namespace {

struct Point2 {
    double x, y;
};

// density of the mixture with components `comps` (std dev nu), up to the
// common normal constant which cancels after normalization
void mixture_density(const std::vector<Point2>& comps, const std::vector<Point2>& at, double nu,
                     Eigen::VectorXd& out) {
    const double inv_two_nu2 = 1.0 / (2.0 * nu * nu);
    out.resize(static_cast<Eigen::Index>(at.size()));
    for (std::size_t t = 0; t < at.size(); ++t) {
        double s = 0.0;
        for (const auto& c : comps) {
            const double dx = at[t].x - c.x;
            const double dy = at[t].y - c.y;
            s += std::exp(-(dx * dx + dy * dy) * inv_two_nu2);
        }
        out(static_cast<Eigen::Index>(t)) = s;
    }
}

double pfk_fim_ordered(const PersistenceDiagram& da, const PersistenceDiagram& db, double nu) {
    std::vector<Point2> a_aug, b_aug, theta;
    a_aug.reserve(da.size() + db.size());
    b_aug.reserve(da.size() + db.size());
    for (const auto& p : da.points) a_aug.push_back({p.birth, p.death});
    for (const auto& p : db.points) {
        double mid = (p.birth + p.death) / 2.0;
        a_aug.push_back({mid, mid});
    }
    for (const auto& p : db.points) b_aug.push_back({p.birth, p.death});
    for (const auto& p : da.points) {
        double mid = (p.birth + p.death) / 2.0;
        b_aug.push_back({mid, mid});
    }
    theta.reserve(a_aug.size() + b_aug.size());
    theta.insert(theta.end(), a_aug.begin(), a_aug.end());
    theta.insert(theta.end(), b_aug.begin(), b_aug.end());

    Eigen::VectorXd rho_a, rho_b;
    mixture_density(a_aug, theta, nu, rho_a);
    mixture_density(b_aug, theta, nu, rho_b);
    rho_a /= rho_a.sum();
    rho_b /= rho_b.sum();
    double bc = rho_a.cwiseProduct(rho_b).cwiseSqrt().sum();
    bc = std::clamp(bc, 0.0, 1.0);
    return std::acos(bc);
}

}  // namespace

double pfk_fim(const PersistenceDiagram& di, const PersistenceDiagram& dj, double nu) {
    if (!(nu > 0.0)) throw input_error("pfk nu must be > 0");
    bool ij = diagram_less(di, dj);
    bool ji = diagram_less(dj, di);
    if (!ij && !ji) return 0.0;  // identical content: d_FIM(D, D) = 0 exactly
    return ji ? pfk_fim_ordered(dj, di, nu) : pfk_fim_ordered(di, dj, nu);
}

double pfk(const PersistenceDiagram& di, const PersistenceDiagram& dj, const PfkParams& params) {
    if (!(params.t > 0.0)) throw input_error("pfk t must be > 0");
    return std::exp(-params.t * pfk_fim(di, dj, params.nu));
}

std::string kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::PwgkLinear: return "pwgk_linear";
        case KernelKind::PwgkGaussian: return "pwgk_gaussian";
        case KernelKind::Pfk: return "pfk";
    }
    return "?";
}

GramMatrix gram(const std::vector<std::string>& ids, const std::vector<PersistenceDiagram>& diagrams,
                const KernelSpec& spec, int threads) {
    if (ids.size() != diagrams.size()) throw input_error("gram: ids/diagrams size mismatch");
    const Eigen::Index n = static_cast<Eigen::Index>(diagrams.size());
    GramMatrix g;
    g.ids = ids;
    g.values.resize(n, n);

    if (spec.use_rff && spec.kind != KernelKind::Pfk) {
        auto emb = RffEmbedding::create(spec.rff_features, spec.pwgk.nu, spec.rff_seed);
        Eigen::MatrixXd z(n, static_cast<Eigen::Index>(spec.rff_features));
        parallel_for(diagrams.size(), threads, [&](std::size_t i) {
            z.row(static_cast<Eigen::Index>(i)) = rff_embed(diagrams[i], spec.pwgk, emb).transpose();
        });
        Eigen::MatrixXd inner = z * z.transpose();
        if (spec.kind == KernelKind::PwgkLinear) {
            g.values = (inner + inner.transpose()) / 2.0;
        } else {
            if (!spec.pwgk.tau) throw input_error("pwgk_gaussian requires tau");
            const double inv_two_tau2 = 1.0 / (2.0 * (*spec.pwgk.tau) * (*spec.pwgk.tau));
            for (Eigen::Index i = 0; i < n; ++i) {
                g.values(i, i) = 1.0;
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    double d2 = std::max(inner(i, i) + inner(j, j) - 2.0 * inner(i, j), 0.0);
                    double v = std::exp(-d2 * inv_two_tau2);
                    g.values(i, j) = v;
                    g.values(j, i) = v;
                }
            }
        }
        return g;
    }

    // upper triangle, computed once and mirrored
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) pairs.emplace_back(i, j);

    parallel_for(pairs.size(), threads, [&](std::size_t idx) {
        auto [i, j] = pairs[idx];
        double v = 0.0;
        switch (spec.kind) {
            case KernelKind::PwgkLinear:
                v = pwgk_inner(diagrams[i], diagrams[j], spec.pwgk);
                break;
            case KernelKind::PwgkGaussian:
                v = (i == j) ? 1.0 : pwgk_gaussian(diagrams[i], diagrams[j], spec.pwgk);
                break;
            case KernelKind::Pfk:
                v = (i == j) ? 1.0 : pfk(diagrams[i], diagrams[j], spec.pfk);
                break;
        }
        g.values(i, j) = v;
        g.values(j, i) = v;
    });
    return g;
}

double median(std::vector<double> values) {
    if (values.empty()) throw input_error("median of empty set");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double quantile(std::vector<double> values, double s) {
    if (values.empty()) throw input_error("quantile of empty set");
    std::sort(values.begin(), values.end());
    double pos = (s / 100.0) * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

double tau_from_linear_gram(const Eigen::MatrixXd& k) {
    std::vector<double> dists;
    for (Eigen::Index i = 0; i < k.rows(); ++i)
        for (Eigen::Index j = i + 1; j < k.cols(); ++j)
            dists.push_back(std::sqrt(std::max(k(i, i) + k(j, j) - 2.0 * k(i, j), 0.0)));
    return median(dists);
}

Heuristics heuristics(const std::vector<PersistenceDiagram>& diagrams, bool with_pfk_grid, int threads) {
    if (diagrams.size() < 2) throw input_error("heuristics needs at least 2 diagrams");
    bool any_nonempty = false;
    for (const auto& d : diagrams) any_nonempty |= !d.points.empty();
    if (!any_nonempty) throw input_error("heuristics: all diagrams empty, no statistics");

    Heuristics h;
    h.pwgk.p = 5.0;

    // C: median over diagrams of per-diagram median persistence
    std::vector<double> med_pers;
    for (const auto& d : diagrams) {
        if (d.points.empty()) continue;
        std::vector<double> ps;
        ps.reserve(d.size());
        for (const auto& x : d.points) ps.push_back(pers(x));
        med_pers.push_back(median(std::move(ps)));
    }
    h.pwgk.C = median(std::move(med_pers));

    // nu: median over diagrams of per-diagram median pairwise point distance;
    // fallback to the median distance across all points of all diagrams
    std::vector<double> med_dist;
    for (const auto& d : diagrams) {
        if (d.size() < 2) continue;
        std::vector<double> ds;
        for (std::size_t a = 0; a + 1 < d.size(); ++a)
            for (std::size_t b = a + 1; b < d.size(); ++b)
                ds.push_back(std::hypot(d.points[a].birth - d.points[b].birth,
                                        d.points[a].death - d.points[b].death));
        med_dist.push_back(median(std::move(ds)));
    }
    if (!med_dist.empty()) {
        h.pwgk.nu = median(std::move(med_dist));
    } else {
        std::vector<DiagramPoint> all;
        for (const auto& d : diagrams) all.insert(all.end(), d.points.begin(), d.points.end());
        std::vector<double> ds;
        for (std::size_t a = 0; a + 1 < all.size(); ++a)
            for (std::size_t b = a + 1; b < all.size(); ++b)
                ds.push_back(std::hypot(all[a].birth - all[b].birth, all[a].death - all[b].death));
        h.pwgk.nu = ds.empty() ? 1.0 : median(std::move(ds));
    }
    if (!(h.pwgk.nu > 0.0)) h.pwgk.nu = 1e-12;

    // tau: median pairwise RKHS distance under the linear embedding
    {
        KernelSpec spec;
        spec.kind = KernelKind::PwgkLinear;
        spec.pwgk = h.pwgk;
        std::vector<std::string> ids(diagrams.size());
        auto g = gram(ids, diagrams, spec, threads);
        h.pwgk.tau = tau_from_linear_gram(g.values);
        if (!(*h.pwgk.tau > 0.0)) h.pwgk.tau = 1e-12;
    }

    if (with_pfk_grid) {
        h.pfk.nu_grid = {1e-3, 10.0, 1e3};
        const Eigen::Index n = static_cast<Eigen::Index>(diagrams.size());
        for (double nu : h.pfk.nu_grid) {
            Eigen::MatrixXd fim = Eigen::MatrixXd::Zero(n, n);
            std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
            parallel_for(pairs.size(), threads, [&](std::size_t idx) {
                auto [i, j] = pairs[idx];
                double v = pfk_fim(diagrams[i], diagrams[j], nu);
                fim(i, j) = v;
                fim(j, i) = v;
            });
            std::vector<double> upper;
            upper.reserve(pairs.size());
            for (auto [i, j] : pairs) upper.push_back(fim(i, j));
            std::vector<double> qs;
            for (double s : {1.0, 2.0, 5.0, 10.0, 20.0, 50.0})
                qs.push_back(std::max(quantile(upper, s), 1e-12));
            h.pfk.fim.push_back(std::move(fim));
            h.pfk.inv_t_grid.push_back(std::move(qs));
        }
    }
    return h;
}

}  // namespace topobo
