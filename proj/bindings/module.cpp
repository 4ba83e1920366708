#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "topobo/bo.hpp"
#include "topobo/datasets.hpp"
#include "topobo/errors.hpp"
#include "topobo/gp.hpp"
#include "topobo/mkl.hpp"
#include "topobo/pd_kernels.hpp"
#include "topobo/persistence.hpp"

namespace py = pybind11;
using namespace topobo;

namespace {

PointCloud cloud_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& pts,
                            const std::string& id = "cloud") {
    if (pts.ndim() != 2) throw input_error("points must be a 2-d array (n, d)");
    PointCloud c;
    c.id = id;
    c.dim = static_cast<int>(pts.shape(1));
    c.coords.assign(pts.data(), pts.data() + pts.size());
    return c;
}

py::array_t<double> diagram_to_array(const PersistenceDiagram& d) {
    py::array_t<double> out({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(2)});
    auto r = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < d.size(); ++i) {
        r(static_cast<py::ssize_t>(i), 0) = d.points[i].birth;
        r(static_cast<py::ssize_t>(i), 1) = d.points[i].death;
    }
    return out;
}

PersistenceDiagram diagram_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& pts, int degree) {
    if (pts.size() != 0 && (pts.ndim() != 2 || pts.shape(1) != 2))
        throw input_error("diagram must be an (n, 2) array of (birth, death)");
    PersistenceDiagram d;
    d.degree = degree;
    if (pts.size() != 0) {
        auto r = pts.unchecked<2>();
        for (py::ssize_t i = 0; i < pts.shape(0); ++i) d.points.push_back({r(i, 0), r(i, 1)});
    }
    return d;
}

PwgkParams pwgk_params(double c, double p, double nu, std::optional<double> tau) {
    PwgkParams params;
    params.C = c;
    params.p = p;
    params.nu = nu;
    params.tau = tau;
    return params;
}

KernelKind kernel_from_name(const std::string& name) {
    if (name == "pwgk_linear") return KernelKind::PwgkLinear;
    if (name == "pwgk_gaussian") return KernelKind::PwgkGaussian;
    if (name == "pfk") return KernelKind::Pfk;
    throw input_error("unknown kernel '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Persistence-diagram kernels and pool Bayesian optimization";

    py::register_exception<input_error>(m, "InputError", PyExc_ValueError);
    py::register_exception<numerical_error>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<resource_error>(m, "ResourceError", PyExc_RuntimeError);

    // persistence
    m.def(
        "compute_h0",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts,
           std::optional<double> max_radius) {
            PointCloud c = cloud_from_array(pts);
            double r = max_radius.value_or(full_mst_radius(c));
            if (!(r > 0.0)) r = 1e-9;
            PersistenceDiagram d;
            {
                py::gil_scoped_release release;
                d = compute_h0(c, r);
            }
            return diagram_to_array(d);
        },
        py::arg("points"), py::arg("max_radius") = std::nullopt,
        "0th persistence diagram of a point cloud under the Rips filtration");
    m.def(
        "compute_h1",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts,
           std::optional<double> max_radius, std::size_t budget) {
            PointCloud c = cloud_from_array(pts);
            double r = max_radius.value_or(enclosing_radius(c));
            if (!(r > 0.0)) r = 1e-9;
            PersistenceDiagram d;
            {
                py::gil_scoped_release release;
                d = compute_h1(c, r, budget);
            }
            return diagram_to_array(d);
        },
        py::arg("points"), py::arg("max_radius") = std::nullopt,
        py::arg("budget") = kDefaultTriangleBudget,
        "1st persistence diagram of a point cloud under the Rips filtration");
    m.def(
        "enclosing_radius",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts) {
            return enclosing_radius(cloud_from_array(pts));
        },
        py::arg("points"));
    m.def(
        "subsample_maxmin",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts, std::size_t m,
           std::uint64_t seed) {
            PointCloud c = subsample_maxmin(cloud_from_array(pts), m, seed);
            py::array_t<double> out(
                {static_cast<py::ssize_t>(c.size()), static_cast<py::ssize_t>(c.dim)});
            std::copy(c.coords.begin(), c.coords.end(), out.mutable_data());
            return out;
        },
        py::arg("points"), py::arg("m"), py::arg("seed") = 0,
        "Farthest-point subsample of m points");

    // kernels
    m.def(
        "pwgk_inner",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b, double c,
           double p, double nu) {
            return pwgk_inner(diagram_from_array(a, 0), diagram_from_array(b, 0),
                              pwgk_params(c, p, nu, std::nullopt));
        },
        py::arg("di"), py::arg("dj"), py::arg("C") = 1.0, py::arg("p") = 5.0, py::arg("nu") = 1.0);
    m.def(
        "pwgk_gaussian",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b, double c,
           double p, double nu, double tau) {
            return pwgk_gaussian(diagram_from_array(a, 0), diagram_from_array(b, 0),
                                 pwgk_params(c, p, nu, tau));
        },
        py::arg("di"), py::arg("dj"), py::arg("C") = 1.0, py::arg("p") = 5.0, py::arg("nu") = 1.0,
        py::arg("tau") = 1.0);
    m.def(
        "pfk_fim",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b, double nu) {
            return pfk_fim(diagram_from_array(a, 0), diagram_from_array(b, 0), nu);
        },
        py::arg("di"), py::arg("dj"), py::arg("nu") = 1.0);
    m.def(
        "pfk",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b, double nu,
           double t) {
            PfkParams params;
            params.nu = nu;
            params.t = t;
            return pfk(diagram_from_array(a, 0), diagram_from_array(b, 0), params);
        },
        py::arg("di"), py::arg("dj"), py::arg("nu") = 1.0, py::arg("t") = 1.0);
    m.def(
        "gram",
        [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& dgms,
           const std::string& kernel, double c, double p, double nu, double tau, double t,
           bool use_rff, std::size_t rff_features, std::uint64_t rff_seed, int threads) {
            std::vector<PersistenceDiagram> ds;
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < dgms.size(); ++i) {
                ds.push_back(diagram_from_array(dgms[i], 0));
                ids.push_back(std::to_string(i));
            }
            KernelSpec spec;
            spec.kind = kernel_from_name(kernel);
            spec.pwgk = pwgk_params(c, p, nu, tau);
            spec.pfk.nu = nu;
            spec.pfk.t = t;
            spec.use_rff = use_rff;
            spec.rff_features = rff_features;
            spec.rff_seed = rff_seed;
            Eigen::MatrixXd values;
            {
                py::gil_scoped_release release;
                values = gram(ids, ds, spec, threads).values;
            }
            return values;
        },
        py::arg("diagrams"), py::arg("kernel") = "pwgk_linear", py::arg("C") = 1.0,
        py::arg("p") = 5.0, py::arg("nu") = 1.0, py::arg("tau") = 1.0, py::arg("t") = 1.0,
        py::arg("use_rff") = false, py::arg("rff_features") = 2048, py::arg("rff_seed") = 0,
        py::arg("threads") = 0, "Gram matrix of a diagram list under the chosen kernel");
    m.def(
        "heuristics",
        [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& dgms,
           bool with_pfk_grid, int threads) {
            std::vector<PersistenceDiagram> ds;
            for (const auto& a : dgms) ds.push_back(diagram_from_array(a, 0));
            Heuristics h = heuristics(ds, with_pfk_grid, threads);
            py::dict out;
            out["C"] = h.pwgk.C;
            out["p"] = h.pwgk.p;
            out["nu"] = h.pwgk.nu;
            out["tau"] = h.pwgk.tau.value_or(0.0);
            if (with_pfk_grid) {
                out["pfk_nu_grid"] = h.pfk.nu_grid;
                out["pfk_inv_t_grid"] = h.pfk.inv_t_grid;
            }
            return out;
        },
        py::arg("diagrams"), py::arg("with_pfk_grid") = false, py::arg("threads") = 0,
        "Median-based kernel hyperparameters");

    // gp
    m.def("expected_improvement", &expected_improvement, py::arg("mu"), py::arg("sd"),
          py::arg("y_best"), "Minimization-convention expected improvement");
    m.def("mle_noise", &mle_noise, py::arg("k_obs"), py::arg("y"),
          "Maximum-likelihood observation noise variance");
    m.def(
        "gp_predict",
        [](const Eigen::MatrixXd& k_obs, const Eigen::VectorXd& y, double noise_var,
           const Eigen::MatrixXd& k_cross, const Eigen::VectorXd& k_self) {
            GPState state = fit(k_obs, y, noise_var);
            if (k_cross.rows() != k_obs.rows())
                throw input_error("k_cross must be (n_obs, n_test)");
            Eigen::VectorXd mu(k_cross.cols()), var(k_cross.cols());
            for (Eigen::Index j = 0; j < k_cross.cols(); ++j) {
                auto [m_, v_] = predict(state, k_cross.col(j), k_self(j));
                mu(j) = m_;
                var(j) = v_;
            }
            return py::make_tuple(mu, var);
        },
        py::arg("k_obs"), py::arg("y"), py::arg("noise_var"), py::arg("k_cross"), py::arg("k_self"),
        "Posterior mean and variance at test columns");

    // mkl
    m.def("center_gram", &center_gram, py::arg("k"));
    m.def("alignment", &alignment, py::arg("k1"), py::arg("k2"));
    m.def(
        "combine",
        [](const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& alpha) {
            return combine(ks, alpha);
        },
        py::arg("ks"), py::arg("alpha"));
    m.def(
        "solve_alignment_qp",
        [](const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y) {
            return solve_alignment_qp(ks, y).alpha;
        },
        py::arg("ks"), py::arg("y"));
    m.def(
        "mle_weights",
        [](const std::vector<Eigen::MatrixXd>& ks, const Eigen::VectorXd& y, double noise_var) {
            auto res = mle_weights(ks, y, noise_var);
            return py::make_tuple(res.alpha, res.loglik);
        },
        py::arg("ks"), py::arg("y"), py::arg("noise_var") = 0.0);

    // datasets
    m.def(
        "gen_orbit",
        [](int m_clouds, int n_points, double r_min, double r_max, std::uint64_t seed,
           bool shared_start, int threads) {
            Pool pool;
            {
                py::gil_scoped_release release;
                pool = gen_orbit(m_clouds, n_points, r_min, r_max, seed, shared_start, threads);
            }
            py::list clouds;
            for (const auto& c : pool.clouds) {
                py::array_t<double> pts(
                    {static_cast<py::ssize_t>(c.size()), static_cast<py::ssize_t>(c.dim)});
                std::copy(c.coords.begin(), c.coords.end(), pts.mutable_data());
                clouds.append(py::make_tuple(c.id, pts, c.label.value_or(0.0)));
            }
            return clouds;
        },
        py::arg("m"), py::arg("n"), py::arg("r_min") = 2.0, py::arg("r_max") = 4.3,
        py::arg("seed") = 0, py::arg("shared_start") = false, py::arg("threads") = 0,
        "List of (id, points, r) orbit clouds");

    // bo
    m.def(
        "run_bo",
        [](const std::vector<Eigen::MatrixXd>& grams, const Eigen::VectorXd& labels,
           const std::string& mkl, int n_init, int n_steps, double noise_sd, std::uint64_t seed) {
            PoolKernels pk;
            pk.labels = labels;
            for (Eigen::Index i = 0; i < labels.size(); ++i) pk.ids.push_back(std::to_string(i));
            for (std::size_t c = 0; c < grams.size(); ++c)
                pk.channels.push_back({static_cast<int>(c), grams[c], std::nullopt});
            RunConfig cfg;
            cfg.kernel = KernelKind::PwgkLinear;  // fixed precomputed Grams
            cfg.degrees = grams.size() > 1 ? DegreeChoice::Both : DegreeChoice::H1;
            cfg.mkl = grams.size() > 1 ? (mkl == "align" ? MklMode::Align : MklMode::Mle)
                                       : MklMode::None;
            cfg.n_init = n_init;
            cfg.n_steps = n_steps;
            cfg.noise_sd = noise_sd;
            cfg.seed = seed;
            BOTrace trace;
            {
                py::gil_scoped_release release;
                trace = run_bo(pk, cfg);
            }
            py::dict out;
            py::list steps;
            for (const auto& s : trace.steps)
                steps.append(py::make_tuple(s.step, s.chosen_id, s.observed_y, s.best_so_far));
            out["steps"] = steps;
            out["aucc"] = trace.aucc;
            out["target"] = trace.target;
            out["seed"] = trace.seed;
            return out;
        },
        py::arg("grams"), py::arg("labels"), py::arg("mkl") = "mle", py::arg("n_init") = 10,
        py::arg("n_steps") = 100, py::arg("noise_sd") = 0.0, py::arg("seed") = 0,
        "EI pool optimization over precomputed Gram matrices");
    m.def(
        "run_random",
        [](const Eigen::VectorXd& labels, int n_init, int n_steps, double noise_sd,
           std::uint64_t seed) {
            PoolKernels pk;
            pk.labels = labels;
            for (Eigen::Index i = 0; i < labels.size(); ++i) pk.ids.push_back(std::to_string(i));
            RunConfig cfg;
            cfg.n_init = n_init;
            cfg.n_steps = n_steps;
            cfg.noise_sd = noise_sd;
            cfg.seed = seed;
            BOTrace trace = run_random(pk, cfg);
            py::dict out;
            py::list steps;
            for (const auto& s : trace.steps)
                steps.append(py::make_tuple(s.step, s.chosen_id, s.observed_y, s.best_so_far));
            out["steps"] = steps;
            out["aucc"] = trace.aucc;
            out["target"] = trace.target;
            return out;
        },
        py::arg("labels"), py::arg("n_init") = 10, py::arg("n_steps") = 100,
        py::arg("noise_sd") = 0.0, py::arg("seed") = 0, "Random-search baseline");
}
