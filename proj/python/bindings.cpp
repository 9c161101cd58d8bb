#include "sisk/error.hpp"
#include "sisk/graph.hpp"
#include "sisk/pair_dynamics.hpp"
#include "sisk/simulate.hpp"
#include "sisk/solver.hpp"
#include "sisk/temporal.hpp"
#include "sisk/threshold.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace sisk;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> to_array(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    return py::array_t<double>({rows, cols}, v.data());
}

SolverConfig solver_config(double tol, std::size_t max_iter, double damping, unsigned threads) {
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.damping = damping;
    cfg.threads = threads;
    return cfg;
}

py::dict threshold_dict(const ThresholdResult& r) {
    py::dict d;
    d["beta_c"] = r.beta_c;
    d["method"] = to_string(r.method);
    d["iterations"] = r.iterations;
    d["bracket_width"] = r.bracket_width;
    d["converged"] = r.converged;
    return d;
}

py::dict qs_dict(const QsEstimate& q) {
    py::dict d;
    d["mean"] = q.mean;
    d["stderr"] = q.stderr;
    d["subcritical"] = q.subcritical;
    d["doomed_fraction"] = q.doomed_fraction;
    d["susceptibility"] = q.susceptibility;
    d["absorptions"] = q.absorptions;
    d["replicas"] = q.replicas;
    return d;
}

SimConfig sim_config(double beta, int K, std::optional<double> gamma, double t_max, double burn_in,
                     std::uint64_t seed, const Graph& g) {
    SimConfig c;
    c.beta = beta;
    c.K = K;
    c.gamma = gamma ? *gamma : auto_gamma(beta, mean_excess_degree(g), K);
    c.t_max = t_max;
    c.burn_in = burn_in;
    c.seed = seed;
    return c;
}

} // namespace

PYBIND11_MODULE(_sisk, m) {
    m.doc() = "SIS^K pair approximation, thresholds and Gillespie simulation on networks";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<Graph>(m, "Graph")
        .def_static(
            "from_edges",
            [](std::size_t n, const std::vector<Edge>& edges) { return Graph::from_edges(n, edges); },
            py::arg("n"), py::arg("edges"))
        .def_property_readonly("num_nodes", &Graph::num_nodes)
        .def_property_readonly("num_edges", &Graph::num_edges)
        .def("degree", &Graph::degree)
        .def("neighbors",
             [](const Graph& g, NodeId v) {
                 if (v >= g.num_nodes()) throw py::index_error("node out of range");
                 auto nb = g.neighbors(v);
                 return std::vector<NodeId>(nb.begin(), nb.end());
             })
        .def("edges", &Graph::edges)
        .def("has_edge", &Graph::has_edge)
        .def("content_hash", &Graph::content_hash)
        .def("__repr__", [](const Graph& g) {
            return "<sisk.Graph n=" + std::to_string(g.num_nodes()) + " m=" + std::to_string(g.num_edges()) + ">";
        });

    m.def("load_edge_list", [](const std::filesystem::path& p) { return load_edge_list(p).graph; }, py::arg("path"));
    m.def("save_edge_list", &save_edge_list, py::arg("graph"), py::arg("path"));
    m.def("generate_random_regular", &generate_random_regular, py::arg("n"), py::arg("degree"), py::arg("seed") = 1);
    m.def("generate_gnp", &generate_gnp, py::arg("n"), py::arg("p"), py::arg("seed") = 1);
    m.def("spectral_radius", &spectral_radius, py::arg("graph"), py::arg("tol") = 1e-12);
    m.def("mean_excess_degree", &mean_excess_degree, py::arg("graph"));

    m.def(
        "pair_generator",
        [](int K, double beta, double gamma, const std::vector<double>& a, const std::vector<double>& b) {
            return build_pair_generator(K, beta, gamma, a, b).rates;
        },
        py::arg("K"), py::arg("beta"), py::arg("gamma"), py::arg("a"), py::arg("b"),
        "Joint-state generator of one edge; state s1*(K+1)+s2, sub-state K is I.");
    m.def(
        "pair_stationary",
        [](int K, double beta, double gamma, const std::vector<double>& a, const std::vector<double>& b) {
            Eigen::VectorXd p = stationary_distribution(build_pair_generator(K, beta, gamma, a, b)).p;
            return p;
        },
        py::arg("K"), py::arg("beta"), py::arg("gamma"), py::arg("a"), py::arg("b"));
    m.def("psi", &psi, py::arg("beta"), py::arg("x"), py::arg("y"));

    m.def("auto_gamma", &auto_gamma, py::arg("beta"), py::arg("q"), py::arg("K"));
    m.def(
        "solve_regular_scalar",
        [](double q, double beta, int K, std::optional<double> gamma, double tol, std::size_t max_iter,
           double damping) {
            const auto r = solve_regular_scalar(q, beta, K, gamma, solver_config(tol, max_iter, damping, 1));
            py::dict d;
            d["phi"] = to_array(r.phi);
            d["node_distribution"] = to_array(r.node_distribution);
            d["rho"] = r.rho;
            d["gamma"] = r.gamma;
            d["iterations"] = r.iterations;
            d["residual"] = r.residual;
            d["converged"] = r.converged;
            return d;
        },
        py::arg("q"), py::arg("beta"), py::arg("K") = 1, py::arg("gamma") = py::none(), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 100000, py::arg("damping") = 0.5);
    m.def(
        "solve_pair_k",
        [](const Graph& g, double beta, int K, std::optional<double> gamma, double tol, std::size_t max_iter,
           double damping, unsigned threads) {
            PairSolution s;
            {
                py::gil_scoped_release release;
                s = solve_pair_k(g, beta, K, gamma, solver_config(tol, max_iter, damping, threads));
            }
            py::dict d;
            d["messages"] = to_array(s.messages.values, s.messages.num_directed_edges(), static_cast<std::size_t>(K));
            d["node_probs"] = to_array(s.marginals.probs, g.num_nodes(), static_cast<std::size_t>(K + 1));
            d["rho"] = to_array(s.marginals.rho);
            d["rho_mean"] = s.marginals.mean_rho();
            d["gamma"] = s.messages.gamma;
            d["iterations"] = s.iterations;
            d["residual"] = s.residual;
            d["converged"] = s.converged;
            return d;
        },
        py::arg("graph"), py::arg("beta"), py::arg("K") = 1, py::arg("gamma") = py::none(), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 100000, py::arg("damping") = 0.5, py::arg("threads") = 1,
        "Messages are indexed by directed edge (CSR slot order of Graph.neighbors).");
    m.def(
        "solve_mean_field",
        [](const Graph& g, double beta) {
            const auto s = solve_mean_field(g, beta);
            py::dict d;
            d["rho"] = to_array(s.rho);
            d["rho_mean"] = s.mean_rho();
            d["converged"] = s.converged;
            return d;
        },
        py::arg("graph"), py::arg("beta"));

    m.def("threshold_mf", [](const Graph& g) { return threshold_dict(threshold_mf(g)); }, py::arg("graph"));
    m.def("threshold_pair", [](const Graph& g, double tol) { return threshold_dict(threshold_pair(g, tol)); },
          py::arg("graph"), py::arg("tol") = 1e-12);
    m.def("threshold_pair_regular_k2", [](double q) { return threshold_dict(threshold_pair_regular_k2(q)); },
          py::arg("q"));
    m.def(
        "threshold_bisect",
        [](std::variant<const Graph*, double> target, int K, std::optional<double> gamma, double resolution,
           double tol) {
            SolverConfig cfg;
            cfg.tol = tol;
            BisectOptions opts;
            opts.resolution = resolution;
            const BisectTarget t = std::holds_alternative<double>(target)
                                       ? BisectTarget{RegularEnsemble{std::get<double>(target)}}
                                       : BisectTarget{std::cref(*std::get<const Graph*>(target))};
            ThresholdResult r;
            {
                py::gil_scoped_release release;
                r = threshold_bisect(t, K, gamma, cfg, opts);
            }
            return threshold_dict(r);
        },
        py::arg("target"), py::arg("K"), py::arg("gamma") = py::none(), py::arg("resolution") = 1e-4,
        py::arg("tol") = 1e-10, "target is a Graph or a float q for the infinite (q+1)-regular ensemble.");

    m.def(
        "survival_function",
        [](const std::vector<double>& lambda, double gamma, const std::vector<double>& t) {
            return to_array(survival_function({lambda, gamma}, t));
        },
        py::arg("lam"), py::arg("gamma"), py::arg("t"));
    m.def(
        "mean_inter_infection_time",
        [](const std::vector<double>& lambda, double gamma) { return mean_inter_infection_time({lambda, gamma}); },
        py::arg("lam"), py::arg("gamma"));

    m.def(
        "quasistationary",
        [](const Graph& g, double beta, int K, std::optional<double> gamma, double t_max, double burn_in,
           std::uint64_t seed, std::size_t replicas, unsigned threads) {
            const SimConfig c = sim_config(beta, K, gamma, t_max, burn_in, seed, g);
            QsEstimate q;
            {
                py::gil_scoped_release release;
                q = quasistationary_replicas(g, c, replicas, threads);
            }
            return qs_dict(q);
        },
        py::arg("graph"), py::arg("beta"), py::arg("K") = 1, py::arg("gamma") = py::none(),
        py::arg("t_max") = 1e4, py::arg("burn_in") = -1.0, py::arg("seed") = 1, py::arg("replicas") = 1,
        py::arg("threads") = 1);
    m.def(
        "simulate",
        [](const Graph& g, double beta, int K, std::optional<double> gamma, double t_max, double burn_in,
           std::uint64_t seed) {
            SimConfig c = sim_config(beta, K, gamma, t_max, burn_in, seed, g);
            Trajectory tr;
            {
                py::gil_scoped_release release;
                tr = gillespie_sisk_run(g, c);
            }
            std::vector<double> frac(tr.infected.size());
            for (std::size_t i = 0; i < frac.size(); ++i) frac[i] = tr.infected[i] / static_cast<double>(tr.n);
            py::dict d;
            d["t"] = to_array(tr.t);
            d["rho"] = to_array(frac);
            d["qs"] = qs_dict(qs_estimate(tr));
            d["substate_occupancy"] = to_array(tr.substate_occupancy);
            return d;
        },
        py::arg("graph"), py::arg("beta"), py::arg("K") = 1, py::arg("gamma") = py::none(), py::arg("t_max") = 1e4,
        py::arg("burn_in") = -1.0, py::arg("seed") = 1);
    m.def(
        "inter_infection_times",
        [](const Graph& g, double beta, int K, std::optional<double> gamma, double t_max, double burn_in,
           std::uint64_t seed, std::size_t sample_cap) {
            const SimConfig c = sim_config(beta, K, gamma, t_max, burn_in, seed, g);
            InterInfectionSample s;
            {
                py::gil_scoped_release release;
                s = inter_infection_times(g, c, sample_cap);
            }
            return py::make_tuple(to_array(s.durations), to_array(s.censored));
        },
        py::arg("graph"), py::arg("beta"), py::arg("K") = 1, py::arg("gamma") = py::none(), py::arg("t_max") = 2100.0,
        py::arg("burn_in") = 100.0, py::arg("seed") = 1, py::arg("sample_cap") = 100000000);
}
