// Acceptance gate: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed numbers. Exit status is nonzero
// when any selected criterion fails.

#include "oracles.hpp"

#include "sisk/pair_dynamics.hpp"
#include "sisk/random.hpp"
#include "sisk/simulate.hpp"
#include "sisk/solver.hpp"
#include "sisk/temporal.hpp"
#include "sisk/threshold.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace sisk;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        detail << (ok ? "" : "[x] ") << what << "; ";
    }
};

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

// Criterion 1: regular pair approximation closed form.
void criterion1(Outcome& o) {
    const auto r = solve_regular_scalar(2, 0.6, 1, std::nullopt);
    o.require(std::abs(r.phi[0] - 0.1) < 1e-8, "phi=" + fmt(r.phi[0], 12) + " vs 0.1");
    o.require(std::abs(r.rho - 0.3 / 1.3) < 1e-8, "rho=" + fmt(r.rho, 12) + " vs 0.230769...");
}

// Criterion 2: threshold ladder at q = 2.
void criterion2(Outcome& o) {
    const Graph g = generate_random_regular(2000, 3, 1);
    const double mf = threshold_mf(g).beta_c;
    const double pair = threshold_pair(g).beta_c;
    const double k2 = threshold_pair_regular_k2(2).beta_c;
    const double bis = threshold_bisect(RegularEnsemble{2}, 2, std::nullopt).beta_c;
    o.require(std::abs(mf - 1.0 / 3.0) < 1e-8, "mf=" + fmt(mf, 12));
    o.require(std::abs(pair - 0.5) < 1e-8, "pair=" + fmt(pair, 12));
    o.require(std::abs(k2 - 0.5207) < 1e-4, "k2=" + fmt(k2, 8));
    o.require(std::abs(bis - k2) < 1e-3, "bisect(K=2)=" + fmt(bis, 8));
}

// Criterion 3: K = 8 threshold against the simulation anchor.
void criterion3(Outcome& o) {
    const double k8 = threshold_bisect(RegularEnsemble{2}, 8, std::nullopt).beta_c;
    o.require(k8 >= 0.53 && k8 <= 0.56, "bisect(K=8)=" + fmt(k8, 6) + " in [0.53,0.56]");
    const Graph g = generate_random_regular(20000, 3, 1);
    SimConfig c;
    c.t_max = 4000;
    c.seed = 5;
    std::vector<double> betas;
    for (int i = 0; i <= 15; ++i) betas.push_back(0.45 + 0.01 * i);
    const auto scan = simulated_threshold_scan(g, c, betas);
    const bool found = scan.beta_c.has_value();
    const double b = scan.beta_c.value_or(-1.0);
    o.require(found && b >= 0.52 && b <= 0.57, "simulated beta_c=" + fmt(b, 4) + " in [0.52,0.57]");
}

// Criterion 4: QS fraction against K = 8 and K = 1 predictions.
void criterion4(Outcome& o) {
    const Graph g = generate_random_regular(10000, 4, 3);
    SimConfig c;
    c.beta = 0.4;
    c.t_max = 2000;
    c.seed = 11;
    const auto sim = quasistationary_replicas(g, c, 4);
    const double k8 = solve_pair_k(g, 0.4, 8, std::nullopt).marginals.mean_rho();
    const double k1 = solve_pair_k(g, 0.4, 1, std::nullopt).marginals.mean_rho();
    o.require(std::abs(sim.mean - k8) < 0.01,
              "sim=" + fmt(sim.mean, 5) + "+-" + fmt(sim.stderr, 2) + " K8=" + fmt(k8, 5));
    o.require(std::abs(k1 - sim.mean) > std::abs(k8 - sim.mean), "K1=" + fmt(k1, 5) + " further than K8");
}

// Criterion 5: survival function, theory against simulation.
void criterion5(Outcome& o) {
    const Graph g = generate_random_regular(10000, 4, 3);
    const auto grid = linspace(0.0, 20.0, 401);

    const auto k1 = solve_pair_k(g, 0.4, 1, std::nullopt);
    const auto r1 = one_node_rates(g, k1.messages, 0);
    const auto s1 = population_survival(g, k1.messages, k1.marginals, grid);
    double dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) dev = std::max(dev, std::abs(s1[i] - std::exp(-r1.lambda[0] * grid[i])));
    o.require(dev < 1e-10, "K1 deviation from exponential=" + fmt(dev, 3));

    const auto k8 = solve_pair_k(g, 0.4, 8, std::nullopt);
    const auto s8 = population_survival(g, k8.messages, k8.marginals, grid);
    SimConfig c;
    c.beta = 0.4;
    c.t_max = 2100;
    c.burn_in = 100;
    c.seed = 1;
    const auto sample = inter_infection_times(g, c, 100000000);
    const auto emp = empirical_survival(sample, grid);
    double gap = 0.0, at = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(s8[i] - emp[i]) > gap) {
            gap = std::abs(s8[i] - emp[i]);
            at = grid[i];
        }
    }
    o.require(sample.durations.size() >= 100000, "samples=" + std::to_string(sample.durations.size()));
    o.require(gap < 0.02, "K8 max gap=" + fmt(gap, 4) + " at t=" + fmt(at, 3));
}

// Criterion 6: simulator occupancies on one edge equal the exact pair law.
void criterion6(Outcome& o) {
    std::vector<Edge> e{{0, 1}};
    const Graph g = Graph::from_edges(2, e);
    struct Case { int K; double beta, gamma; };
    for (const Case cs : {Case{1, 1.5, 0.0}, Case{4, 1.5, 2.0}}) {
        std::vector<double> h;
        for (int x = 0; x < cs.K; ++x) h.push_back(0.1 * (x + 1));
        SimConfig c;
        c.beta = cs.beta;
        c.K = cs.K;
        c.gamma = cs.gamma;
        c.external_rates = h;
        c.t_max = 2e5;
        c.burn_in = 1e3;
        c.batches = 100;
        c.seed = 1;
        c.tracked_pair = Edge{0, 1};
        const auto traj = gillespie_sisk_run(g, c);
        const auto P = stationary_distribution(build_pair_generator(cs.K, cs.beta, cs.gamma, h, h));
        double zmax = 0.0;
        for (Eigen::Index i = 0; i < P.p.size(); ++i)
            zmax = std::max(zmax, std::abs(traj.pair_occupancy[i] - P.p[i]) / traj.pair_occupancy_stderr[i]);
        o.require(zmax < 3.0, "K=" + std::to_string(cs.K) + " max |z|=" + fmt(zmax, 3));
    }
}

// Criterion 7: lumped SIS^K against SIS.
void criterion7(Outcome& o) {
    const Graph g = generate_random_regular(10000, 3, 5);
    SimConfig c;
    c.beta = 0.7;
    c.t_max = 2000;
    c.seed = 3;
    const auto sis = quasistationary_fraction(g, c);
    c.K = 4;
    c.gamma = 2.0;
    c.seed = 4;
    const auto aug = quasistationary_fraction(g, c);
    const double z = std::abs(sis.mean - aug.mean) / std::hypot(sis.stderr, aug.stderr);
    o.require(z < 2.0, "SIS=" + fmt(sis.mean, 5) + " SIS^4=" + fmt(aug.mean, 5) + " |z|=" + fmt(z, 3));
}

// Criterion 8: the pair threshold makes the linearized edge operator critical.
void criterion8(Outcome& o) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Graph g = generate_gnp(200, 4.0 / 199.0, seed);
        const double beta = threshold_pair(g).beta_c;
        const double lead = oracle::leading_eigenvalue(linearized_edge_operator(g, beta));
        worst = std::max(worst, std::abs(lead - 1.0));
    }
    o.require(worst < 1e-6, "max |lambda-1|=" + fmt(worst, 3));
}

// Criterion 9: randomized oracle equivalence.
void criterion9(Outcome& o) {
    Rng rng = make_rng(2024);
    double tv = 0.0, surv = 0.0, msg = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int K = 1 + static_cast<int>(uniform_index(rng, 4));
        const double beta = 0.1 + 2.0 * uniform01(rng);
        const double gamma = 2.0 * uniform01(rng);
        std::vector<double> a(K), b(K);
        for (int x = 0; x < K; ++x) {
            a[x] = uniform01(rng);
            b[x] = uniform01(rng);
        }
        const auto Q = build_pair_generator(K, beta, gamma, a, b);
        const auto P = stationary_distribution(Q);
        const auto n = Q.rates.rows();
        const Eigen::VectorXd ode =
            oracle::rk4_master(Q.rates, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), 1e3, 5e-3);
        tv = std::max(tv, 0.5 * (P.p - ode).cwiseAbs().sum());

        const int Ks = 1 + static_cast<int>(uniform_index(rng, 8));
        OneNodeRates r;
        r.gamma = 10.0 * uniform01(rng);
        for (int x = 0; x < Ks; ++x) r.lambda.push_back(10.0 * uniform01(rng));
        const std::vector<double> t{3.0 * uniform01(rng)};
        surv = std::max(surv, std::abs(survival_function(r, t)[0] - oracle::survival_by_ode(r.lambda, r.gamma, t[0], 2e-4)));

        const Graph g = generate_gnp(40, 0.1, 300 + static_cast<std::uint64_t>(trial));
        if (g.num_edges() == 0) continue;
        const double bg = 0.2 + 1.5 * uniform01(rng);
        SolverConfig cfg;
        cfg.tol = 1e-13;
        const auto sol = solve_pair_k(g, bg, 1, std::nullopt, cfg);
        const auto ref = oracle::psi_iteration(g, bg, cfg.damping, bg * cfg.init_fraction, 1e-13, 100000);
        for (std::size_t e = 0; e < ref.size(); ++e) msg = std::max(msg, std::abs(ref[e] - sol.messages.values[e]));
    }
    o.require(tv < 1e-6, "stationary TV=" + fmt(tv, 3));
    o.require(surv < 1e-9, "survival diff=" + fmt(surv, 3));
    o.require(msg < 1e-8, "K=1 message diff=" + fmt(msg, 3));
}

// Criterion 10: successive rho(beta) curves get closer with K.
void criterion10(Outcome& o) {
    const auto betas = linspace(0.5, 1.0, 51);
    std::vector<std::vector<double>> curves;
    for (int K = 1; K <= 8; ++K) {
        std::vector<double> c;
        for (double b : betas) c.push_back(solve_regular_scalar(2, b, K, std::nullopt).rho);
        curves.push_back(std::move(c));
    }
    double prev = INFINITY;
    bool shrinking = true;
    std::string dists;
    for (int K = 2; K <= 8; ++K) {
        double d = 0.0;
        for (std::size_t i = 0; i < betas.size(); ++i) d = std::max(d, std::abs(curves[K - 1][i] - curves[K - 2][i]));
        shrinking = shrinking && d < prev;
        prev = d;
        dists += fmt(d, 3) + (K < 8 ? " " : "");
    }
    o.require(shrinking, "distances K=2..8: " + dists);
}

struct Criterion {
    int id;
    double budget_seconds;
    std::function<void(Outcome&)> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, 1, criterion1},      {2, 60, criterion2},    {3, 1800, criterion3}, {4, 900, criterion4},
        {5, 900, criterion5},    {6, 300, criterion6},   {7, 600, criterion7},  {8, 120, criterion8},
        {9, 120, criterion9},    {10, 300, criterion10},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(secs < c.budget_seconds, "runtime " + fmt(secs, 3) + " s < " + fmt(c.budget_seconds) + " s");
        std::printf("criterion %2d: %s  %s\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
