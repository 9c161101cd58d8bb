#include "sisk/solver.hpp"

#include "sisk/error.hpp"
#include "sisk/pair_dynamics.hpp"
#include "sisk/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace sisk {

namespace {

void check_config(const SolverConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw InputError("solver tolerance must be positive");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) throw InputError("damping must lie in [0, 1)");
    if (cfg.max_iter == 0) throw InputError("max_iter must be positive");
}

double initial_phi(const SolverConfig& cfg, double beta) {
    const double phi = cfg.init_phi ? *cfg.init_phi : cfg.init_fraction * beta;
    if (!(phi >= 0.0 && phi <= beta)) throw InputError("initial message must lie in [0, beta]");
    return phi;
}

// Runs body(begin, end, worker) over [0, count) split into contiguous chunks.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        body(std::size_t{0}, count, 0u);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = std::min(count, t * chunk);
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&, begin, end, t] {
            try {
                body(begin, end, t);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace

double NodeMarginals::mean_rho() const {
    if (rho.empty()) return 0.0;
    return std::accumulate(rho.begin(), rho.end(), 0.0) / static_cast<double>(rho.size());
}

double MeanFieldSolution::mean_rho() const {
    if (rho.empty()) return 0.0;
    return std::accumulate(rho.begin(), rho.end(), 0.0) / static_cast<double>(rho.size());
}

double auto_gamma(double beta, double q, int K) {
    return beta * q * std::sqrt(static_cast<double>(K - 1));
}

std::vector<double> neighbor_sum(const DirectedEdgeIndex& idx, const EdgeMessages& msgs) {
    const Graph& g = idx.graph();
    const int K = msgs.K;
    if (msgs.values.size() != idx.size() * static_cast<std::size_t>(K))
        throw InputError("message array does not match the directed edge index");
    std::vector<double> out(msgs.values.size(), 0.0);
    for (std::size_t e = 0; e < idx.size(); ++e) {
        const NodeId i = idx.source(e);
        const NodeId j = idx.target(e);
        const std::size_t begin = g.offset(j);
        const std::size_t end = begin + g.degree(j);
        for (std::size_t f = begin; f < end; ++f) {
            if (g.target(f) == i) continue;
            const auto phi = msgs.at(f);
            for (int x = 0; x < K; ++x) out[e * K + x] += phi[x];
        }
    }
    return out;
}

NodeMarginals node_marginals(const Graph& g, const EdgeMessages& msgs) {
    NodeMarginals marg;
    marg.K = msgs.K;
    const std::size_t n = g.num_nodes();
    marg.probs.resize(n * (msgs.K + 1));
    marg.rho.resize(n);
    for (NodeId v = 0; v < n; ++v) {
        const auto dist = one_node_stationary(one_node_rates(g, msgs, v));
        std::copy(dist.p.begin(), dist.p.end(), marg.probs.begin() + static_cast<std::ptrdiff_t>(v) * (msgs.K + 1));
        marg.rho[v] = dist.infectious();
    }
    return marg;
}

PairSolution solve_pair_k(const Graph& g, double beta, int K, std::optional<double> gamma,
                          const SolverConfig& cfg) {
    check_config(cfg);
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("beta must be positive");
    if (K < 1) throw InputError("K must be at least 1");
    if (g.num_nodes() == 0) throw InputError("graph has no nodes");
    const double decay = gamma ? *gamma : auto_gamma(beta, mean_excess_degree(g), K);
    if (!(decay >= 0.0)) throw InputError("gamma must be nonnegative");

    const DirectedEdgeIndex idx(g);
    const std::size_t n = g.num_nodes();
    const std::size_t kk = static_cast<std::size_t>(K);

    PairSolution sol;
    EdgeMessages& msgs = sol.messages;
    msgs.K = K;
    msgs.beta = beta;
    msgs.gamma = decay;
    msgs.values.assign(idx.size() * kk, initial_phi(cfg, beta));

    // One slot per undirected edge: the directed edge with source < target.
    std::vector<std::size_t> undirected;
    undirected.reserve(g.num_edges());
    for (std::size_t e = 0; e < idx.size(); ++e)
        if (idx.source(e) < idx.target(e)) undirected.push_back(e);

    std::vector<double> totals(n * kk);
    std::vector<double> emitted(msgs.values.size());
    const unsigned threads = std::max(1u, cfg.threads);
    std::vector<PairSolver> solvers(threads, PairSolver(K));

    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        std::fill(totals.begin(), totals.end(), 0.0);
        for (std::size_t e = 0; e < idx.size(); ++e) {
            const auto phi = msgs.at(e);
            double* t = totals.data() + idx.source(e) * kk;
            for (std::size_t x = 0; x < kk; ++x) t[x] += phi[x];
        }

        parallel_for(undirected.size(), threads, [&](std::size_t begin, std::size_t end, unsigned w) {
            std::vector<double> a(kk), b(kk);
            PairSolver& solver = solvers[w];
            for (std::size_t u = begin; u < end; ++u) {
                const std::size_t e = undirected[u];
                const std::size_t r = idx.reverse(e);
                const double* tu = totals.data() + idx.source(e) * kk;
                const double* tv = totals.data() + idx.target(e) * kk;
                const auto phi_e = msgs.at(e);
                const auto phi_r = msgs.at(r);
                for (std::size_t x = 0; x < kk; ++x) {
                    a[x] = std::max(0.0, tu[x] - phi_e[x]);
                    b[x] = std::max(0.0, tv[x] - phi_r[x]);
                }
                solver.solve(beta, decay, a, b, {emitted.data() + e * kk, kk},
                             {emitted.data() + r * kk, kk});
            }
        });

        double change = 0.0;
        for (std::size_t i = 0; i < msgs.values.size(); ++i) {
            const double updated = cfg.damping * msgs.values[i] + (1.0 - cfg.damping) * emitted[i];
            if (!std::isfinite(updated)) throw NumericalError("pair approximation produced a non-finite message");
            change = std::max(change, std::abs(updated - msgs.values[i]));
            msgs.values[i] = std::clamp(updated, 0.0, beta);
        }
        sol.iterations = it;
        sol.residual = change;
        if (change < cfg.tol) {
            sol.converged = true;
            break;
        }
    }
    sol.marginals = node_marginals(g, msgs);
    return sol;
}

MeanFieldSolution solve_mean_field(const Graph& g, double beta, const SolverConfig& cfg) {
    check_config(cfg);
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("beta must be positive");
    const std::size_t n = g.num_nodes();
    MeanFieldSolution sol;
    sol.rho.assign(n, 1.0);
    std::vector<double> next(n);
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        double change = 0.0;
        for (NodeId v = 0; v < n; ++v) {
            double field = 0.0;
            for (NodeId u : g.neighbors(v)) field += sol.rho[u];
            field *= beta;
            const double mapped = field / (1.0 + field);
            next[v] = cfg.damping * sol.rho[v] + (1.0 - cfg.damping) * mapped;
            change = std::max(change, std::abs(next[v] - sol.rho[v]));
        }
        sol.rho.swap(next);
        sol.iterations = it;
        sol.residual = change;
        if (change < cfg.tol) {
            sol.converged = true;
            break;
        }
    }
    return sol;
}

RegularSolution solve_regular_scalar(double q, double beta, int K, std::optional<double> gamma,
                                     const SolverConfig& cfg) {
    check_config(cfg);
    if (!(q >= 1.0) || !std::isfinite(q)) throw InputError("excess degree q must be at least 1");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("beta must be positive");
    if (K < 1) throw InputError("K must be at least 1");
    const double decay = gamma ? *gamma : auto_gamma(beta, q, K);
    if (!(decay >= 0.0)) throw InputError("gamma must be nonnegative");

    RegularSolution sol;
    sol.gamma = decay;
    sol.phi.assign(K, initial_phi(cfg, beta));
    PairSolver solver(K);
    std::vector<double> outside(K), first(K), second(K);
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        for (int x = 0; x < K; ++x) outside[x] = q * sol.phi[x];
        solver.solve(beta, decay, outside, outside, first, second);
        double change = 0.0;
        for (int x = 0; x < K; ++x) {
            const double updated = cfg.damping * sol.phi[x] + (1.0 - cfg.damping) * first[x];
            if (!std::isfinite(updated)) throw NumericalError("regular solver produced a non-finite message");
            change = std::max(change, std::abs(updated - sol.phi[x]));
            sol.phi[x] = std::clamp(updated, 0.0, beta);
        }
        sol.iterations = it;
        sol.residual = change;
        if (change < cfg.tol) {
            sol.converged = true;
            break;
        }
    }
    OneNodeRates rates;
    rates.gamma = decay;
    rates.lambda.resize(K);
    for (int x = 0; x < K; ++x) rates.lambda[x] = (q + 1.0) * sol.phi[x];
    const auto dist = one_node_stationary(rates);
    sol.node_distribution = dist.p;
    sol.rho = dist.infectious();
    return sol;
}

} // namespace sisk
