#pragma once

#include "sisk/graph.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sisk {

/// Per directed edge (j -> k), K rates phi_jk^x: the rate at which k infects
/// j given that j is in S^(x). Stored edge-major in DirectedEdgeIndex order.
struct EdgeMessages {
    int K = 1;
    double beta = 0.0;
    double gamma = 0.0;
    std::vector<double> values;

    std::size_t num_directed_edges() const { return values.size() / static_cast<std::size_t>(K); }
    std::span<const double> at(std::size_t e) const { return {values.data() + e * K, static_cast<std::size_t>(K)}; }
    std::span<double> at(std::size_t e) { return {values.data() + e * K, static_cast<std::size_t>(K)}; }
};

struct SolverConfig {
    double tol = 1e-10;           // L-infinity bound on the per-sweep message change
    std::size_t max_iter = 100000;
    double damping = 0.5;         // new = damping * old + (1 - damping) * emitted
    double init_fraction = 0.5;   // initial phi = init_fraction * beta ...
    std::optional<double> init_phi; // ... unless an absolute rate is given
    unsigned threads = 1;         // worker threads for a sweep; results do not depend on it
};

/// Per-node distribution over {S^(1), ..., S^(K), I} and rho_i = P(I_i).
struct NodeMarginals {
    int K = 1;
    std::vector<double> probs; // n * (K+1), node-major
    std::vector<double> rho;

    std::span<const double> node(NodeId v) const {
        return {probs.data() + static_cast<std::size_t>(v) * (K + 1), static_cast<std::size_t>(K + 1)};
    }
    double mean_rho() const;
};

struct PairSolution {
    EdgeMessages messages;
    NodeMarginals marginals;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

struct MeanFieldSolution {
    std::vector<double> rho;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = false;

    double mean_rho() const;
};

struct RegularSolution {
    std::vector<double> phi;           // K homogeneous messages
    std::vector<double> node_distribution;
    double rho = 0.0;
    double gamma = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// gamma = beta * q * sqrt(K - 1).
double auto_gamma(double beta, double q, int K);

/// B_ij(phi^x) for every directed edge (i -> j): sum of phi_jk^x over the
/// neighbours k != i of j, i.e. the outside infection rate on j. Output is
/// edge-major with K entries per directed edge.
std::vector<double> neighbor_sum(const DirectedEdgeIndex& idx, const EdgeMessages& msgs);

/// Jacobi fixed-point iteration of the SIS^K pair approximation over all
/// edges. gamma = nullopt selects auto_gamma with q from the graph.
PairSolution solve_pair_k(const Graph& g, double beta, int K, std::optional<double> gamma,
                          const SolverConfig& cfg = {});

/// Node marginals from converged messages via the one-node chain.
NodeMarginals node_marginals(const Graph& g, const EdgeMessages& msgs);

/// Individual (mean-field) approximation rho = beta A rho / (1 + beta A rho),
/// iterated from rho = 1.
MeanFieldSolution solve_mean_field(const Graph& g, double beta, const SolverConfig& cfg = {});

/// Infinite (q+1)-regular ensemble: one representative edge with outside
/// rates q * phi on both ends.
RegularSolution solve_regular_scalar(double q, double beta, int K, std::optional<double> gamma,
                                     const SolverConfig& cfg = {});

} // namespace sisk
