#pragma once

#include "sisk/graph.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace sisk {

struct EdgeMessages;
struct NodeMarginals;

/// Infection rate of one node in each susceptible sub-state, plus the decay rate.
struct OneNodeRates {
    std::vector<double> lambda; // lambda[x] applies in S^(x+1)
    double gamma = 0.0;

    int K() const { return static_cast<int>(lambda.size()); }
};

/// (K+1)x(K+1) rate matrix of the one-node chain with I absorbing.
/// States use the shared convention (0..K-1 = S^(1..K), K = I).
struct AbsorbingGenerator {
    Eigen::MatrixXd rates;
};

/// lambda_i^(x) = sum over neighbours j of phi_{ij}^x.
OneNodeRates one_node_rates(const Graph& g, const EdgeMessages& msgs, NodeId node);

AbsorbingGenerator absorbing_generator(const OneNodeRates& rates);

struct OneNodeDistribution {
    std::vector<double> p; // K+1 entries, I last
    bool degenerate = false;

    double infectious() const { return p.back(); }
};

/// Stationary law of the cyclic chain I -> S^(K) -> ... -> S^(1), with
/// infection out of every S^(x). All-zero infection rates give a point mass
/// on S^(1), flagged degenerate.
OneNodeDistribution one_node_stationary(const OneNodeRates& rates);

/// P(Delta_I > t) for a node that just recovered (starts in S^(K)), computed
/// by uniformization. Truncation error per grid point is below 1e-12.
std::vector<double> survival_function(const OneNodeRates& rates, std::span<const double> t_grid);

/// E[Delta_I] from the transient block of the absorbing chain (infinite when
/// absorption is not certain).
double mean_inter_infection_time(const OneNodeRates& rates);

/// Population survival curve: per-node curves averaged with weights equal to
/// each node's recovery flux (its stationary infectious probability).
std::vector<double> population_survival(const Graph& g, const EdgeMessages& msgs,
                                        const NodeMarginals& marginals,
                                        std::span<const double> t_grid);

} // namespace sisk
