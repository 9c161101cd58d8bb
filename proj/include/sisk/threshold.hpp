#pragma once

#include "sisk/graph.hpp"
#include "sisk/solver.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace sisk {

enum class ThresholdMethod { mean_field, pair, regular_k2, bisect };

std::string to_string(ThresholdMethod m);

struct ThresholdResult {
    double beta_c = 0.0;
    ThresholdMethod method = ThresholdMethod::mean_field;
    std::size_t iterations = 0;
    double bracket_width = 0.0; // bisection only
    double lambda = 0.0;        // leading eigenvalue at the solution (mf, pair)
    bool converged = true;
};

/// 1 / lambda(A).
ThresholdResult threshold_mf(const Graph& g);

/// Fixed point of beta -> 1 / lambda(A - beta L / 2 - I), iterated from the
/// mean-field value until |delta beta| < tol.
ThresholdResult threshold_pair(const Graph& g, double tol = 1e-12);

/// Closed-form K = 2 threshold on the infinite (q+1)-regular ensemble.
ThresholdResult threshold_pair_regular_k2(double q);

struct RegularEnsemble {
    double q = 2.0;
};

using BisectTarget = std::variant<std::reference_wrapper<const Graph>, RegularEnsemble>;

struct BisectOptions {
    double lo = 0.0;               // 0 selects the mean-field threshold
    double hi = 0.0;               // 0 selects 2 * lo
    double resolution = 1e-4;
    double endemic_rho = 1e-6;     // classifier: converged mean rho above this
    int max_expansions = 4;
};

/// Bisection on "the SIS^K solver finds an endemic state". The bracket is
/// checked (endemic at hi, not at lo) and widened by up to max_expansions
/// doublings; an inconsistent bracket raises NumericalError.
ThresholdResult threshold_bisect(const BisectTarget& target, int K, std::optional<double> gamma,
                                 const SolverConfig& cfg = {}, BisectOptions opts = {});

/// Mean rho predicted by the SIS^K solver for a bisection target.
double endemic_fraction(const BisectTarget& target, double beta, int K,
                        std::optional<double> gamma, const SolverConfig& cfg);

/// Dense 2m x 2m operator of the linearized K = 1 message map:
/// eps_ij = w B_ij(eps) + v B_ji(eps), w = beta(beta+2)/(2(beta+1)),
/// v = beta^2/(2(beta+1)). Rows and columns follow DirectedEdgeIndex order
/// of the edge (i -> j) carrying eps_ij. Only for small graphs (n <= 500).
Eigen::MatrixXd linearized_edge_operator(const Graph& g, double beta);

} // namespace sisk
