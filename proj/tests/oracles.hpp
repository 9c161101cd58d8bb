#pragma once

// Independent reference computations used only by the tests: explicit ODE
// integration, dense eigensolves and direct formula iterations.

#include "sisk/graph.hpp"

#include <Eigen/Dense>

#include <vector>

namespace sisk::oracle {

// Integrates dp/dt = p Q with classic RK4 from p0 to time t.
Eigen::VectorXd rk4_master(const Eigen::MatrixXd& Q, Eigen::VectorXd p0, double t, double dt);

// Rule-table generator of one edge built independently of pair_dynamics:
// enumerates events per node instead of per matrix entry.
Eigen::MatrixXd pair_generator_by_events(int K, double beta, double gamma,
                                         const std::vector<double>& a,
                                         const std::vector<double>& b);

// P(Delta_I > t) by RK4 on the absorbing one-node chain started in S^(K).
double survival_by_ode(const std::vector<double>& lambda, double gamma, double t, double dt = 1e-4);

// Dense adjacency spectrum.
double dense_spectral_radius(const Graph& g);

// Largest real part among the eigenvalues of a general dense matrix.
double leading_eigenvalue(const Eigen::MatrixXd& M);

// Quasi-stationary law of a generator on the states listed in `transient`
// (all other states absorbing): normalized left Perron vector of the
// restricted sub-generator.
Eigen::VectorXd quasi_stationary(const Eigen::MatrixXd& Q, const std::vector<int>& transient);

// Jacobi iteration of phi_ij = psi(B_ij(phi), B_ji(phi)) written directly
// from the neighbour sums, with the same damping and start value as the
// solver. Returns messages in DirectedEdgeIndex order.
std::vector<double> psi_iteration(const Graph& g, double beta, double damping, double init,
                                  double tol, std::size_t max_iter);

} // namespace sisk::oracle
