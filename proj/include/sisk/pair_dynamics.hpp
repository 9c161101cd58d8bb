#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <span>
#include <vector>

namespace sisk {

// Node-state convention shared by every module: s in 0..K-1 is the
// susceptible sub-state S^(s+1); s == K is the infectious state I. Recovery
// enters S^(K) (index K-1), decay moves S^(x+1) -> S^(x) (index s -> s-1).
// Joint states of an edge are flattened row-major: s1 * (K+1) + s2.
inline int infectious_state(int K) { return K; }
inline int joint_index(int K, int s1, int s2) { return s1 * (K + 1) + s2; }

/// Continuous-time generator of one edge's joint SIS^K dynamics.
///
/// a[x] (resp. b[x]) is the rate at which the first (second) node is infected
/// from outside the pair while in S^(x+1). rates(i, j) is the i -> j rate;
/// rows sum to zero.
struct PairGenerator {
    int K = 1;
    double beta = 0.0;
    double gamma = 0.0;
    std::vector<double> a;
    std::vector<double> b;
    Eigen::MatrixXd rates;

    int num_states() const { return (K + 1) * (K + 1); }
};

PairGenerator build_pair_generator(int K, double beta, double gamma, std::span<const double> a,
                                   std::span<const double> b);

/// Stationary probabilities over the (K+1)^2 joint states.
struct PairDistribution {
    int K = 1;
    Eigen::VectorXd p;

    double operator()(int s1, int s2) const { return p[joint_index(K, s1, s2)]; }
};

PairDistribution stationary_distribution(const PairGenerator& Q);

enum class Endpoint { first, second };

/// phi^x = beta * P(other endpoint I | `susceptible` endpoint in S^(x)).
/// Sub-states whose conditioning event has probability < 1e-300 get 0 and
/// are marked in `degenerate` when supplied.
std::vector<double> message_from_distribution(const PairDistribution& P, double beta,
                                              Endpoint susceptible,
                                              std::vector<bool>* degenerate = nullptr);

/// Closed-form K = 1 message: psi(beta, x, y) where x is the outside infection
/// rate of the infecting endpoint and y that of the receiving endpoint.
double psi(double beta, double x, double y);

/// Reusable scratch for the per-edge hot loop: builds Q(a, b) in place,
/// solves for its stationary distribution and emits both messages.
class PairSolver {
public:
    explicit PairSolver(int K);

    int K() const noexcept { return K_; }

    // Writes first_msg[x] = beta P(I_2 | S_1^(x)) and second_msg[x] = beta P(I_1 | S_2^(x)).
    void solve(double beta, double gamma, std::span<const double> a, std::span<const double> b,
               std::span<double> first_msg, std::span<double> second_msg);

    const Eigen::VectorXd& distribution() const noexcept { return p_; }

private:
    int K_;
    Eigen::MatrixXd system_;
    Eigen::VectorXd rhs_;
    Eigen::VectorXd p_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

namespace detail {
void fill_pair_generator(Eigen::MatrixXd& Q, int K, double beta, double gamma,
                         std::span<const double> a, std::span<const double> b);
void solve_stationary(const Eigen::MatrixXd& Q, Eigen::MatrixXd& system, Eigen::VectorXd& rhs,
                      Eigen::PartialPivLU<Eigen::MatrixXd>& lu, Eigen::VectorXd& p);
} // namespace detail

} // namespace sisk
