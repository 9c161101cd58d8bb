#include "sisk/pair_dynamics.hpp"

#include "sisk/error.hpp"

#include <cmath>
#include <string>

namespace sisk {

namespace {

constexpr double kClampTolerance = 1e-12;
constexpr double kSingularRcond = 1e-15;
constexpr double kDegenerateMass = 1e-300;

void check_rates(int K, double beta, double gamma, std::span<const double> a,
                 std::span<const double> b) {
    if (K < 1) throw InputError("K must be at least 1");
    if (a.size() != static_cast<std::size_t>(K) || b.size() != static_cast<std::size_t>(K))
        throw InputError("external rate vectors must have K entries");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be a nonnegative rate");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be a nonnegative rate");
    for (std::size_t x = 0; x < a.size(); ++x)
        if (!(a[x] >= 0.0) || !(b[x] >= 0.0) || !std::isfinite(a[x]) || !std::isfinite(b[x]))
            throw InputError("external infection rates must be nonnegative");
}

} // namespace

namespace detail {

void fill_pair_generator(Eigen::MatrixXd& Q, int K, double beta, double gamma,
                         std::span<const double> a, std::span<const double> b) {
    const int width = K + 1;
    const int I = infectious_state(K);
    Q.setZero(width * width, width * width);
    for (int s1 = 0; s1 <= K; ++s1) {
        for (int s2 = 0; s2 <= K; ++s2) {
            const int from = joint_index(K, s1, s2);
            // first node
            if (s1 == I) {
                Q(from, joint_index(K, K - 1, s2)) += 1.0;
            } else {
                if (s1 > 0) Q(from, joint_index(K, s1 - 1, s2)) += gamma;
                Q(from, joint_index(K, I, s2)) += a[s1] + (s2 == I ? beta : 0.0);
            }
            // second node
            if (s2 == I) {
                Q(from, joint_index(K, s1, K - 1)) += 1.0;
            } else {
                if (s2 > 0) Q(from, joint_index(K, s1, s2 - 1)) += gamma;
                Q(from, joint_index(K, s1, I)) += b[s2] + (s1 == I ? beta : 0.0);
            }
            Q(from, from) = -Q.row(from).sum();
        }
    }
}

void solve_stationary(const Eigen::MatrixXd& Q, Eigen::MatrixXd& system, Eigen::VectorXd& rhs,
                      Eigen::PartialPivLU<Eigen::MatrixXd>& lu, Eigen::VectorXd& p) {
    const Eigen::Index n = Q.rows();
    // p Q = 0  <=>  Q^T p^T = 0; the last balance equation is replaced by sum(p) = 1.
    system = Q.transpose();
    system.row(n - 1).setOnes();
    rhs.setZero(n);
    rhs[n - 1] = 1.0;
    lu.compute(system);
    if (!(lu.rcond() > kSingularRcond))
        throw NumericalError("stationary solve: singular generator (no unique stationary distribution)");
    p = lu.solve(rhs);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(p[i])) throw NumericalError("stationary solve: non-finite probability");
        if (p[i] < 0.0) {
            if (p[i] < -kClampTolerance)
                throw NumericalError("stationary solve: negative probability " + std::to_string(p[i]));
            p[i] = 0.0;
        }
        total += p[i];
    }
    p /= total;
}

} // namespace detail

PairGenerator build_pair_generator(int K, double beta, double gamma, std::span<const double> a,
                                   std::span<const double> b) {
    check_rates(K, beta, gamma, a, b);
    PairGenerator Q;
    Q.K = K;
    Q.beta = beta;
    Q.gamma = gamma;
    Q.a.assign(a.begin(), a.end());
    Q.b.assign(b.begin(), b.end());
    detail::fill_pair_generator(Q.rates, K, beta, gamma, a, b);
    return Q;
}

PairDistribution stationary_distribution(const PairGenerator& Q) {
    Eigen::MatrixXd system;
    Eigen::VectorXd rhs;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    PairDistribution P;
    P.K = Q.K;
    detail::solve_stationary(Q.rates, system, rhs, lu, P.p);
    return P;
}

std::vector<double> message_from_distribution(const PairDistribution& P, double beta,
                                              Endpoint susceptible, std::vector<bool>* degenerate) {
    const int K = P.K;
    const int I = infectious_state(K);
    std::vector<double> phi(K, 0.0);
    if (degenerate) degenerate->assign(K, false);
    for (int x = 0; x < K; ++x) {
        double joint_infected = 0.0;
        double marginal = 0.0;
        for (int other = 0; other <= K; ++other) {
            const double pr = susceptible == Endpoint::first ? P(x, other) : P(other, x);
            marginal += pr;
            if (other == I) joint_infected = pr;
        }
        if (marginal < kDegenerateMass) {
            if (degenerate) (*degenerate)[x] = true;
            continue;
        }
        phi[x] = beta * joint_infected / marginal;
    }
    return phi;
}

double psi(double beta, double x, double y) {
    return beta * (2.0 * x + x * y + x * x + beta * x + beta * y) /
           ((2.0 + x + y) * (1.0 + x + beta));
}

PairSolver::PairSolver(int K) : K_(K) {
    if (K < 1) throw InputError("K must be at least 1");
}

void PairSolver::solve(double beta, double gamma, std::span<const double> a,
                       std::span<const double> b, std::span<double> first_msg,
                       std::span<double> second_msg) {
    const int K = K_;
    const int I = infectious_state(K);
    const int width = K + 1;
    // Q^T is written straight into the system matrix.
    system_.setZero(width * width, width * width);
    for (int s1 = 0; s1 <= K; ++s1) {
        for (int s2 = 0; s2 <= K; ++s2) {
            const int from = joint_index(K, s1, s2);
            double out = 0.0;
            auto add = [&](int to, double rate) {
                system_(to, from) += rate;
                out += rate;
            };
            if (s1 == I) {
                add(joint_index(K, K - 1, s2), 1.0);
            } else {
                if (s1 > 0) add(joint_index(K, s1 - 1, s2), gamma);
                add(joint_index(K, I, s2), a[s1] + (s2 == I ? beta : 0.0));
            }
            if (s2 == I) {
                add(joint_index(K, s1, K - 1), 1.0);
            } else {
                if (s2 > 0) add(joint_index(K, s1, s2 - 1), gamma);
                add(joint_index(K, s1, I), b[s2] + (s1 == I ? beta : 0.0));
            }
            system_(from, from) -= out;
        }
    }
    const Eigen::Index n = system_.rows();
    system_.row(n - 1).setOnes();
    rhs_.setZero(n);
    rhs_[n - 1] = 1.0;
    lu_.compute(system_);
    p_ = lu_.solve(rhs_);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(p_[i])) throw NumericalError("pair solve: non-finite probability");
        if (p_[i] < 0.0) {
            if (p_[i] < -kClampTolerance)
                throw NumericalError("pair solve: negative probability " + std::to_string(p_[i]));
            p_[i] = 0.0;
        }
        total += p_[i];
    }
    p_ /= total;

    for (int x = 0; x < K; ++x) {
        double first_marginal = 0.0, second_marginal = 0.0;
        for (int other = 0; other <= K; ++other) {
            first_marginal += p_[joint_index(K, x, other)];
            second_marginal += p_[joint_index(K, other, x)];
        }
        first_msg[x] = first_marginal < kDegenerateMass
                           ? 0.0
                           : beta * p_[joint_index(K, x, I)] / first_marginal;
        second_msg[x] = second_marginal < kDegenerateMass
                            ? 0.0
                            : beta * p_[joint_index(K, I, x)] / second_marginal;
    }
}

} // namespace sisk
