#include "sisk/temporal.hpp"

#include "sisk/error.hpp"
#include "sisk/solver.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace sisk {

namespace {

void check_rates(const OneNodeRates& rates) {
    if (rates.lambda.empty()) throw InputError("one-node chain needs K >= 1");
    if (!(rates.gamma >= 0.0)) throw InputError("gamma must be nonnegative");
    for (double l : rates.lambda)
        if (!(l >= 0.0) || !std::isfinite(l)) throw InputError("infection rates must be nonnegative");
}

// Largest Poisson mean handled in one uniformization step.
constexpr double kMaxStepMass = 32.0;
constexpr double kStepTruncation = 1e-17;

// v <- v exp(dt T) for the transient block T of the absorbing chain, where
// T(s, s) = -(lambda_s + gamma [s > 0]) and T(s, s-1) = gamma.
void propagate(std::vector<double>& v, const OneNodeRates& rates, double uniform_rate, double dt,
               std::vector<double>& term, std::vector<double>& next) {
    const int K = rates.K();
    const double mass = uniform_rate * dt;
    term = v;
    std::fill(v.begin(), v.end(), 0.0);
    double weight = std::exp(-mass);
    for (std::size_t n = 0;; ++n) {
        for (int s = 0; s < K; ++s) v[s] += weight * term[s];
        const double bound = static_cast<double>(n + 2) > mass
                                 ? weight * mass / static_cast<double>(n + 1) /
                                       (1.0 - mass / static_cast<double>(n + 2))
                                 : 1.0;
        if (bound < kStepTruncation) break;
        // term <- term P with P = I + T / uniform_rate; P is lower bidiagonal.
        for (int s = 0; s < K; ++s) {
            const double leave = rates.lambda[s] + (s > 0 ? rates.gamma : 0.0);
            next[s] = term[s] * (1.0 - leave / uniform_rate);
            if (s + 1 < K) next[s] += term[s + 1] * rates.gamma / uniform_rate;
        }
        std::swap(term, next);
        weight *= mass / static_cast<double>(n + 1);
    }
}

} // namespace

OneNodeRates one_node_rates(const Graph& g, const EdgeMessages& msgs, NodeId node) {
    OneNodeRates rates;
    rates.gamma = msgs.gamma;
    rates.lambda.assign(msgs.K, 0.0);
    const std::size_t begin = g.offset(node);
    const std::size_t end = begin + g.degree(node);
    for (std::size_t e = begin; e < end; ++e) {
        const auto phi = msgs.at(e);
        for (int x = 0; x < msgs.K; ++x) rates.lambda[x] += phi[x];
    }
    return rates;
}

AbsorbingGenerator absorbing_generator(const OneNodeRates& rates) {
    check_rates(rates);
    const int K = rates.K();
    AbsorbingGenerator R;
    R.rates.setZero(K + 1, K + 1);
    for (int s = 0; s < K; ++s) {
        if (s > 0) R.rates(s, s - 1) = rates.gamma;
        R.rates(s, K) = rates.lambda[s];
        R.rates(s, s) = -R.rates.row(s).sum();
    }
    return R;
}

OneNodeDistribution one_node_stationary(const OneNodeRates& rates) {
    check_rates(rates);
    const int K = rates.K();
    OneNodeDistribution out;
    out.p.assign(K + 1, 0.0);
    if (std::all_of(rates.lambda.begin(), rates.lambda.end(), [](double l) { return l == 0.0; })) {
        out.p[0] = 1.0;
        out.degenerate = true;
        return out;
    }
    Eigen::MatrixXd G = absorbing_generator(rates).rates;
    G(K, K - 1) = 1.0; // recovery I -> S^(K)
    G(K, K) = -1.0;
    Eigen::MatrixXd system = G.transpose();
    system.row(K).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K + 1);
    rhs[K] = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::VectorXd p = lu.solve(rhs);
    double total = 0.0;
    for (int s = 0; s <= K; ++s) {
        if (!std::isfinite(p[s])) throw NumericalError("one-node stationary solve failed");
        out.p[s] = std::max(p[s], 0.0);
        total += out.p[s];
    }
    for (double& x : out.p) x /= total;
    return out;
}

std::vector<double> survival_function(const OneNodeRates& rates, std::span<const double> t_grid) {
    check_rates(rates);
    const int K = rates.K();
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || !std::isfinite(t_grid[i]))
            throw InputError("survival grid must be finite and nonnegative");
        if (i > 0 && t_grid[i] < t_grid[i - 1]) throw InputError("survival grid must be sorted");
    }
    double uniform_rate = 0.0;
    for (int s = 0; s < K; ++s)
        uniform_rate = std::max(uniform_rate, rates.lambda[s] + (s > 0 ? rates.gamma : 0.0));

    std::vector<double> out(t_grid.size(), 1.0);
    if (uniform_rate == 0.0) return out;

    std::vector<double> v(K, 0.0), term(K), next(K);
    v[K - 1] = 1.0;
    double t = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double remaining = t_grid[i] - t;
        while (remaining > 0.0) {
            const double dt = std::min(remaining, kMaxStepMass / uniform_rate);
            propagate(v, rates, uniform_rate, dt, term, next);
            remaining -= dt;
        }
        t = t_grid[i];
        double alive = 0.0;
        for (double x : v) alive += x;
        out[i] = std::clamp(alive, 0.0, 1.0);
    }
    return out;
}

double mean_inter_infection_time(const OneNodeRates& rates) {
    check_rates(rates);
    const int K = rates.K();
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (rates.gamma == 0.0) {
        const double l = rates.lambda[K - 1];
        return l > 0.0 ? 1.0 / l : inf;
    }
    // m_s = expected time to infection from S^(s+1); m_s = (1 + gamma m_{s-1}) / (gamma + lambda_s).
    double m = rates.lambda[0] > 0.0 ? 1.0 / rates.lambda[0] : inf;
    for (int s = 1; s < K; ++s) m = (1.0 + rates.gamma * m) / (rates.gamma + rates.lambda[s]);
    return m;
}

std::vector<double> population_survival(const Graph& g, const EdgeMessages& msgs,
                                        const NodeMarginals& marginals,
                                        std::span<const double> t_grid) {
    std::vector<double> total(t_grid.size(), 0.0);
    double weight_sum = 0.0;
    std::map<std::vector<double>, std::vector<double>> cache;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const double w = marginals.rho[v];
        if (w <= 0.0) continue;
        const OneNodeRates rates = one_node_rates(g, msgs, v);
        auto it = cache.find(rates.lambda);
        if (it == cache.end()) it = cache.emplace(rates.lambda, survival_function(rates, t_grid)).first;
        for (std::size_t i = 0; i < t_grid.size(); ++i) total[i] += w * it->second[i];
        weight_sum += w;
    }
    if (weight_sum == 0.0) return std::vector<double>(t_grid.size(), 1.0);
    for (double& x : total) x /= weight_sum;
    return total;
}

} // namespace sisk
