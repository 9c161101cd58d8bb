#include "sisk/threshold.hpp"

#include "sisk/error.hpp"
#include "power_iteration.hpp"

#include <cmath>
#include <limits>

namespace sisk {

namespace {

constexpr std::size_t kMaxOuterIterations = 10000;
constexpr std::size_t kDenseOperatorMaxNodes = 500;

void require_edges(const Graph& g) {
    if (g.num_edges() == 0) throw InputError("graph has no edges: no epidemic threshold");
}

// Largest eigenvalue of A - beta L / 2 - I.
detail::EigenEstimate pair_operator_eigen(const Graph& g, double beta, double tol,
                                          const std::vector<double>* start) {
    const std::size_t n = g.num_nodes();
    auto apply = [&g, beta, n](const std::vector<double>& x, std::vector<double>& y) {
        for (NodeId v = 0; v < n; ++v) {
            double ax = 0.0;
            for (NodeId u : g.neighbors(v)) ax += x[u];
            const double lx = static_cast<double>(g.degree(v)) * x[v] - ax;
            y[v] = ax - 0.5 * beta * lx - x[v];
        }
    };
    // Gershgorin: every eigenvalue is >= -max_v (1 + beta d/2 + (1 + beta/2) d).
    const double d = static_cast<double>(g.max_degree());
    const double shift = 1.0 + beta * d / 2.0 + (1.0 + beta / 2.0) * d;
    return detail::largest_eigenvalue_symmetric(n, apply, shift, tol, 100000, start);
}

} // namespace

std::string to_string(ThresholdMethod m) {
    switch (m) {
    case ThresholdMethod::mean_field: return "mf";
    case ThresholdMethod::pair: return "pair";
    case ThresholdMethod::regular_k2: return "k2";
    case ThresholdMethod::bisect: return "bisect";
    }
    return "unknown";
}

ThresholdResult threshold_mf(const Graph& g) {
    require_edges(g);
    ThresholdResult r;
    r.method = ThresholdMethod::mean_field;
    r.lambda = spectral_radius(g);
    r.beta_c = 1.0 / r.lambda;
    r.iterations = 1;
    return r;
}

ThresholdResult threshold_pair(const Graph& g, double tol) {
    require_edges(g);
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    ThresholdResult r;
    r.method = ThresholdMethod::pair;
    r.converged = false;
    double beta = threshold_mf(g).beta_c;
    double relax = 1.0;
    double last_step = std::numeric_limits<double>::infinity();
    std::vector<double> vec;
    const double eig_tol = std::min(1e-14, tol * 1e-2);
    for (std::size_t it = 1; it <= kMaxOuterIterations; ++it) {
        auto est = pair_operator_eigen(g, beta, eig_tol, vec.empty() ? nullptr : &vec);
        vec = std::move(est.vector);
        if (!(est.value > 0.0)) throw NumericalError("pair threshold: nonpositive leading eigenvalue");
        const double step = 1.0 / est.value - beta;
        if (std::abs(step) > std::abs(last_step)) relax = 0.5;
        last_step = step;
        beta += relax * step;
        r.iterations = it;
        r.lambda = est.value;
        if (std::abs(step) < tol) {
            r.converged = true;
            break;
        }
    }
    r.beta_c = beta;
    return r;
}

ThresholdResult threshold_pair_regular_k2(double q) {
    if (!(q >= 1.0) || !std::isfinite(q)) throw InputError("excess degree q must be at least 1");
    ThresholdResult r;
    r.method = ThresholdMethod::regular_k2;
    const double root = std::sqrt(4.0 * q * std::pow(q + 1.0, 3) + 1.0);
    r.beta_c = (1.0 - 2.0 * q * q * q + 4.0 * q + (2.0 * q + 1.0) * root) /
               (2.0 * q * q * (q + 2.0) * (q + 2.0));
    return r;
}

double endemic_fraction(const BisectTarget& target, double beta, int K,
                        std::optional<double> gamma, const SolverConfig& cfg) {
    if (const auto* ens = std::get_if<RegularEnsemble>(&target))
        return solve_regular_scalar(ens->q, beta, K, gamma, cfg).rho;
    const Graph& g = std::get<std::reference_wrapper<const Graph>>(target).get();
    return solve_pair_k(g, beta, K, gamma, cfg).marginals.mean_rho();
}

ThresholdResult threshold_bisect(const BisectTarget& target, int K, std::optional<double> gamma,
                                 const SolverConfig& cfg, BisectOptions opts) {
    if (!(opts.resolution > 0.0)) throw InputError("bisection resolution must be positive");
    double lo = opts.lo;
    if (lo <= 0.0) {
        if (const auto* ens = std::get_if<RegularEnsemble>(&target))
            lo = 1.0 / (ens->q + 1.0);
        else
            lo = threshold_mf(std::get<std::reference_wrapper<const Graph>>(target).get()).beta_c;
    }
    double hi = opts.hi > 0.0 ? opts.hi : 2.0 * lo;
    if (!(lo < hi)) throw InputError("bisection bracket needs lo < hi");

    ThresholdResult r;
    r.method = ThresholdMethod::bisect;
    auto endemic = [&](double beta) {
        ++r.iterations;
        return endemic_fraction(target, beta, K, gamma, cfg) > opts.endemic_rho;
    };

    bool lo_endemic = endemic(lo);
    for (int i = 0; lo_endemic && i < opts.max_expansions; ++i) {
        hi = lo;
        lo /= 2.0;
        lo_endemic = endemic(lo);
    }
    bool hi_endemic = lo_endemic ? true : endemic(hi);
    for (int i = 0; !hi_endemic && i < opts.max_expansions; ++i) {
        lo = hi;
        hi *= 2.0;
        hi_endemic = endemic(hi);
    }
    if (lo_endemic || !hi_endemic)
        throw NumericalError("threshold bisection: no sign change in bracket [" + std::to_string(lo) +
                             ", " + std::to_string(hi) + "]");

    while (hi - lo > opts.resolution) {
        const double mid = 0.5 * (lo + hi);
        if (endemic(mid))
            hi = mid;
        else
            lo = mid;
    }
    r.beta_c = 0.5 * (lo + hi);
    r.bracket_width = hi - lo;
    return r;
}

Eigen::MatrixXd linearized_edge_operator(const Graph& g, double beta) {
    if (g.num_nodes() > kDenseOperatorMaxNodes)
        throw InputError("dense edge operator is limited to graphs with at most 500 nodes");
    const DirectedEdgeIndex idx(g);
    const double w = beta * (beta + 2.0) / (2.0 * (beta + 1.0));
    const double v = beta * beta / (2.0 * (beta + 1.0));
    const auto size = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size, size);
    for (std::size_t e = 0; e < idx.size(); ++e) {
        const NodeId i = idx.source(e);
        const NodeId j = idx.target(e);
        // B_ij: edges (j -> k), k != i
        for (std::size_t f = g.offset(j); f < g.offset(j) + g.degree(j); ++f)
            if (g.target(f) != i) M(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(f)) += w;
        // B_ji: edges (i -> k), k != j
        for (std::size_t f = g.offset(i); f < g.offset(i) + g.degree(i); ++f)
            if (g.target(f) != j) M(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(f)) += v;
    }
    return M;
}

} // namespace sisk
