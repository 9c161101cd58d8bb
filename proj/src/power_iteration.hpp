#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace sisk::detail {

struct EigenEstimate {
    double value = 0.0;
    std::vector<double> vector;
    std::size_t iterations = 0;
    bool converged = false;
};

// Largest algebraic eigenvalue of a symmetric operator. Iterates on M + shift*I,
// which must make that eigenvalue dominant in magnitude, from the all-ones start
// vector (or a supplied unit vector). Stops when the Rayleigh quotient changes by less than tol (relative).
template <class Apply>
EigenEstimate largest_eigenvalue_symmetric(std::size_t n, Apply&& apply, double shift, double tol,
                                           std::size_t max_iter = 100000,
                                           const std::vector<double>* start = nullptr) {
    EigenEstimate est;
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    if (start && start->size() == n) x = *start;
    std::vector<double> y(n);
    double previous = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        apply(x, y);
        const double rayleigh = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) y[i] += shift * x[i];
        const double norm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
        est.value = rayleigh;
        est.iterations = it;
        if (norm == 0.0) {
            est.converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
        if (it > 1 && std::abs(rayleigh - previous) <= tol * std::max(1.0, std::abs(rayleigh))) {
            est.converged = true;
            break;
        }
        previous = rayleigh;
    }
    est.vector = std::move(x);
    return est;
}

} // namespace sisk::detail
