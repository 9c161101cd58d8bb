#include "doctest.h"
#include "oracles.hpp"

#include "sisk/random.hpp"
#include "sisk/solver.hpp"
#include "sisk/temporal.hpp"

#include <cmath>

using namespace sisk;

TEST_CASE("one-node rates: isolated node, regular homogeneous messages") {
    std::vector<Edge> e{{0, 1}};
    const Graph g = Graph::from_edges(3, e);
    EdgeMessages m{2, 0.5, 1.0, std::vector<double>(2 * 2, 0.3)};
    const auto r = one_node_rates(g, m, 2);
    CHECK(r.lambda == std::vector<double>{0.0, 0.0});
    CHECK(r.gamma == 1.0);

    const Graph reg = generate_random_regular(20, 4, 1);
    EdgeMessages h{2, 0.5, 1.0, {}};
    for (std::size_t e2 = 0; e2 < reg.num_directed_edges(); ++e2) {
        h.values.push_back(0.1);
        h.values.push_back(0.25);
    }
    const auto rr = one_node_rates(reg, h, 7);
    CHECK(rr.lambda[0] == doctest::Approx(4 * 0.1));
    CHECK(rr.lambda[1] == doctest::Approx(4 * 0.25));
}

TEST_CASE("one-node stationary: K=1 closed form, all-zero rates, K=2 ODE") {
    const auto d1 = one_node_stationary({{0.7}, 0.0});
    CHECK(d1.infectious() == doctest::Approx(0.7 / 1.7).epsilon(1e-14));

    const auto d0 = one_node_stationary({{0.0, 0.0, 0.0}, 2.0});
    CHECK(d0.degenerate);
    CHECK(d0.p[0] == 1.0);
    CHECK(d0.infectious() == 0.0);

    const OneNodeRates r{{0.1, 0.3}, 1.0};
    const auto d2 = one_node_stationary(r);
    // full (non-absorbing) chain: I -> S^(2) at rate 1
    Eigen::MatrixXd Q = absorbing_generator(r).rates;
    Q(2, 1) = 1.0;
    Q(2, 2) = -1.0;
    const Eigen::VectorXd ode = oracle::rk4_master(Q, Eigen::VectorXd::Constant(3, 1.0 / 3.0), 1e3, 1e-2);
    for (int s = 0; s < 3; ++s) CHECK(std::abs(d2.p[s] - ode[s]) < 1e-8);
}

TEST_CASE("absorbing generator structure") {
    const auto R = absorbing_generator({{0.2, 0.5, 0.1}, 1.5}).rates;
    REQUIRE(R.rows() == 4);
    CHECK(R.row(3).cwiseAbs().maxCoeff() == 0.0);
    for (int s = 0; s < 4; ++s) CHECK(std::abs(R.row(s).sum()) < 1e-15);
    CHECK(R(2, 1) == 1.5);
    CHECK(R(1, 0) == 1.5);
    CHECK(R(0, 3) == 0.2);
    CHECK(R(2, 3) == 0.1);
}

TEST_CASE("survival: t=0, K=1 exponential, K=2 against ODE") {
    const std::vector<double> grid{0.0, 0.5, 1.0, 3.0, 10.0, 40.0};
    const auto s1 = survival_function({{0.37}, 0.0}, grid);
    CHECK(s1[0] == 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(s1[i] - std::exp(-0.37 * grid[i])) < 1e-12);

    const std::vector<double> one{1.0};
    const auto s2 = survival_function({{0.1, 0.3}, 1.0}, one);
    CHECK(std::abs(s2[0] - oracle::survival_by_ode({0.1, 0.3}, 1.0, 1.0)) < 1e-10);
}

TEST_CASE("survival: uniformization matches ODE on randomized inputs") {
    Rng rng = make_rng(41);
    const std::vector<double> grid{0.0, 0.3, 1.0, 2.5};
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 1 + static_cast<int>(uniform_index(rng, 8));
        OneNodeRates r;
        r.gamma = 10.0 * uniform01(rng);
        for (int x = 0; x < K; ++x) r.lambda.push_back(10.0 * uniform01(rng));
        const auto s = survival_function(r, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(std::abs(s[i] - oracle::survival_by_ode(r.lambda, r.gamma, grid[i], 2e-4)) < 1e-9);
    }
}

TEST_CASE("survival: monotone, bounded, vanishing tail") {
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(0.25 * i);
    const auto s = survival_function({{0.05, 0.2, 0.6, 0.9}, 0.8}, grid);
    for (std::size_t i = 1; i < s.size(); ++i) {
        CHECK(s[i] <= s[i - 1] + 1e-15);
        CHECK(s[i] >= 0.0);
        CHECK(s[i] <= 1.0);
    }
    CHECK(s.back() < 1e-2);
    const auto flat = survival_function({{0.0, 0.0}, 1.0}, grid);
    CHECK(flat.back() == doctest::Approx(1.0));
}

TEST_CASE("survival: unsorted or negative grid is rejected") {
    const std::vector<double> bad{0.0, 2.0, 1.0}, neg{-1.0, 0.0};
    CHECK_THROWS(survival_function({{0.1}, 0.0}, bad));
    CHECK_THROWS(survival_function({{0.1}, 0.0}, neg));
}

TEST_CASE("renewal identity: P(I) = 1 / (1 + E[Delta_I])") {
    Rng rng = make_rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 1 + static_cast<int>(uniform_index(rng, 8));
        OneNodeRates r;
        r.gamma = 3.0 * uniform01(rng);
        for (int x = 0; x < K; ++x) r.lambda.push_back(0.05 + 2.0 * uniform01(rng));
        const double mean = mean_inter_infection_time(r);
        CHECK(std::abs(one_node_stationary(r).infectious() - 1.0 / (1.0 + mean)) < 1e-8);

        // the mean is also the integral of the survival curve
        std::vector<double> grid;
        const double h = 0.01;
        for (int i = 0; i <= 20000; ++i) grid.push_back(h * i);
        const auto s = survival_function(r, grid);
        double integral = 0.0;
        for (std::size_t i = 1; i < s.size(); ++i) integral += 0.5 * h * (s[i] + s[i - 1]);
        if (s.back() < 1e-12) CHECK(integral == doctest::Approx(mean).epsilon(1e-4));
    }
}

TEST_CASE("population survival on a regular graph equals the single-node curve") {
    const Graph g = generate_random_regular(200, 3, 2);
    const auto sol = solve_pair_k(g, 0.7, 3, std::nullopt);
    const std::vector<double> grid{0.0, 0.5, 2.0, 5.0};
    const auto pop = population_survival(g, sol.messages, sol.marginals, grid);
    const auto one = survival_function(one_node_rates(g, sol.messages, 0), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(pop[i] == doctest::Approx(one[i]).epsilon(1e-8));
}
