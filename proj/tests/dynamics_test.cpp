#include <doctest.h>

#include <cmath>

#include "lqswitch/dynamics.hpp"
#include "lqswitch/riccati.hpp"
#include "lqswitch/rng.hpp"
#include "test_support.hpp"

using namespace lqswitch;

TEST_CASE("frozen dynamics keep the state constant") {
    auto coeffs = lqtest::scalar_coeffs({{0.0}, {0.0}, {0.0}, {0.0}, {1.0}, 1});
    auto law = lqtest::markov_law({2.0, 1.0}); // switching alone must not move X
    Vector x(1);
    x << 1.7;
    const SamplePath path = simulate_state(coeffs, law, ControlSpec::zero(), 0.0,
                                           x, 0.01, 1.0, 5);
    for (const Vector& xs : path.state) CHECK(xs(0) == 1.7);
}

TEST_CASE("deterministic exponential growth matches the Euler error model") {
    auto coeffs = lqtest::scalar_coeffs({{1.0}, {0.0}, {0.0}, {0.0}, {1.0}, 1});
    Vector x(1);
    x << 1.0;
    const double dt = 1e-3;
    const SamplePath path = simulate_state(coeffs, lqtest::no_switching(),
                                           ControlSpec::zero(), 0.0, x, dt, 1.0, 1);
    const double xT = path.state.back()(0);
    // scheme value is exactly (1 + dt)^{1/dt}; the gap to e is ~ e*dt/2
    CHECK(std::abs(xT - std::exp(1.0)) <= 2.0 * std::exp(1.0) * dt);
    CHECK(std::abs(xT - std::pow(1.0 + dt, 1.0 / dt)) <= 1e-9);
}

TEST_CASE("geometric Brownian second moment") {
    const double c = 0.5;
    auto coeffs = lqtest::scalar_coeffs({{0.0}, {0.0}, {c}, {0.0}, {1.0}, 1});
    Vector x(1);
    x << 1.0;
    const int n_paths = 10000;
    const double dt = 1e-3;
    double sum = 0.0, sum_sq = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        const SamplePath path =
            simulate_state(coeffs, lqtest::no_switching(), ControlSpec::zero(), 0.0,
                           x, dt, 1.0, derived_seed(404, p));
        const double v = path.state.back()(0) * path.state.back()(0);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n_paths;
    const double se = std::sqrt((sum_sq / n_paths - mean * mean) / (n_paths - 1));
    CHECK(std::abs(mean - std::exp(c * c)) <= 3.0 * se);
}

TEST_CASE("closed loop on the analytic benchmark is the linear decay") {
    auto coeffs = lqtest::benchmark_coeffs();
    auto law = lqtest::no_switching();
    const Grid grid(1.0, 1000);
    const RiccatiSolution sol = solve_riccati_direct(coeffs, law, grid);

    Vector x(1);
    x << 1.0;
    const double dt_sim = 1e-3;
    const SamplePath path =
        simulate_closed_loop(coeffs, law, sol, 0.0, x, dt_sim, 1.0, 9);
    // dX = -P(t) X dt with P(t) = 1/(2 - t) gives X(t) = (2 - t)/2
    for (std::size_t l = 0; l < path.n_nodes(); l += 100) {
        const double t = path.times[l];
        CHECK(std::abs(path.state[l](0) - (2.0 - t) / 2.0) <= 2.0 * dt_sim);
    }
    CHECK(std::abs(path.state.back()(0) - 0.5) <= 2.0 * dt_sim);
}

TEST_CASE("B == 0 makes feedback indistinguishable from zero control") {
    auto coeffs = lqtest::scalar_coeffs({{0.4}, {0.0}, {0.3}, {0.5}, {1.0}, 1});
    auto law = lqtest::markov_law({1.0, 2.0});
    const Grid grid(1.0, 100);
    const RiccatiSolution sol = solve_riccati_direct(coeffs, law, grid);

    Vector x(1);
    x << 1.0;
    const SamplePath fb = simulate_closed_loop(coeffs, law, sol, 0.0, x, 0.01, 1.0, 77);
    const SamplePath zero = simulate_state(coeffs, law, ControlSpec::zero(), 0.0,
                                           x, 0.01, 1.0, 77);
    REQUIRE(fb.n_nodes() == zero.n_nodes());
    for (std::size_t l = 0; l < fb.n_nodes(); ++l)
        CHECK(fb.state[l](0) == zero.state[l](0)); // bitwise: same noise, same drift
}

TEST_CASE("recorded control replays -B'P X exactly") {
    lqtest::ScalarPerMark par{{-0.2, 0.3}, {1.0, 0.5}, {0.2}, {0.5}, {1.0}, 1};
    auto coeffs = lqtest::scalar_coeffs(par);
    auto law = lqtest::markov_law({1.5, 1.0});
    const Grid grid(1.0, 200);
    const RiccatiSolution sol = solve_riccati_direct(coeffs, law, grid);

    Vector x(1);
    x << -0.8;
    const SamplePath path = simulate_closed_loop(coeffs, law, sol, 0.0, x, 5e-3, 1.0, 3);
    for (std::size_t l = 0; l + 1 < path.n_nodes(); ++l) {
        const double t = path.times[l];
        const double e = path.elapsed[l];
        const int i = path.marks[l];
        const Vector expected = -coeffs.B(t, e, i).transpose() *
                                (sol.P.eval(t, e, i) * path.state[l]);
        CHECK(path.control[l](0) == expected(0));
    }
}

TEST_CASE("fixed seeds reproduce paths bit for bit") {
    auto coeffs = lqtest::scalar_coeffs({{0.2, -0.1}, {0.5}, {0.3}, {0.5}, {1.0}, 1});
    auto law = lqtest::elapsed_law(2.0, 3.5);
    Vector x(1);
    x << 1.0;
    const SamplePath a =
        simulate_state(coeffs, law, ControlSpec::zero(), 0.0, x, 0.01, 1.0, 31337);
    const SamplePath b =
        simulate_state(coeffs, law, ControlSpec::zero(), 0.0, x, 0.01, 1.0, 31337);
    REQUIRE(a.n_nodes() == b.n_nodes());
    for (std::size_t l = 0; l < a.n_nodes(); ++l) {
        CHECK(a.times[l] == b.times[l]);
        CHECK(a.state[l](0) == b.state[l](0));
    }
}

TEST_CASE("jump times are simulation nodes and the clocks align") {
    auto coeffs = lqtest::scalar_coeffs({{0.1, -0.2}, {0.0}, {0.2}, {0.0}, {1.0}, 1});
    auto law = lqtest::markov_law({3.0, 2.0});
    Vector x(1);
    x << 1.0;
    const SamplePath path =
        simulate_state(coeffs, law, ControlSpec::zero(), 0.0, x, 0.01, 2.0, 555);
    REQUIRE(path.jumps.size() >= 2); // the seed realizes several switches

    // every jump time is a node, with elapsed reset exactly there
    for (std::size_t n = 0; n < path.jumps.size(); ++n) {
        bool found = false;
        for (std::size_t l = 0; l < path.n_nodes(); ++l)
            if (path.times[l] == path.jumps.times[n]) {
                found = true;
                CHECK(path.elapsed[l] == 0.0);
                CHECK(path.marks[l] == path.jumps.marks[n]);
            }
        CHECK(found);
    }
    // between jumps the elapsed clock advances with slope one and the mark
    // stays put
    for (std::size_t l = 0; l + 1 < path.n_nodes(); ++l) {
        if (path.elapsed[l + 1] == 0.0) continue; // jump node
        CHECK(path.marks[l + 1] == path.marks[l]);
        CHECK(std::abs((path.elapsed[l + 1] - path.elapsed[l]) -
                       (path.times[l + 1] - path.times[l])) <= 1e-12);
    }
}

TEST_CASE("weak error of the simulator is consistent with its discrete moment") {
    // For dX = c X dW the Euler scheme has E X_l^2 = (1 + c^2 dt)^l exactly;
    // the empirical moment must match it within 3 SE.
    const double c = 0.8;
    auto coeffs = lqtest::scalar_coeffs({{0.0}, {0.0}, {c}, {0.0}, {1.0}, 1});
    Vector x(1);
    x << 1.0;
    const double dt = 0.05;
    const int n_paths = 20000;
    double sum = 0.0, sum_sq = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        const SamplePath path =
            simulate_state(coeffs, lqtest::no_switching(), ControlSpec::zero(), 0.0,
                           x, dt, 1.0, derived_seed(8080, p));
        const double v = path.state.back()(0) * path.state.back()(0);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n_paths;
    const double se = std::sqrt((sum_sq / n_paths - mean * mean) / (n_paths - 1));
    const double discrete_exact = std::pow(1.0 + c * c * dt, 1.0 / dt);
    CHECK(std::abs(mean - discrete_exact) <= 3.0 * se);

    // and the discrete moments converge to e^{c^2} at first order
    const double b1 = std::abs(std::pow(1.0 + c * c * dt, 1.0 / dt) - std::exp(c * c));
    const double b2 =
        std::abs(std::pow(1.0 + c * c * dt / 2, 2.0 / dt) - std::exp(c * c));
    CHECK(b1 / b2 >= 1.6);
    CHECK(b1 / b2 <= 2.4);
}

TEST_CASE("moment check") {
    Vector x(1);
    x << 2.0;

    SUBCASE("zero dynamics, zero control") {
        auto coeffs = lqtest::scalar_coeffs({{0.0}, {0.0}, {0.0}, {0.0}, {1.0}, 1});
        const auto res = moment_check(coeffs, lqtest::no_switching(),
                                      ControlSpec::zero(), 0.0, x, 200, 0.01, 1.0, 1);
        CHECK(res.empirical == doctest::Approx(4.0));
        CHECK(res.bound >= 4.0);
        CHECK(res.pass);
    }

    SUBCASE("geometric Brownian stays under the bound") {
        auto coeffs = lqtest::scalar_coeffs({{0.0}, {0.0}, {0.5}, {0.0}, {1.0}, 1});
        const auto res =
            moment_check(coeffs, lqtest::no_switching(), ControlSpec::zero(), 0.0,
                         x, 10000, 1e-3, 1.0, 2);
        CHECK(res.pass);
        CHECK(res.empirical > 4.0); // the sup moment genuinely grows
    }

    SUBCASE("a crippled constant makes the same instance fail") {
        auto coeffs = lqtest::scalar_coeffs({{0.0}, {0.0}, {0.5}, {0.0}, {1.0}, 1});
        const auto res =
            moment_check(coeffs, lqtest::no_switching(), ControlSpec::zero(), 0.0,
                         x, 10000, 1e-3, 1.0, 2);
        // replaying the pass rule with the constant forced to 0.5
        const double crippled_bound = 0.5 * (x.squaredNorm() + res.control_energy);
        CHECK(res.empirical > crippled_bound);
    }
}

TEST_CASE("simulation rejects bad arguments") {
    auto coeffs = lqtest::benchmark_coeffs();
    Vector x(1);
    x << 1.0;
    CHECK_THROWS_AS(simulate_state(coeffs, lqtest::no_switching(),
                                   ControlSpec::zero(), 0.0, x, -0.1, 1.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_state(coeffs, lqtest::no_switching(),
                                   ControlSpec::zero(), 2.0, x, 0.01, 1.0, 1),
                    std::invalid_argument);
    Vector bad(2);
    bad << 1.0, 2.0;
    CHECK_THROWS_AS(simulate_state(coeffs, lqtest::no_switching(),
                                   ControlSpec::zero(), 0.0, bad, 0.01, 1.0, 1),
                    std::invalid_argument);
}
