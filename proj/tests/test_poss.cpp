#include <doctest.h>

#include <cmath>
#include <sstream>

#include "obscert/poss/poss.hpp"

using namespace obscert;
using namespace obscert::poss;

TEST_CASE("expression evaluation") {
    const std::vector<std::string> vars{"x1", "x2", "w1"};
    auto ev = [&](const std::string& s, std::vector<double> v) { return Expression::parse(s, vars).eval(v); };
    CHECK(ev("1 + 2 * 3", {}) == 7.0);
    CHECK(ev("(1 + 2) * 3", {}) == 9.0);
    CHECK(ev("-x1^2", {3, 0, 0}) == -9.0);
    CHECK(ev("x1^-2", {2, 0, 0}) == 0.25);
    CHECK(ev("x1 - x2 - w1", {10, 3, 2}) == 5.0);
    CHECK(ev("x1 / x2 / w1", {12, 3, 2}) == 2.0);
    CHECK(ev("min(x1, x2) + max(x1, w1)", {1, 2, 5}) == 6.0);
    CHECK(ev("abs(-2) + exp(0) + cos(0) + sin(0)", {}) == 4.0);
    CHECK(ev("2.5e-1", {}) == 0.25);
    CHECK_THROWS_AS(ev("x1 / x2", {1, 0, 0}), NumericError);
    CHECK_THROWS_AS(Expression::parse("x3 + 1", vars), ParseError);
    CHECK_THROWS_AS(Expression::parse("x1 ^ 1.5", vars), ParseError);
    CHECK_THROWS_AS(Expression::parse("(x1", vars), ParseError);
    CHECK_THROWS_AS(Expression::parse("x1 x2", vars), ParseError);
}

TEST_CASE("step on the case study and a rotation") {
    const Poss m = Poss::case_study();
    CHECK(m.step({1.0}, {0.2})[0] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(m.step({0.0}, {0.0})[0] == 0.0);
    CHECK_THROWS_AS(m.step({0.0, 1.0}, {0.0}), Error);

    const Poss rot(2, 2, Box({-2, -2}, {2, 2}), Region({Box({-1, -1}, {1, 1})}), {"x2 + w1", "-x1 + w2"},
                   {"x1", "x2"}, Distribution::gaussian_diag({0, 0}, {1, 1}), 3);
    const State r = rot.step({1, 0}, {0, 0});
    CHECK(r[0] == 0.0);
    CHECK(r[1] == -1.0);

    const Poss blow(1, 1, Box({-1}, {1}), Region({Box({0}, {0})}), {"exp(x1 * 1000)"}, {"x1"},
                    Distribution::gaussian_diag({0}, {1}), 1);
    CHECK_THROWS_AS(blow.step({1.0}, {0.0}), NumericError);
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(Poss(1, 1, Box({-1}, {1}), Region({Box({-2}, {2})}), {"x1"}, {"x1"},
                         Distribution::gaussian_diag({0}, {1}), 1),
                    Error);
    CHECK_THROWS_AS(Poss(1, 1, Box({-1}, {1}), Region({Box({0}, {0})}), {"x1 + w2"}, {"x1"},
                         Distribution::gaussian_diag({0}, {1}), 1),
                    ParseError);
    CHECK_THROWS_AS(Distribution::gaussian_diag({0}, {0}), Error);
    CHECK_THROWS_AS(Distribution::discrete({{0}, {1}}, {0.5, 0.6}), Error);
}

TEST_CASE("disturbance sampling statistics") {
    Rng rng(1234);
    const auto g = Distribution::gaussian_diag({0.0}, {0.4});
    const int n = 1000000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double w = sample_disturbance(g, rng)[0];
        s += w;
        s2 += w * w;
    }
    const double mean = s / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::fabs(mean) <= 0.002);
    CHECK(sd >= 0.398);
    CHECK(sd <= 0.402);

    const auto u = Distribution::uniform_box(Box({0.0}, {1.0}));
    const auto t = Distribution::truncated_gaussian({0.0}, {0.4}, 3.0);
    double us = 0;
    for (int i = 0; i < 100000; ++i) {
        const double a = u.sample(rng)[0];
        const double b = t.sample(rng)[0];
        CHECK((a >= 0.0 && a <= 1.0));
        CHECK((b >= -1.2 && b <= 1.2));
        us += a;
    }
    // mean 1/2, sd of the mean sqrt(1/12 / 1e5)
    CHECK(std::fabs(us / 100000 - 0.5) <= 3 * std::sqrt(1.0 / 12 / 100000));

    const auto d = Distribution::discrete({{0}, {1}, {2}}, {0.2, 0.3, 0.5});
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < 100000; ++i) ++counts[static_cast<int>(d.sample(rng)[0])];
    CHECK(std::fabs(counts[2] / 100000.0 - 0.5) <= 3 * std::sqrt(0.25 / 100000));
}

TEST_CASE("quadrature and candidates") {
    const auto g = Distribution::gaussian_diag({0.0}, {0.4});
    const Quadrature q = g.quadrature(9, 3.0);
    REQUIRE(q.nodes.size() == 9);
    double total = 0, m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        total += q.weights[i];
        m1 += q.weights[i] * q.nodes[i][0];
        m2 += q.weights[i] * q.nodes[i][0] * q.nodes[i][0];
        CHECK(std::fabs(q.nodes[i][0]) <= 1.2);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(m1) <= 1e-12);
    // variance of N(0, 0.16) truncated at 3 sigma is 0.16 * 0.9733
    CHECK(m2 == doctest::Approx(0.16 * 0.97333).epsilon(2e-3));

    const auto u2 = Distribution::uniform_box(Box({0, -1}, {2, 1}));
    const Quadrature qu = u2.quadrature(3, 3.0);
    CHECK(qu.nodes.size() == 9);
    double ex = 0;
    for (std::size_t i = 0; i < qu.nodes.size(); ++i) ex += qu.weights[i] * qu.nodes[i][0] * qu.nodes[i][0];
    CHECK(ex == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    const auto c = g.candidates(21, 3.0);
    CHECK(c.size() == 21);
    CHECK(c.front()[0] == doctest::Approx(-1.2));
    CHECK(c.back()[0] == doctest::Approx(1.2));
}

TEST_CASE("trajectories: determinism, replay, bounds") {
    const Poss m = Poss::case_study();
    Rng a(99), b(99);
    const auto t1 = sample_trajectory(m, {1.5}, a);
    const auto t2 = sample_trajectory(m, {1.5}, b);
    CHECK(t1.states == t2.states);
    CHECK(t1.states.size() == 11);
    CHECK(replay(m, {1.5}, t1.disturbances).states == t1.states);
    double wsum = 0;
    for (int t = 0; t <= 10; ++t) {
        if (t > 0) wsum += std::fabs(t1.disturbances[t - 1][0]);
        CHECK(std::fabs(t1.states[t][0]) <= 1.5 * std::pow(0.9, t) + wsum + 1e-12);
    }
    Rng c(1);
    const auto t0 = sample_trajectory(m.with_horizon(0), {0.3}, c);
    CHECK(t0.states.size() == 1);
    CHECK(t0.disturbances.empty());
}

TEST_CASE("stationary variance of the case-study recursion") {
    const Poss m = Poss::case_study().with_horizon(60);
    double s2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(5, i));
        const double x = sample_trajectory(m, {0.0}, rng).states.back()[0];
        s2 += x * x;
    }
    CHECK(std::sqrt(s2 / n) == doctest::Approx(0.4 / std::sqrt(1 - 0.81)).epsilon(0.02 / 0.919));
}

TEST_CASE("output trace and csv") {
    const Poss m = Poss::case_study();
    Trajectory tr{{{1.0}, {-1.0}}, {}};
    const auto ys = output_trace(m, tr);
    CHECK(ys[0][0] == 1.0);
    CHECK(ys[1][0] == 1.0);
    Rng rng(3);
    const auto t = sample_trajectory(m, {0.5}, rng);
    std::ostringstream os;
    write_trajectory_csv(os, m, t);
    CHECK(os.str().rfind("t,x1,w1,y1\n", 0) == 0);
    for (const auto& y : output_trace(m, t)) CHECK(std::isfinite(y[0]));
}

TEST_CASE("finite tables") {
    auto tables = std::make_shared<FiniteTables>();
    tables->num_states = 3;
    tables->num_disturbances = 2;
    tables->next = {1, 2, 2, 0, 0, 1};
    tables->outputs = {{0.0}, {1.0}, {1.0}};
    const Poss m = Poss::finite(tables, {0.25, 0.75}, Region({Box({0}, {1})}), 3);
    CHECK(m.step({1.0}, {1.0})[0] == 0.0);
    CHECK(m.output({2.0})[0] == 1.0);
    CHECK_THROWS_AS(m.step({0.5}, {0.0}), Error);
    const auto q = m.disturbance().quadrature(9, 3.0);
    CHECK(q.nodes.size() == 2);
    CHECK(q.weights[1] == 0.75);
}
