#include "doctest.h"

#include <cmath>
#include <random>

#include "vps/numerics.hpp"

using namespace vps;

TEST_CASE("uniform radial grid is the midpoint rule") {
    RadialGrid g = make_radial_grid(1.0, 100, Spacing::uniform);
    CHECK(g.nodes[0] == doctest::Approx(0.005));
    CHECK(g.nodes[1] == doctest::Approx(0.015));
    double s = 0.0;
    for (double w : g.weights) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("shell volumes integrate r^2 exactly on every spacing") {
    for (Spacing sp : {Spacing::uniform, Spacing::log, Spacing::graded}) {
        RadialGrid g = make_radial_grid(2.5, 64, sp);
        double v = g.integrate_r2([](double) { return 1.0; });
        CHECK(std::abs(v - std::pow(g.r_max, 3) / 3.0) <= 1e-8 * std::pow(g.r_max, 3) / 3.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(g.nodes[i] > 0.0);
            CHECK(g.weights[i] > 0.0);
            if (i) CHECK(g.nodes[i] > g.nodes[i - 1]);
        }
    }
}

TEST_CASE("log grid has a constant node ratio") {
    RadialGrid g = make_radial_grid(10.0, 64, Spacing::log, 1e-3);
    CHECK(g.nodes.front() == doctest::Approx(1e-3));
    CHECK(g.nodes.back() == doctest::Approx(10.0));
    double q = g.nodes[1] / g.nodes[0];
    for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(g.nodes[i + 1] / g.nodes[i] == doctest::Approx(q).epsilon(1e-12));
}

TEST_CASE("graded grid clusters cells at both ends") {
    RadialGrid g = make_radial_grid(1.0, 64, Spacing::graded);
    CHECK(g.weights.front() < 0.7 * g.weights[32]);
    CHECK(g.weights.back() < 0.7 * g.weights[32]);
}

TEST_CASE("phase space box measure") {
    PhaseSpaceGrid g = make_grids(1.0, 40, 1.0, 30);
    double tot = 0.0;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) tot += g.weight(i, j);
    double ref = std::pow(4.0 * pi / 3.0, 2);
    CHECK(ref == doctest::Approx(17.546).epsilon(1e-4));
    CHECK(std::abs(tot - ref) <= 1e-6 * ref);
    CHECK(std::abs(g.measure_box(0.5, 0.25) - (4 * pi / 3 * 0.125) * (4 * pi / 3 * std::pow(0.25, 3))) < 1e-12);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(make_grids(1.0, 8, 1.0, 32), std::invalid_argument);
    CHECK_THROWS_AS(make_grids(-1.0, 32, 1.0, 32), std::invalid_argument);
    CHECK_THROWS_AS(make_grids(1.0, 32, 0.0, 32), std::invalid_argument);
}

TEST_CASE("midpoint quadrature converges at second order") {
    auto f = [](double r) { return std::exp(-r) * std::cos(r); };
    double exact = 0.5 * (1.0 + std::exp(-3.0) * (std::sin(3.0) - std::cos(3.0)));
    std::vector<double> hs, errs;
    for (std::size_t n : {20, 40, 80, 160}) {
        RadialGrid g = make_radial_grid(3.0, n, Spacing::uniform);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += g.weights[i] * f(g.nodes[i]);
        hs.push_back(3.0 / double(n));
        errs.push_back(std::abs(s - exact));
    }
    CHECK(loglog_slope(hs, errs) >= 1.9);
}

TEST_CASE("gauss legendre rule") {
    const GaussRule& g = gauss_legendre(48);
    CHECK(g.x.size() == 48);
    double s = 0.0;
    for (double w : g.w) s += w;
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(gauss_integrate([](double x) { return std::pow(x, 9) + x * x; }, 0.0, 2.0, 5) ==
          doctest::Approx(102.4 + 8.0 / 3.0).epsilon(1e-13));
    CHECK(gauss_integrate_sqrt_end([](double x) { return std::sqrt(1.0 - x); }, 0.0, 1.0, 8) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("invert_monotone") {
    CHECK(invert_monotone([](double x) { return x; }, 0.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(invert_monotone([](double x) { return x * x * x; }, 0.0, 2.0, 8.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(invert_monotone([](double x) { return x; }, 0.0, 1.0, 2.0), std::out_of_range);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.1, 3.0);
    for (int t = 0; t < 100; ++t) {
        double a = U(rng), b = U(rng), c = U(rng);
        auto fn = [=](double x) { return a * x + b * std::pow(x, 3) + c * std::atan(5 * x); };
        double x0 = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
        double target = fn(x0);
        double x = invert_monotone(fn, -1.0, 1.0, target);
        CHECK(std::abs(fn(x) - target) <= 1e-12 * std::max(1.0, std::abs(target)));
    }
}

TEST_CASE("eig_tridiag") {
    auto r = eig_tridiag({2, 2, 2, 2}, {-1, -1, -1}, 1);
    CHECK(r.values[0] == doctest::Approx(2 - 2 * std::cos(pi / 5)).epsilon(1e-13));
    auto d = eig_tridiag({1, 2, 3}, {0, 0}, 2);
    CHECK(d.values[0] == doctest::Approx(1.0));
    CHECK(d.values[1] == doctest::Approx(2.0));
    CHECK_THROWS_AS(eig_tridiag({1, 2, 3}, {0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(eig_tridiag({1, 2, 3}, {0, 0}, 4), std::invalid_argument);

    const std::size_t n = 400;
    const double L = 16.0, h = L / double(n + 1);
    std::vector<double> diag(n), off(n - 1, -1.0 / (h * h));
    for (std::size_t i = 0; i < n; ++i) {
        double x = -8.0 + h * double(i + 1);
        diag[i] = 2.0 / (h * h) + x * x;
    }
    auto ho = eig_tridiag(diag, off, 4);
    CHECK(std::abs(ho.values[0] - 1.0) < 1e-3);
    for (Eigen::Index k = 0; k < 4; ++k) {
        if (k) CHECK(ho.values[k] >= ho.values[k - 1]);
        Eigen::VectorXd v = ho.vectors.col(k);
        Eigen::VectorXd Av(n);
        for (std::size_t i = 0; i < n; ++i) {
            Av[i] = diag[i] * v[i];
            if (i) Av[i] += off[i - 1] * v[i - 1];
            if (i + 1 < n) Av[i] += off[i] * v[i + 1];
        }
        CHECK((Av - ho.values[k] * v).norm() <= 1e-8 * v.norm());
        for (Eigen::Index l = 0; l < 4; ++l)
            CHECK(std::abs(v.dot(ho.vectors.col(l)) - (k == l ? 1.0 : 0.0)) < 1e-8);
    }
}
