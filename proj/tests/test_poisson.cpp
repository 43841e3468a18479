#include "doctest.h"

#include <cmath>

#include "vps/poisson.hpp"
#include "vps/steady_state.hpp"

using namespace vps;

namespace {

Potential ball_potential(double rho0, double R, double r_max, std::size_t n) {
    double M = 4.0 * pi * rho0 * R * R * R / 3.0;
    return Potential::from_function(
        [=](double r) { return r < R ? -rho0 * (3 * R * R - r * r) / 6.0 : -M / (4 * pi * r); },
        [=](double r) { return r < R ? rho0 * r / 3.0 : M / (4 * pi * r * r); }, r_max, n, M);
}

}  // namespace

TEST_CASE("uniform ball matches the interior and exterior closed forms") {
    const double rho0 = 2.0, R = 1.0;
    RadialGrid g = make_radial_grid(4.0, 400, Spacing::uniform);
    std::vector<double> rho(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) rho[i] = g.nodes[i] < R ? rho0 : 0.0;
    PotentialX P = solve_poisson_radial(g, rho);
    const double M = 4.0 * pi * rho0 / 3.0;
    CHECK(P.mass == doctest::Approx(M).epsilon(1e-12));
    for (double r : {0.0, 0.13, 0.5, 0.999, 1.0, 1.7, 3.9, 4.0, 10.0}) {
        double exact = r < R ? -rho0 * (3 * R * R - r * r) / 6.0 : -M / (4 * pi * r);
        CHECK(P.value(r) == doctest::Approx(exact).epsilon(1e-12));
        CHECK(P.phi(r) == doctest::Approx(exact).epsilon(1e-9));
    }
    // exact cell averages of phi inside the ball
    for (std::size_t i : {0u, 10u, 60u}) {
        double a = g.edges[i], b = g.edges[i + 1];
        double avg = -rho0 / 6.0 * (3 * R * R - 0.6 * (std::pow(b, 5) - std::pow(a, 5)) / (std::pow(b, 3) - std::pow(a, 3)));
        CHECK(P.phi_avg[i] == doctest::Approx(avg).epsilon(1e-12));
    }
    double fe = 2.0 * pi * rho0 * rho0 / 45.0 * std::pow(R, 5) + M * M / (8 * pi * R);
    CHECK(P.field_energy == doctest::Approx(fe).epsilon(1e-12));
    CHECK(field_energy(P.phi) == doctest::Approx(fe).epsilon(1e-10));
}

TEST_CASE("thin shell has a flat interior and a Kepler exterior") {
    RadialGrid g = make_radial_grid(2.0, 200, Spacing::uniform);
    std::vector<double> rho(g.size(), 0.0);
    rho[100] = 1.0;
    PotentialX P = solve_poisson_radial(g, rho);
    double inner = P.value(0.0);
    for (double r : {0.1, 0.5, 0.99}) CHECK(P.value(r) == doctest::Approx(inner).epsilon(1e-13));
    for (double r : {1.01, 1.5, 3.0}) CHECK(P.value(r) == doctest::Approx(-P.mass / (4 * pi * r)).epsilon(1e-12));
    CHECK(P.value(0.3) <= 0.0);
    for (std::size_t k = 0; k + 1 < P.phi_edges.size(); ++k) CHECK(P.phi_edges[k + 1] >= P.phi_edges[k]);
}

TEST_CASE("degenerate and invalid densities are rejected") {
    RadialGrid g = make_radial_grid(1.0, 32, Spacing::uniform);
    std::vector<double> zero(g.size(), 0.0);
    CHECK_THROWS_AS(solve_poisson_radial(g, zero), DegenerateInput);
    std::vector<double> neg(g.size(), 1.0);
    neg[3] = -1.0;
    CHECK_THROWS_AS(solve_poisson_radial(g, neg), std::invalid_argument);
}

TEST_CASE("poisson solve is linear in the density") {
    RadialGrid g = make_radial_grid(3.0, 300, Spacing::graded);
    std::vector<double> a(g.size()), b(g.size()), s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double r = g.nodes[i];
        a[i] = std::exp(-r * r);
        b[i] = r < 1.5 ? 1.0 + std::sin(3 * r) * 0.5 : 0.0;
        s[i] = a[i] + b[i];
    }
    PotentialX A = solve_poisson_radial(g, a), B = solve_poisson_radial(g, b), S = solve_poisson_radial(g, s);
    for (double r : {0.0, 0.2, 1.0, 1.49, 2.9, 5.0})
        CHECK(std::abs(S.value(r) - A.value(r) - B.value(r)) <= 1e-10 * std::abs(S.value(r)));
    PotentialX D = solve_poisson_radial(g, [&] {
        std::vector<double> t(a);
        for (double& v : t) v *= 2.0;
        return t;
    }());
    CHECK(D.field_energy == doctest::Approx(4.0 * A.field_energy).epsilon(1e-12));
}

TEST_CASE("King density round-trips to the stored potential") {
    SteadyStateModel m = build_king(3.0);
    RadialGrid g = make_radial_grid(m.phi.r_max(), 6000, Spacing::uniform);
    PotentialX P = solve_poisson_radial(g, [&](double r) { return m.rho(r); });
    CHECK(P.mass == doctest::Approx(m.mass).epsilon(1e-6));
    double err = 0.0;
    for (std::size_t k = 0; k <= g.size(); k += 7) err = std::max(err, std::abs(P.phi_edges[k] - m.phi(g.edges[k])));
    CHECK(err <= 1e-6 * std::abs(m.phi0()));
    CHECK(P.field_energy == doctest::Approx(m.field_energy).epsilon(1e-6));
}

TEST_CASE("membership in the potential class") {
    Potential zero = Potential::from_function([](double) { return 0.0; }, [](double) { return 0.0; }, 5.0, 50, 0.0);
    Membership z = check_X_membership(zero);
    CHECK_FALSE(z.is_member);
    CHECK(z.m_phi == 0.0);

    Potential p = Potential::from_function([](double r) { return -1.0 / (1.0 + r); },
                                           [](double r) { return 1.0 / ((1.0 + r) * (1.0 + r)); }, 50.0, 5000, 4 * pi);
    Membership q = check_X_membership(p);
    CHECK(q.is_member);
    CHECK(q.m_phi == doctest::Approx(1.0).epsilon(1e-8));

    for (SteadyStateModel m : {build_king(3.0), build_polytrope(1.0, 1.0)}) {
        Membership k = check_X_membership(m.phi);
        CHECK(k.is_member);
        CHECK(k.m_phi >= m.mass / (8 * pi * (1 + m.support_radius)));
    }

    Potential positive = Potential::from_function([](double r) { return r < 1 ? 0.1 : -0.1 / r; },
                                                  [](double) { return 0.0; }, 2.0, 20, 0.4 * pi);
    CHECK_FALSE(check_X_membership(positive).is_member);
}

TEST_CASE("potential distances") {
    Potential ball = ball_potential(1.0, 1.0, 3.0, 3000);
    Potential zero = Potential::from_function([](double) { return 0.0; }, [](double) { return 0.0; }, 3.0, 16, 0.0);

    PotentialDistance same = potential_distance(ball, ball);
    CHECK(same.dist_inf == 0.0);
    CHECK(same.dist_grad == 0.0);

    double fe = field_energy(ball);
    PotentialDistance d0 = potential_distance(ball, zero);
    CHECK(d0.dist_grad * d0.dist_grad == doctest::Approx(2 * fe).epsilon(1e-10));
    CHECK(d0.dist_inf == doctest::Approx(0.5).epsilon(1e-12));

    // translation invariance of the field energy through the 3D rule
    PotentialDistance d3 = potential_distance(ball, zero, {0.2, -0.1, 0.3});
    CHECK(d3.dist_grad * d3.dist_grad == doctest::Approx(2 * fe).epsilon(1e-3));
    CHECK(d3.dist_inf == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("shifted distance is linear in small shifts with slope sqrt(int rho^2 / 3)") {
    SteadyStateModel m = build_king(3.0);
    double rho2 = 4 * pi * gauss_integrate([&](double r) { return m.rho(r) * m.rho(r) * r * r; }, 0, m.support_radius, 200);
    double slope = std::sqrt(rho2 / 3.0);
    double gmax = 0.0;
    for (int k = 1; k <= 2000; ++k) gmax = std::max(gmax, m.phi.derivative(m.phi.r_max() * k / 2000.0));
    std::vector<double> eps{0.004, 0.008, 0.016}, d;
    for (double e : eps) {
        PotentialDistance pd = potential_distance(m.phi, m.phi, {e / std::sqrt(3.0), e / std::sqrt(3.0), e / std::sqrt(3.0)});
        d.push_back(pd.dist_grad);
        CHECK(pd.dist_grad / e == doctest::Approx(slope).epsilon(0.03));
        CHECK(pd.dist_inf <= e * gmax * 1.001);
    }
    CHECK(loglog_slope(eps, d) == doctest::Approx(1.0).epsilon(0.02));
}
