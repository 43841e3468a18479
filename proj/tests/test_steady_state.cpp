#include "doctest.h"

#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "vps/steady_state.hpp"

using namespace vps;

TEST_CASE("Lane-Emden n = 0 and n = 1") {
    EmdenSolution a = solve_lane_emden(0.0, 2000);
    CHECK(a.radius == doctest::Approx(std::sqrt(6.0)).epsilon(1e-10));
    for (std::size_t k = 0; k < a.r.size(); k += 97) CHECK(a.psi[k] == doctest::Approx(1 - a.r[k] * a.r[k] / 6).epsilon(1e-10));
    EmdenSolution b = solve_lane_emden(1.0, 2000);
    CHECK(b.radius == doctest::Approx(pi).epsilon(1e-10));
    for (std::size_t k = 1; k < b.r.size(); k += 97)
        CHECK(std::abs(b.psi[k] - std::sin(b.r[k]) / b.r[k]) < 1e-10);
}

TEST_CASE("density closed forms agree with both quadratures") {
    for (double q : {0.3, 1.0, 2.5}) {
        ProfileF F{ProfileF::Kind::polytrope, q, 1.0, -0.4};
        double phi = -1.3;
        double closed = 4 * pi * sqrt2 * boost::math::beta(q + 1, 1.5) * std::pow(0.9, q + 1.5);
        DensityQuadrature d = density_quadrature(F, phi);
        CHECK(d.f_form == doctest::Approx(closed).epsilon(1e-10));
        CHECK(std::abs(d.f_form - d.fprime_form) <= 1e-8 * d.f_form);
        CHECK(F.rho(phi) == doctest::Approx(closed).epsilon(1e-13));
    }
    ProfileF K{ProfileF::Kind::king, 0.0, 1.0, -1.0};
    DensityQuadrature d = density_quadrature(K, -2.0);
    CHECK(d.f_form == doctest::Approx(6.458384389401606).epsilon(1e-11));
    CHECK(std::abs(d.f_form - d.fprime_form) <= 1e-8 * d.f_form);
    CHECK(K.rho(-2.0) == doctest::Approx(6.458384389401606).epsilon(1e-12));
    CHECK(density_from_potential(K, -0.5) == 0.0);
    CHECK_THROWS_AS(density_from_potential(K, 0.1), std::domain_error);
    CHECK(K.evaluate(K.e0) == 0.0);
}

TEST_CASE("polytrope q = 1 against the shooting oracle") {
    SteadyStateModel m = build_polytrope(1.0, 1.0);
    CHECK(m.support_radius == doctest::Approx(2.459999492231878).epsilon(1e-6));
    CHECK(m.mass == doctest::Approx(12.62558406512157).epsilon(1e-6));
    CHECK(m.e0() == doctest::Approx(-0.4084196195429452).epsilon(1e-6));
    CHECK(m.depth == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.phi0() < m.e0());
    CHECK(m.e0() < 0.0);
    CHECK(check_steady_state(m) <= 1e-6);
    CHECK(m.hamiltonian < 0.0);
    CHECK(std::abs(2 * m.kinetic - m.field_energy) <= 1e-3 * m.field_energy);
}

TEST_CASE("polytrope validation") {
    CHECK_THROWS_AS(build_polytrope(4.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_polytrope(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_polytrope(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_king(0.0), std::invalid_argument);
}

TEST_CASE("polytrope radius scales with the Lane-Emden power law") {
    for (double q : {0.5, 1.0, 2.0}) {
        double n = q + 1.5;
        SteadyStateModel a = build_polytrope(q, 1.0, {1000, 3.0});
        SteadyStateModel b = build_polytrope(q, 2.0, {1000, 3.0});
        double measured = std::log(b.support_radius / a.support_radius) / std::log(2.0);
        double theory = (1.0 - n) / 2.0;
        CHECK(std::abs(measured - theory) <= 0.01 * std::abs(theory));
    }
}

TEST_CASE("King W0 = 3 against the shooting oracle") {
    SteadyStateModel m = build_king(3.0);
    CHECK(m.support_radius == doctest::Approx(0.9516483599844821).epsilon(1e-6));
    CHECK(m.mass == doctest::Approx(9.450034544444184).epsilon(1e-6));
    CHECK(m.e0() == doctest::Approx(-0.7902182010600977).epsilon(1e-6));
    CHECK(m.central_density == doctest::Approx(219.4702717174887).epsilon(1e-12));
    CHECK(check_steady_state(m) <= 1e-6);
    CHECK(m.hamiltonian < 0.0);
    CHECK(std::abs(2 * m.kinetic - m.field_energy) <= 1e-3 * m.field_energy);
    double R = m.support_radius;
    for (double r : {1.2 * R, 2.0 * R, 2.9 * R, 5.0 * R})
        CHECK(std::abs(m.phi(r) + m.mass / (4 * pi * r)) <= 1e-6 * m.mass / (4 * pi * r));
    for (double r = 0.0; r < 3 * R; r += 0.01 * R) {
        CHECK(m.phi(r + 0.01 * R) > m.phi(r));
        CHECK(m.rho(r + 0.01 * R) <= m.rho(r));
    }
    CHECK(m.rho(1.01 * R) == 0.0);
}

TEST_CASE("King family as W0 decreases") {
    double M[3] = {10.67881249391747, 9.790041570985906, 8.578625050328034};
    double Rr[3] = {2.331130668886014, 4.024624163389881, 6.861714156908337};
    double W[3] = {1.0, 0.5, 0.25};
    double prev = 1e300;
    for (int k = 0; k < 3; ++k) {
        SteadyStateModel m = build_king(W[k]);
        CHECK(m.mass == doctest::Approx(M[k]).epsilon(1e-6));
        CHECK(m.support_radius == doctest::Approx(Rr[k]).epsilon(1e-6));
        CHECK(std::isfinite(m.support_radius));
        CHECK(m.mass < prev);
        prev = m.mass;
    }
}

TEST_CASE("steady state residual detects a perturbation") {
    SteadyStateModel m = build_king(3.0);
    double R = m.support_radius;
    Potential bump = Potential::from_function([R](double r) { return r < R ? 0.01 * r * r : 0.0; },
                                              [R](double r) { return r < R ? 0.02 * r : 0.0; }, m.phi.r_max(), 12000, 0.0);
    Potential p = Potential::combine(1.0, m.phi, 1.0, bump);
    double rho_max = m.central_density;
    double res = check_steady_state(p, [&](double r) { return m.rho(r); }, m.phi.r_max());
    CHECK(res == doctest::Approx(0.06 / rho_max).epsilon(1e-3));
    Potential flat = Potential::from_function([](double) { return -1.0; }, [](double) { return 0.0; }, 1.0, 100, 0.0);
    CHECK(check_steady_state(flat, [](double) { return 0.0; }, 1.0) == 0.0);
}

TEST_CASE("phase space density of King") {
    SteadyStateModel m = build_king(3.0);
    PhaseSpaceDensity f = phase_space_density(m, default_phase_grid(m, 200, 100));
    CHECK_FALSE(f.truncated);
    CHECK(std::abs(f.mass() - m.mass) <= 2e-3 * m.mass);
    CHECK(f.sup() <= m.profile.evaluate(m.phi0()));
    CHECK(f.sup() >= 0.95 * m.profile.evaluate(m.phi0()));
    for (std::size_t i = 0; i < f.grid.n_r(); ++i)
        for (std::size_t j = 0; j < f.grid.n_u(); ++j) {
            double e = 0.5 * std::pow(f.grid.speeds.nodes[j], 2) + m.phi(f.grid.radial.nodes[i]);
            if (e >= m.e0()) CHECK(f.at(i, j) == 0.0);
            CHECK(f.at(i, j) >= 0.0);
        }
    PhaseSpaceDensity small = phase_space_density(m, make_grids(0.5 * m.support_radius, 32, m.escape_speed(), 32));
    CHECK(small.truncated);
}
