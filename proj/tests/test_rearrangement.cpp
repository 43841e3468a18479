#include "doctest.h"

#include <cmath>

#include "vps/rearrangement.hpp"

using namespace vps;

namespace {

Potential plummer_like(double r_max = 50.0, std::size_t n = 20000) {
    return Potential::from_function([](double r) { return -1.0 / (1.0 + r); },
                                    [](double r) { return 1.0 / ((1.0 + r) * (1.0 + r)); }, r_max, n, 4 * pi);
}

double cell_mass(const PhaseSpaceDensity& f, const std::function<double(double)>& beta) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.grid.n_r(); ++i)
        for (std::size_t j = 0; j < f.grid.n_u(); ++j) s += beta(f.at(i, j)) * f.grid.weight(i, j);
    return s;
}

}  // namespace

TEST_CASE("indicator and two-level densities") {
    PhaseSpaceGrid g = make_grids(2.0, 20, 2.0, 16);
    PhaseSpaceDensity f;
    f.grid = g;
    f.f.assign(g.cells(), 0.0);
    double wa = 0.0, wb = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 16; ++j) {
            if (i < 5 && j < 4) { f.at(i, j) = 2.0; wa += g.weight(i, j); }
            else if (i < 10 && j < 6) { f.at(i, j) = 1.0; wb += g.weight(i, j); }
        }
    DistributionFunction mu = distribution_function(f);
    CHECK(mu(2.0) == 0.0);
    CHECK(mu(1.5) == doctest::Approx(wa).epsilon(1e-14));
    CHECK(mu(1.0) == doctest::Approx(wa).epsilon(1e-14));
    CHECK(mu(0.5) == doctest::Approx(wa + wb).epsilon(1e-14));
    CHECK(mu(0.0) == doctest::Approx(wa + wb).epsilon(1e-14));
    CHECK(mu(-1.0) == doctest::Approx(g.measure_box(2.0, 2.0)).epsilon(1e-12));

    MonotoneRearrangement s = schwarz_rearrangement(mu);
    CHECK(s(0.0) == 2.0);
    CHECK(s(0.5 * wa) == 2.0);
    CHECK(s(wa + 0.5 * wb) == 1.0);
    CHECK(s(s.support()) == 0.0);
    CHECK(s.support() == doctest::Approx(wa + wb).epsilon(1e-14));
    CHECK(s.mass() == doctest::Approx(2 * wa + wb).epsilon(1e-13));
    CHECK(s.primitive(wa) == doctest::Approx(2 * wa).epsilon(1e-13));
    CHECK(s.measure_above(1.5) == doctest::Approx(wa).epsilon(1e-14));
    CHECK(s.measure_above(0.5) == doctest::Approx(wa + wb).epsilon(1e-14));
    for (auto beta : {std::function<double(double)>([](double x) { return x * x; }),
                      std::function<double(double)>([](double x) { return std::sqrt(x); })})
        CHECK(s.integral(beta) == doctest::Approx(cell_mass(f, beta)).epsilon(1e-13));

    DistributionFunction z = distribution_function(PhaseSpaceDensity{g, std::vector<double>(g.cells(), 0.0)});
    CHECK(z(0.0) == 0.0);
    CHECK(schwarz_rearrangement(z).mass() == 0.0);
}

TEST_CASE("L1 distance between rearrangements") {
    MonotoneRearrangement a, b;
    a.kind = MonotoneRearrangement::Kind::step;
    a.t = {0.0, 1.0, 3.0};
    a.value = {2.0, 1.0};
    a.finalize();
    b.kind = MonotoneRearrangement::Kind::linear;
    b.t = {0.0, 4.0};
    b.value = {2.0, 0.0};
    b.finalize();
    CHECK(a.mass() == doctest::Approx(4.0));
    CHECK(b.mass() == doctest::Approx(4.0));
    // |a - b| on [0,1]: t/2; [1,3]: |t/2 - 1| crossing at 2; [3,4]: 2 - t/2
    double exact = 0.25 + 0.5 + 0.25;
    CHECK(a.l1_distance(b) == doctest::Approx(exact).epsilon(1e-14));
    CHECK(b.l1_distance(a) == doctest::Approx(exact).epsilon(1e-14));
    CHECK(a.l1_distance(a) == 0.0);
    CHECK(b.measure_above(1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(b.primitive(2.0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("Jacobian of a Plummer-type potential") {
    Potential p = plummer_like();
    CHECK(jacobian_direct(p, -0.5) == doctest::Approx(1.436323228177436).epsilon(1e-9));
    CHECK(jacobian_derivative_direct(p, -0.5) == doctest::Approx(18.74932644291282).epsilon(1e-9));
    CHECK(jacobian_direct(p, -1.5) == 0.0);
    CHECK(std::isinf(jacobian_direct(p, 0.0)));

    JacobianMap a = jacobian_a(p);
    CHECK(a(-0.5) == doctest::Approx(1.436323228177436).epsilon(1e-8));
    double worst = 0.0;
    for (double e = -0.999; e < -0.02; e += 0.0137) {
        worst = std::max(worst, std::abs(a(e) / a.exact(e) - 1.0));
        CHECK(a.inverse(a(e)) == doctest::Approx(e).epsilon(1e-10));
        // a' by central differences of the direct integral
        double h = 1e-5;
        double fd = (a.exact(e + h) - a.exact(e - h)) / (2 * h);
        CHECK(a.derivative(e) == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK(worst <= 1e-8);
    // strictly increasing
    double prev = 0.0;
    for (double e = -0.99; e < -0.001; e += 0.01) {
        CHECK(a(e) > prev);
        prev = a(e);
    }
    CHECK(a.inverse(0.0) == a.min_energy());
    CHECK(a.inverse(-3.0) == a.min_energy());
}

TEST_CASE("Jacobian rejects potentials outside the class") {
    Potential zero = Potential::from_function([](double) { return 0.0; }, [](double) { return 0.0; }, 5.0, 50, 0.0);
    CHECK_THROWS_AS(jacobian_a(zero), std::invalid_argument);
}

TEST_CASE("steady state: a_Q(e0) equals the support measure of Q") {
    SteadyStateModel m = build_king(3.0);
    JacobianMap a = jacobian_a(m.phi);
    CHECK(a(m.e0()) == doctest::Approx(m.L0).epsilon(1e-8));
    CHECK(a.exact(m.e0()) == doctest::Approx(12.7747144583).epsilon(1e-8));

    PhaseSpaceGrid g = default_phase_grid(m, 400, 200);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    DistributionFunction lin = distribution_function_linear(Q);
    CHECK(lin.support() == doctest::Approx(m.L0).epsilon(3e-3));

    // continuum Q* versus the tabulated F o a^{-1}
    MonotoneRearrangement exact = rearrangement_from_profile(m.profile, a);
    CHECK(exact.support() == doctest::Approx(m.L0).epsilon(1e-8));
    CHECK(exact.mass() == doctest::Approx(m.mass).epsilon(1e-5));
    MonotoneRearrangement qs = schwarz_rearrangement(lin);
    CHECK(qs.l1_distance(exact) <= 2e-3 * m.mass);
}

TEST_CASE("Q is a fixed point of the generalized rearrangement") {
    SteadyStateModel m = build_king(3.0);
    JacobianMap a = jacobian_a(m.phi);
    PhaseSpaceGrid g = default_phase_grid(m, 400, 200);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    MonotoneRearrangement qs = schwarz_rearrangement(distribution_function_linear(Q));
    PhaseSpaceDensity R = generalized_rearrangement(qs, a, g);
    double rel = Q.l1_distance(R) / Q.mass();
    MESSAGE("fixed-point relative L1 error " << rel);
    CHECK(rel <= 1e-3);

    // the tabulated F o a^{-1} gives Q back up to its own interpolation error
    double e1 = Q.l1_distance(generalized_rearrangement(rearrangement_from_profile(m.profile, a, 2048), a, g));
    double e2 = Q.l1_distance(generalized_rearrangement(rearrangement_from_profile(m.profile, a, 4096), a, g));
    CHECK(e1 / Q.mass() <= 1e-5);
    CHECK(e2 <= e1 / 3.0);

    PhaseSpaceGrid g2 = default_phase_grid(m, 800, 400);
    PhaseSpaceDensity Q2 = phase_space_density(m, g2);
    PhaseSpaceDensity R3 = generalized_rearrangement(schwarz_rearrangement(distribution_function_linear(Q2)), a, g2);
    CHECK(Q2.l1_distance(R3) / Q2.mass() <= rel / 3.0);
}

TEST_CASE("bathtub rearrangement is equimeasurable and idempotent") {
    SteadyStateModel m = build_king(3.0);
    PhaseSpaceGrid g = default_phase_grid(m, 60, 60, 1.25, Spacing::equal_volume);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    PhaseSpaceDensity f = scramble_equimeasurable(Q, 7);
    CHECK(f.l1_distance(Q) > 0.0);

    DistributionFunction mq = distribution_function(Q), mf = distribution_function(f);
    REQUIRE(mq.levels.size() == mf.levels.size());
    for (std::size_t k = 0; k < mq.levels.size(); ++k) {
        CHECK(mq.levels[k] == mf.levels[k]);
        CHECK(mq.measures[k] == doctest::Approx(mf.measures[k]).epsilon(1e-12));
    }

    PotentialX phi = solve_poisson_radial(g.radial, std::vector<double>(g.n_r(), 1.0));
    PhaseSpaceDensity b = bathtub_rearrangement(f, phi);
    DistributionFunction mb = distribution_function(b);
    REQUIRE(mb.levels.size() == mf.levels.size());
    for (std::size_t k = 0; k < mb.levels.size(); ++k) {
        CHECK(mb.levels[k] == mf.levels[k]);
        CHECK(mb.measures[k] == doctest::Approx(mf.measures[k]).epsilon(1e-12));
    }
    PhaseSpaceDensity bb = bathtub_rearrangement(b, phi);
    CHECK(bb.l1_distance(b) <= 1e-14 * b.mass());

    // values decrease along increasing cell energy
    std::vector<double> eps = cell_energies(g, phi.phi_avg);
    for (std::size_t c = 0; c < eps.size(); ++c)
        for (std::size_t d = c + 1; d < eps.size(); d += 37)
            if (eps[c] < eps[d]) CHECK(b.f[c] >= b.f[d]);
}

TEST_CASE("bathtub on a nonuniform grid conserves mass and Casimirs of the step rearrangement") {
    SteadyStateModel m = build_polytrope(1.0, 1.0);
    PhaseSpaceGrid g = default_phase_grid(m, 80, 50);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    PotentialX phi = solve_poisson_radial(g.radial, [&](double r) { return m.rho(r); });
    PhaseSpaceDensity b = bathtub_rearrangement(Q, phi);
    CHECK(b.mass() == doctest::Approx(Q.mass()).epsilon(1e-12));
    CHECK(b.sup() <= Q.sup());
    // mu differs by at most one cell weight at every level
    DistributionFunction mq = distribution_function(Q);
    DistributionFunction mb = distribution_function(b);
    double wmax = 0.0;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) wmax = std::max(wmax, g.weight(i, j));
    for (double s = 0.0; s < Q.sup(); s += Q.sup() / 97) CHECK(std::abs(mq(s) - mb(s)) <= 2 * wmax);
}

TEST_CASE("pseudo-inverse level") {
    SteadyStateModel m = build_king(3.0);
    JacobianMap a = jacobian_a(m.phi);
    MonotoneRearrangement qs = rearrangement_from_profile(m.profile, a);
    CHECK_THROWS_AS(pseudo_inverse_level(qs, a, 0.0), std::out_of_range);
    CHECK_THROWS_AS(pseudo_inverse_level(qs, a, qs.sup()), std::out_of_range);
    for (double s : {0.1, 1.0, 5.0, 15.0}) {
        double e = pseudo_inverse_level(qs, a, s);
        CHECK(a(e) == doctest::Approx(qs.measure_above(s)).epsilon(1e-12));
        CHECK(qs(a(e) * (1 - 1e-9)) > s);
        CHECK(qs(a(e) * (1 + 1e-9)) <= s);
        // Q* = F o a^{-1}, so the level set is {F > s} up to the table error
        CHECK(m.profile.evaluate(e) == doctest::Approx(s).epsilon(1e-5));
    }
}

TEST_CASE("path derivative of the Jacobian converges at second order") {
    SteadyStateModel m = build_king(3.0);
    Potential p2 = Potential::from_function([&](double r) { return 1.1 * m.phi(r); },
                                            [&](double r) { return 1.1 * m.phi.derivative(r); }, m.phi.r_max(), 4000,
                                            1.1 * m.mass);
    for (double e : {m.e0(), 0.5 * m.phi0(), -0.1}) {
        double lam = 0.3;
        double d = path_derivative_a(m.phi, p2, lam, e);
        auto a_at = [&](double l) { return jacobian_direct(Potential::combine(1 - l, m.phi, l, p2), e); };
        std::vector<double> hs{0.04, 0.02, 0.01}, errs;
        for (double h : hs) errs.push_back(std::abs((a_at(lam + h) - a_at(lam - h)) / (2 * h) - d));
        CHECK(errs.back() <= 1e-4 * std::abs(d));
        CHECK(loglog_slope(hs, errs) == doctest::Approx(2.0).epsilon(0.1));
    }
    CHECK_THROWS_AS(path_derivative_a(m.phi, p2, 0.0, 0.0), std::domain_error);
}

TEST_CASE("interval-wise Jacobian agrees with the direct integral and is smooth") {
    Potential p = plummer_like(50.0, 80000);
    CHECK(jacobian_fine(p, -0.5) == doctest::Approx(1.436323228177436).epsilon(1e-13));
    CHECK(jacobian_fine(p, -0.5, 1) == doctest::Approx(18.74932644291282).epsilon(2e-12));
    SteadyStateModel m = build_king(3.0);
    for (double e : {m.phi0() + 0.01, 0.5 * (m.phi0() + m.e0()), m.e0(), -0.3, -0.01}) {
        CHECK(jacobian_fine(m.phi, e) == doctest::Approx(jacobian_direct(m.phi, e)).epsilon(1e-9));
        CHECK(jacobian_fine(m.phi, e, 1) == doctest::Approx(jacobian_derivative_direct(m.phi, e)).epsilon(1e-9));
        // the single-rule a'' is the coarser of the two
        CHECK(jacobian_fine(m.phi, e, 2) == doctest::Approx(jacobian_second_direct(m.phi, e)).epsilon(1e-5));
        double s = jacobian_fine(m.phi, e);
        CHECK(jacobian_fine_inverse(m.phi, s, e + 0.05) == doctest::Approx(e).epsilon(1e-13));
    }
    // second differences resolve a'' without quadrature noise
    double e = 0.5 * (m.phi0() + m.e0()), h = 1e-4;
    double d2 = (jacobian_fine(m.phi, e + h, 1) - jacobian_fine(m.phi, e - h, 1)) / (2 * h);
    CHECK(d2 == doctest::Approx(jacobian_fine(m.phi, e, 2)).epsilon(1e-6));
}
