#include "doctest.h"

#include <cmath>

#include "vps/antonov.hpp"
#include "vps/functionals.hpp"

using namespace vps;

namespace {

const SteadyStateModel& king() {
    static SteadyStateModel m = build_king(3.0);
    return m;
}

}  // namespace

TEST_CASE("zero density has zero energy") {
    PhaseSpaceGrid g = make_grids(2.0, 20, 2.0, 16);
    PhaseSpaceDensity f;
    f.grid = g;
    f.f.assign(g.cells(), 0.0);
    EnergyReport e = hamiltonian(f);
    CHECK(e.hamiltonian == 0.0);
    CHECK(e.mass == 0.0);
    CHECK_THROWS_AS(monotonicity_gaps(f), DegenerateInput);
    f.f[3] = -1.0;
    CHECK_THROWS_AS(hamiltonian(f), std::invalid_argument);
}

TEST_CASE("grid energies of Q: virial and closed-form values") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    EnergyReport e = hamiltonian(phase_space_density(m, g));
    CHECK(std::abs(2.0 * e.kinetic + e.potential) / e.kinetic < 1e-3);
    CHECK(e.hamiltonian == doctest::Approx(m.hamiltonian).epsilon(1e-3));
    CHECK(e.mass == doctest::Approx(m.mass).epsilon(1e-3));
    // the quadrature error shrinks with the grid
    double e1 = quadrature_self_error(m, g), e2 = quadrature_self_error(m, default_phase_grid(m, 400, 200));
    CHECK(e2 < e1 / 3.0);
}

TEST_CASE("velocity squeeze keeps rho and scales kinetic energy") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 400, 400);
    PhaseSpaceDensity Q = phase_space_density(m, g), S = perturb(m, g, Perturbation::squeeze, 0.1, 1);
    double k1 = hamiltonian(Q).kinetic, k2 = hamiltonian(S).kinetic;
    CHECK(k2 * 1.1 * 1.1 == doctest::Approx(k1).epsilon(2e-3));
    CHECK(S.mass() == doctest::Approx(Q.mass()).epsilon(2e-3));
}

TEST_CASE("transport pairing") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 100, 50);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    PotentialX phi = density_potential(Q);
    CHECK(transport_pairing(Q, Q, phi) == 0.0);
    PhaseSpaceDensity f = perturb(m, g, Perturbation::amplitude, 0.1, 2);
    CHECK(transport_pairing(f, Q, phi) == doctest::Approx(-transport_pairing(Q, f, phi)).epsilon(1e-12));
}

TEST_CASE("monotonicity gaps") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    const double tol = 10.0 * quadrature_self_error(m, g);
    CHECK(tol < 0.05);

    MonotonicityReport q = monotonicity_gaps(phase_space_density(m, g));
    CHECK(q.gap1 >= -tol);
    CHECK(q.gap1 <= tol);
    CHECK(q.gap2 <= tol);
    CHECK(std::abs(q.residual) < 1e-10);

    for (Perturbation p : {Perturbation::amplitude, Perturbation::scramble, Perturbation::squeeze}) {
        MonotonicityReport r = monotonicity_gaps(perturb(m, g, p, 0.05, 7));
        CAPTURE(to_string(p));
        CHECK(r.gap1 > 0.0);
        CHECK(r.gap2 >= 0.0);
        CHECK(std::abs(r.residual) < 1e-10 * std::abs(r.h_f));
        CHECK(r.h_hat <= r.h_f);
    }
}

TEST_CASE("perturbation families") {
    CHECK(parse_perturbation("scramble") == Perturbation::scramble);
    CHECK(to_string(parse_perturbation("squeeze")) == "squeeze");
    CHECK_THROWS_AS(parse_perturbation("rotate"), std::invalid_argument);
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 100, 50, 1.25, Spacing::equal_volume);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    PhaseSpaceDensity s = perturb(m, g, Perturbation::scramble, 0.03, 11);
    // a scramble is equimeasurable: same distribution function
    DistributionFunction a = distribution_function(Q), b = distribution_function(s);
    for (double lvl : {0.01, 0.3, 1.0, 2.0}) CHECK(a(lvl) == doctest::Approx(b(lvl)).epsilon(1e-12));
    CHECK(Q.l1_distance(s) >= 0.03 * Q.mass());
    CHECK(perturb(m, g, Perturbation::amplitude, 0.0, 1).l1_distance(Q) == 0.0);
}

TEST_CASE("reduced functional at the steady state") {
    const SteadyStateModel& m = king();
    ReducedFunctional J(m);
    CHECK(J(m.phi) == doctest::Approx(m.hamiltonian).epsilon(1e-7));
    MonotoneRearrangement qs = rearrangement_from_profile(m.profile, JacobianMap(m.phi));
    CHECK(reduced_J0(qs, m.phi) == doctest::Approx(J.J0(m.phi)).epsilon(1e-5));
    MonotoneRearrangement zero = zero_rearrangement();
    CHECK(reduced_J0(zero, m.phi) == 0.0);
}

TEST_CASE("reduced functional on the grid: both routes") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    PotentialX phi = density_potential(Q);
    MonotoneRearrangement qs = schwarz_rearrangement(distribution_function(Q));
    ReducedReport r = reduced_functional(qs, phi, g);
    const double tol = quadrature_self_error(m, g);
    CHECK(r.coupling >= 0.0);
    CHECK(r.coupling <= tol);
    CHECK(std::abs(r.J_value - r.J_G_route) <= tol);
    // J_{Q*}(phi_Q) = H(Q) - gap1
    MonotonicityReport mg = monotonicity_gaps(Q);
    CHECK(std::abs(r.J_value - (mg.h_f - mg.gap1)) < 1e-10);
}

TEST_CASE("rearrangement gap is the difference of J0") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 100, 50);
    MonotoneRearrangement qs = schwarz_rearrangement(distribution_function(phase_space_density(m, g)));
    MonotoneRearrangement fs =
        schwarz_rearrangement(distribution_function(perturb(m, g, Perturbation::amplitude, 0.2, 4)));
    double gap = rearrangement_gap(fs, qs, m.phi);
    double diff = reduced_J0(fs, m.phi) - reduced_J0(qs, m.phi);
    CHECK(gap == doctest::Approx(diff).epsilon(1e-4));
    CHECK(rearrangement_gap(qs, qs, m.phi) == 0.0);
}

TEST_CASE("lower bound at Q and near Q") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    LowerBoundReport q = stability_lower_bound(phase_space_density(m, g), m, 0.4);
    CHECK(q.lhs == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q.rhs < 1e-20);
    CHECK(q.reliable);
    LowerBoundReport f = stability_lower_bound(perturb(m, g, Perturbation::amplitude, 0.02, 5), m, 0.4);
    CHECK(f.reliable);
    CHECK(f.distance > 0.0);
    CHECK(f.slack >= 0.0);
}

TEST_CASE("interpolation terms are invariant under mass, x and v scaling") {
    const SteadyStateModel& m = king();
    const double R = 1.25 * m.support_radius, V = 1.25 * m.escape_speed();
    auto ratio = [&](double A, double a, double b) {
        PhaseSpaceGrid g = make_grids(a * R, 200, b * V, 100);
        return interpolation_terms(density_on_grid([&](double r, double u) { return A * m.Q(r / a, u / b); }, g)).ratio();
    };
    double r0 = ratio(1.0, 1.0, 1.0);
    CHECK(ratio(7.0, 1.0, 1.0) == doctest::Approx(r0).epsilon(1e-10));
    CHECK(ratio(1.0, 0.3, 1.0) == doctest::Approx(r0).epsilon(1e-10));
    CHECK(ratio(1.0, 1.0, 2.5) == doctest::Approx(r0).epsilon(1e-10));
    CHECK(ratio(0.4, 2.0, 0.5) == doctest::Approx(r0).epsilon(1e-10));
}

TEST_CASE("estimate constants and potential stability") {
    const SteadyStateModel& m = king();
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    EstimateConstants c = calibrate_estimates(m, g, 2.0);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    CHECK(c.interpolation == doctest::Approx(2.0 * interpolation_terms(Q).ratio()).epsilon(1e-12));
    CHECK_THROWS_AS(calibrate_estimates(m, g, 0.5), std::invalid_argument);

    PotentialStability same = potential_stability(Q, Q, c);
    CHECK(same.lhs() == 0.0);
    CHECK(same.c_fg > 0.0);

    // small perturbations: the bound holds and the left side shrinks at least like eps^(1/6)
    std::vector<double> eps{1e-3, 1e-2, 1e-1}, lhs;
    for (double e : eps) {
        PotentialStability s = potential_stability(perturb(m, g, Perturbation::amplitude, e, 3), Q, c);
        CHECK(s.lhs() <= s.rhs());
        CHECK(s.grad <= s.grad_bound);
        CHECK(s.sup <= s.sup_bound);
        lhs.push_back(s.lhs());
    }
    CHECK(loglog_slope(eps, lhs) >= 1.0 / 6.0);
    CHECK_THROWS_AS(potential_stability(Q, phase_space_density(m, default_phase_grid(m, 100, 50)), c), std::invalid_argument);
}

TEST_CASE("random densities") {
    for (std::uint64_t s = 0; s < 8; ++s) {
        RandomDensity d = random_density(s);
        CAPTURE(d.family);
        CHECK(d.r_max > 0.0);
        CHECK(d.u_max > 0.0);
        PhaseSpaceDensity f = density_on_grid(d.f, make_grids(d.r_max, 60, d.u_max, 30));
        CHECK(f.mass() > 0.0);
        RandomDensity e = random_density(s);
        CHECK(e.f(0.3 * d.r_max, 0.2 * d.u_max) == d.f(0.3 * d.r_max, 0.2 * d.u_max));
    }
}
