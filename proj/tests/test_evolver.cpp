#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vps/evolver.hpp"

using namespace vps;

namespace {

const SteadyStateModel& king() {
    static SteadyStateModel m = build_king(3.0);
    return m;
}

const PhaseSpaceGrid& grid() {
    static PhaseSpaceGrid g = default_phase_grid(king(), 400, 200);
    return g;
}

std::function<double(double, double)> q_of(const SteadyStateModel& m) {
    return [&m](double r, double u) { return m.Q(r, u); };
}

double stddev(const std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()), s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / double(v.size() - 1));
}

}  // namespace

TEST_CASE("sampling: mass, determinism, Monte-Carlo scaling") {
    const SteadyStateModel& m = king();
    ParticleEnsemble a = sample_particles(q_of(m), grid(), 10000, 3), b = sample_particles(q_of(m), grid(), 10000, 3);
    CHECK(std::abs(a.mass() - m.mass) <= m.mass / std::sqrt(10000.0));
    REQUIRE(a.size() == b.size());
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i) same = same && a.x[i] == b.x[i] && a.vx[i] == b.vx[i] && a.vy[i] == b.vy[i] && a.w[i] == b.w[i];
    CHECK(same);

    // binned density: equal weights summing to the grid mass
    PhaseSpaceDensity Q = phase_space_density(m, grid());
    ParticleEnsemble e = sample_particles(Q, 20000, 1);
    CHECK(e.mass() == doctest::Approx(Q.mass()).epsilon(1e-12));
    CHECK(e.w.front() == e.w.back());

    std::vector<double> m1, m2;
    for (std::uint64_t s = 0; s < 24; ++s) {
        m1.push_back(sample_particles(q_of(m), grid(), 10000, 100 + s).mass());
        m2.push_back(sample_particles(q_of(m), grid(), 20000, 200 + s).mass());
    }
    double ratio = stddev(m1) / stddev(m2);
    CHECK(ratio > 1.0);
    CHECK(ratio < 2.5);

    CHECK_THROWS_AS(sample_particles(q_of(m), grid(), 5000, 1), std::invalid_argument);
    PhaseSpaceDensity zero = Q;
    std::fill(zero.f.begin(), zero.f.end(), 0.0);
    CHECK_THROWS_AS(sample_particles(zero, 10000, 1), DegenerateInput);
}

TEST_CASE("quiet start: copies share the seed measure") {
    const SteadyStateModel& m = king();
    ParticleEnsemble p = sample_particles(q_of(m), grid(), m, 16000, 16, 4);
    CHECK(p.size() == 16000);
    CHECK(std::abs(p.mass() - m.mass) <= m.mass / std::sqrt(16000.0));
    // each copy of an orbit keeps the energy and l of its seed
    for (std::size_t i = 0; i < 16; ++i) {
        double e0 = 0.5 * p.speed2(0) + m.phi(p.r(0)), e = 0.5 * p.speed2(i) + m.phi(p.r(i));
        CHECK(e == doctest::Approx(e0).epsilon(1e-12));
        CHECK(p.l(i) == doctest::Approx(p.l(0)).epsilon(1e-12));
        CHECK(p.measure(i) == doctest::Approx(p.measure(0)).epsilon(1e-12));
    }
    ParticleEnsemble one = sample_particles(q_of(m), grid(), m, 10000, 1, 4), plain = sample_particles(q_of(m), grid(), 10000, 4);
    CHECK(one.x == plain.x);
    CHECK_THROWS_AS(sample_particles(q_of(m), grid(), m, 10000, 0, 4), std::invalid_argument);
}

TEST_CASE("deposited field reproduces phi_Q") {
    const SteadyStateModel& m = king();
    ParticleEnsemble p = sample_particles(q_of(m), grid(), 200000, 8);
    FieldSolver fs(2.0 * m.support_radius, 400);
    fs.deposit(p, 2);
    for (double x : {0.1, 0.3, 0.6, 0.9, 1.5}) {
        double r = x * m.support_radius;
        CHECK(fs.force(r) == doctest::Approx(-m.phi.derivative(r)).epsilon(2e-3));
    }
    CHECK(fs.potential_energy() == doctest::Approx(-2.0 * m.kinetic).epsilon(2e-3));
    // force is continuous across cell edges
    double d = 2.0 * m.support_radius / 400.0, r = 100.0 * d;
    CHECK(std::abs(fs.force(r + 1e-9) - fs.force(r - 1e-9)) < 1e-6);
}

TEST_CASE("Kepler orbit in the frozen exterior field") {
    const SteadyStateModel& m = king();
    const double r0 = 3.0 * m.support_radius, GM = m.mass / (4.0 * M_PI);
    // eccentric orbit staying outside the support: apocentre r0, pericentre r0 / 2
    const double a = 0.75 * r0, vt = std::sqrt(GM * (2.0 / r0 - 1.0 / a));
    const double period = 2.0 * M_PI * std::sqrt(a * a * a / GM);
    ParticleEnsemble p;
    p.push_back(r0, 0.0, r0 * r0 * vt * vt, 1e-6, 1.0);
    const double e0 = 0.5 * vt * vt + m.phi(r0), l0 = p.l(0);

    EvolveOptions o;
    o.self_consistent = false;
    o.r_max_factor = 10.0;
    o.T = period;
    o.cadence = period / 16.0;
    o.dt = o.cadence / 4000.0;
    o.shift_diagnostic = false;
    TrajectoryDiagnostics d = evolve(p, m, o);
    CHECK_FALSE(d.aborted);
    for (double H : d.H) CHECK(std::abs(H / 1e-6 - e0) <= 1e-8 * std::abs(e0));
    CHECK(std::abs(p.l(0) - l0) <= 1e-8 * l0);
    // the orbit closes
    CHECK(std::hypot(p.x[0] - r0, p.y[0]) <= 1e-5 * r0);
    CHECK(conservation_report(d, 1e-6, 1e-8, 1e-10).pass);
}

TEST_CASE("time reversibility in the frozen field") {
    const SteadyStateModel& m = king();
    ParticleEnsemble p = sample_particles(q_of(m), grid(), 10000, 5), start = p;
    EvolveOptions o;
    o.self_consistent = false;
    o.dt = 0.02 * m.dynamical_time();
    o.T = 100.0 * o.dt;
    o.cadence = o.T;
    o.shift_diagnostic = false;
    evolve(p, m, o);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.vx[i] = -p.vx[i];
        p.vy[i] = -p.vy[i];
    }
    evolve(p, m, o);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        worst = std::max({worst, std::abs(p.x[i] - start.x[i]), std::abs(p.y[i] - start.y[i]),
                          std::abs(p.vx[i] + start.vx[i]), std::abs(p.vy[i] + start.vy[i])});
    CHECK(worst <= 1e-6);
}

TEST_CASE("second order: halving dt cuts the energy error by four") {
    const SteadyStateModel& m = king();
    auto drift = [&](double frac) {
        ParticleEnsemble p = sample_particles(q_of(m), grid(), 10000, 6);
        EvolveOptions o;
        o.self_consistent = false;
        o.dt = frac * m.dynamical_time();
        o.T = 2.0 * m.dynamical_time();
        o.cadence = 0.04 * m.dynamical_time();
        o.shift_diagnostic = false;
        return conservation_report(evolve(p, m, o)).energy_drift;
    };
    double ratio = drift(0.01) / drift(0.005);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("self-consistent run conserves mass, Casimirs and H") {
    const SteadyStateModel& m = king();
    ParticleEnsemble p = sample_particles(q_of(m), grid(), m, 20000, 16, 7);
    EvolveOptions o;
    o.dt = 0.02 * m.dynamical_time();
    o.T = 2.0 * m.dynamical_time();
    o.cadence = m.dynamical_time();
    TrajectoryDiagnostics d = evolve(p, m, o);
    ConservationReport c = conservation_report(d);
    CHECK(c.mass_drift == 0.0);
    CHECK(c.casimir_drift <= 1e-12);
    CHECK(c.energy_drift <= 1e-3);
    CHECK(c.pass);
    CHECK(d.reflections == 0);
    for (const Vec3& z : d.z) CHECK(std::abs(z[0]) + std::abs(z[1]) + std::abs(z[2]) < 1e-8);
    CHECK(d.distance.front() <= 1e-3 * (m.mass + 2.0 * m.kinetic));

    // precondition and negative tests
    o.dt = 0.2 * m.dynamical_time();
    CHECK_THROWS_AS(evolve(p, m, o), std::invalid_argument);
    o.dt = 0.02 * m.dynamical_time();
    o.cadence = 0.7 * m.dynamical_time();
    CHECK_THROWS_AS(evolve(p, m, o), std::invalid_argument);
}

TEST_CASE("large dt raises the fail flag") {
    const SteadyStateModel& m = king();
    ParticleEnsemble p = sample_particles(q_of(m), grid(), 10000, 8);
    EvolveOptions o;
    o.dt = 0.1 * m.dynamical_time();
    o.T = 5.0 * m.dynamical_time();
    o.cadence = 0.5 * m.dynamical_time();
    o.shift_diagnostic = false;
    CHECK_FALSE(conservation_report(evolve(p, m, o), 1e-6, 1e-4).pass);
    // a spike threshold below the step error aborts the run
    ParticleEnsemble q = sample_particles(q_of(m), grid(), 10000, 8);
    o.energy_spike = 1e-7;
    TrajectoryDiagnostics d = evolve(q, m, o);
    CHECK(d.aborted);
    CHECK(d.message.find("energy spike") != std::string::npos);
    CHECK_FALSE(conservation_report(d).pass);
}

TEST_CASE("orbital distance of a bump") {
    const SteadyStateModel& m = king();
    const double norm = m.mass + 2.0 * m.kinetic;
    for (double eta : {0.01, 0.02}) {
        double amp = amplitude_for_size(m, eta, 7);
        ParticleEnsemble p = sample_particles(perturbation_function(m, Perturbation::amplitude, amp, 7), grid(), 100000, 9);
        CHECK(orbital_distance(p, m) == doctest::Approx(eta * norm).epsilon(0.2));
    }
    CHECK(amplitude_for_size(m, 0.0, 7) == 0.0);
    CHECK_THROWS_AS(amplitude_for_size(m, 0.9, 7), std::invalid_argument);

    // binned form: Q on its own grid gives zero, a bump gives its weighted mass
    PhaseSpaceGrid g = make_grids(1.25 * m.support_radius, 64, 1.25 * m.escape_speed(), 32);
    PhaseSpaceDensity Q;
    Q.grid = g;
    Q.f.assign(g.cells(), 0.0);
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) Q.at(i, j) = m.Q(g.radial.nodes[i], g.speeds.nodes[j]);
    CHECK(orbital_distance(Q, m) == doctest::Approx(0.0).epsilon(1e-12));
    PhaseSpaceDensity B = Q;
    B.at(10, 5) += 0.01;
    CHECK(orbital_distance(B, m) == doctest::Approx(0.01 * g.weight(10, 5) * (1.0 + g.mean_u2(5))).epsilon(1e-9));
}

TEST_CASE("checkpoint round trip and CSV") {
    const SteadyStateModel& m = king();
    ParticleEnsemble p = sample_particles(q_of(m), grid(), 10000, 10);
    p.time = 1.25;
    const std::string path = "test_evolver_checkpoint.bin";
    write_checkpoint(path, p);
    ParticleEnsemble q = read_checkpoint(path);
    REQUIRE(q.size() == p.size());
    CHECK(q.time == 1.25);
    for (std::size_t i = 0; i < p.size(); i += 97) {
        CHECK(q.r(i) == doctest::Approx(p.r(i)).epsilon(1e-14));
        CHECK(q.v_r(i) == doctest::Approx(p.v_r(i)).epsilon(1e-12));
        CHECK(q.l(i) == doctest::Approx(p.l(i)).epsilon(1e-12));
        CHECK(q.w[i] == p.w[i]);
        CHECK(q.f0[i] == p.f0[i]);
    }
    {
        std::ifstream is(path, std::ios::binary | std::ios::ate);
        CHECK(std::size_t(is.tellg()) == 16 + 40 * p.size());
    }
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write("\x05\0\0\0\0\0\0\0", 8);
    }
    CHECK_THROWS_AS(read_checkpoint(path), std::runtime_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_checkpoint("no/such/file.bin"), std::runtime_error);

    TrajectoryDiagnostics d;
    d.t = {0.0, 1.0};
    d.H = {-5.0, -5.0};
    d.mass = {9.0, 9.0};
    d.casimir_s2 = d.casimir_min = d.distance = d.binned_distance = {0.0, 0.1};
    d.z = {Vec3{0, 0, 0}, Vec3{0, 0, 0}};
    std::ostringstream os;
    write_diagnostics_csv(os, d, "abc");
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "# abc");
    std::getline(is, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 9);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 2);
}
