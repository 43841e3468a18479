#include "vps/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include "vps/antonov.hpp"
#include "vps/evolver.hpp"
#include "vps/functionals.hpp"
#include "vps/rearrangement.hpp"

namespace vps {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

double fixed_point_error(const SteadyStateModel& m, const JacobianMap& a, std::size_t n_r, std::size_t n_u) {
    PhaseSpaceGrid g = default_phase_grid(m, n_r, n_u);
    PhaseSpaceDensity Q = phase_space_density(m, g);
    PhaseSpaceDensity R = generalized_rearrangement(schwarz_rearrangement(distribution_function_linear(Q)), a, g);
    return Q.l1_distance(R) / Q.mass();
}

json histogram(const std::vector<double>& v, std::size_t bins) {
    double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    if (hi <= lo) hi = lo + 1.0;
    std::vector<std::size_t> count(bins, 0);
    for (double x : v) count[std::min(bins - 1, std::size_t((x - lo) / (hi - lo) * double(bins)))]++;
    std::vector<double> edges(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) edges[k] = lo + (hi - lo) * double(k) / double(bins);
    return {{"edges", edges}, {"counts", count}};
}

}  // namespace

SuiteResult fixed_point_suite(const SteadyStateModel& m, std::size_t n_r, std::size_t n_u) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "fixedpoint";
    JacobianMap a = jacobian_a(m.phi);
    double e1 = fixed_point_error(m, a, n_r, n_u);
    double t1 = since(t0);
    double e2 = fixed_point_error(m, a, 2 * n_r, 2 * n_u);
    s.seconds = since(t0);
    s.pass = e1 <= 1e-3 && e2 <= e1 / 3.0 && t1 <= 10.0;
    s.details = {{"model", m.kind()}, {"n_r", n_r}, {"n_u", n_u}, {"relative_l1", e1}, {"relative_l1_refined", e2},
                 {"refinement_gain", e1 / e2}, {"seconds_default", t1}};
    s.summary = m.kind() + " rel L1 " + fmt("%.2e", e1) + ", refined " + fmt("%.2e", e2) + " (gain " +
                fmt("%.1f", e1 / e2) + "), " + fmt("%.1f s", t1);
    return s;
}

SuiteResult monotonicity_suite(const SteadyStateModel& m, std::size_t seeds, std::uint64_t seed0) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "monotonicity";
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    const double tol = 10.0 * quadrature_self_error(m, g);
    MonotonicityReport q = monotonicity_gaps(phase_space_density(m, g));
    bool ok = q.gap1 >= -tol && q.gap2 >= -tol && q.gap1 <= tol && q.gap2 <= tol;
    std::mt19937_64 rng(seed0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> g1, g2;
    std::size_t fails = 0;
    const Perturbation fam[3] = {Perturbation::amplitude, Perturbation::scramble, Perturbation::squeeze};
    for (std::size_t k = 0; k < seeds; ++k) {
        double eps = std::pow(10.0, -2.5 + 2.0 * U(rng));
        MonotonicityReport r = monotonicity_gaps(perturb(m, g, fam[k % 3], eps, seed0 + k));
        g1.push_back(r.gap1 / tol);
        g2.push_back(r.gap2 / tol);
        if (r.gap1 < -tol || r.gap2 < -tol) ++fails;
    }
    s.seconds = since(t0);
    s.pass = ok && fails == 0 && s.seconds <= 120.0;
    s.details = {{"tol", tol},
                 {"Q_gap1", q.gap1},
                 {"Q_gap2", q.gap2},
                 {"seeds", seeds},
                 {"violations", fails},
                 {"min_gap1_over_tol", *std::min_element(g1.begin(), g1.end())},
                 {"min_gap2_over_tol", *std::min_element(g2.begin(), g2.end())},
                 {"gap1_over_tol_histogram", histogram(g1, 10)},
                 {"gap2_over_tol_histogram", histogram(g2, 10)}};
    s.summary = std::to_string(seeds) + " perturbations, " + std::to_string(fails) + " violations; Q gaps " +
                fmt("%.1e", q.gap1) + ", " + fmt("%.1e", q.gap2) + " (tol " + fmt("%.1e", tol) + "), " +
                fmt("%.1f s", s.seconds);
    return s;
}

SuiteResult equimeasurability_suite(const SteadyStateModel& m, std::uint64_t seed) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "equimeasurability";
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    PhaseSpaceDensity f = perturb(m, g, Perturbation::amplitude, 0.2, seed);
    PotentialX phi = density_potential(f);
    JacobianMap a = jacobian_a(phi.phi);
    DistributionFunction mu_lin = distribution_function_linear(f);
    MonotoneRearrangement fs = schwarz_rearrangement(mu_lin);
    DistributionFunction mu_r = distribution_function(generalized_rearrangement(fs, a, g));
    double worst = 0.0;
    std::size_t bad = 0;
    for (int k = 0; k < 50; ++k) {
        double lvl = fs.sup() * (k + 0.5) / 50.0;
        double e = pseudo_inverse_level(fs, a, lvl);
        double res = straddle_measure(g, phi.phi, e), diff = std::abs(mu_r(lvl) - mu_lin(lvl));
        worst = std::max(worst, diff / res);
        if (diff > res) ++bad;
    }
    // discrete bathtub on equal-volume cells: identical level sets
    PhaseSpaceGrid ge = default_phase_grid(m, 200, 100, 1.25, Spacing::equal_volume);
    PhaseSpaceDensity fe = perturb(m, ge, Perturbation::amplitude, 0.2, seed);
    PhaseSpaceDensity b = bathtub_rearrangement(fe, density_potential(fe));
    DistributionFunction mf = distribution_function(fe), mb = distribution_function(b);
    bool exact = mf.levels == mb.levels;
    double cell_dev = 0.0;
    for (std::size_t k = 0; exact && k < mf.measures.size(); ++k)
        cell_dev = std::max(cell_dev, std::abs(mf.measures[k] - mb.measures[k]) / mf.measures[k]);
    exact = exact && cell_dev <= 1e-12;
    s.seconds = since(t0);
    s.pass = bad == 0 && exact;
    s.details = {{"levels", 50}, {"violations", bad}, {"worst_diff_over_resolution", worst},
                 {"bathtub_levels_equal", mf.levels == mb.levels}, {"bathtub_max_relative_measure_dev", cell_dev}};
    s.summary = "50 levels, worst |dmu|/resolution " + fmt("%.2f", worst) + "; bathtub max rel dev " +
                fmt("%.1e", cell_dev);
    return s;
}

SuiteResult taylor_suite(const SteadyStateModel& m) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "taylor";
    const double R = m.support_radius;
    std::vector<std::pair<std::string, std::function<double(double)>>> dirs{
        {"cos(3r)", [](double r) { return std::cos(3.0 * r); }},
        {"exp(-r^2)", [](double r) { return std::exp(-r * r); }},
        {"(r/R)^2", [R](double r) { return std::min(1.0, (r / R) * (r / R)); }},
        {"1-r/R", [R](double r) { return std::max(0.0, 1.0 - r / R); }},
        {"sin(5r/R)", [R](double r) { return std::sin(5.0 * r / R); }}};
    const std::vector<double> eps{1e-1, 3e-2, 1e-2, 3e-3};
    s.pass = true;
    double worst_h = 0.0, worst_slope = 0.0;
    json rows = json::array();
    for (auto& [name, p] : dirs) {
        TaylorReport t = taylor_remainder(m, taylor_direction(m, p), eps);
        std::vector<double> as;
        bool mono = true;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            as.push_back(std::abs(t.slope[i]));
            if (i > 0 && std::abs(t.remainder[i]) >= std::abs(t.remainder[i - 1])) mono = false;
        }
        double slope = loglog_slope(eps, as), hdev = std::abs(t.hessian / t.hessian_fd - 1.0);
        bool ok = mono && std::abs(slope - 1.0) <= 0.1 && hdev <= 0.02;
        s.pass = s.pass && ok;
        worst_h = std::max(worst_h, hdev);
        worst_slope = std::max(worst_slope, std::abs(slope - 1.0));
        rows.push_back({{"direction", name}, {"slope_order", slope}, {"remainder_over_eps2", t.remainder},
                        {"remainder_monotone", mono}, {"hessian", t.hessian}, {"hessian_fd", t.hessian_fd}, {"pass", ok}});
    }
    s.seconds = since(t0);
    s.details = {{"eps", eps}, {"directions", rows}};
    s.summary = "5 directions, worst |order - 1| " + fmt("%.3f", worst_slope) + ", worst Hessian dev " +
                fmt("%.2e", worst_h) + (s.pass ? "" : ", remainder not monotone or out of tolerance");
    return s;
}

SuiteResult spectrum_suite(const SteadyStateModel& m) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "spectrum";
    SpectralReport s1 = harmonic_operator_spectrum(m, 1, 2);
    double kernel = std::abs(s1.eigenvalues[0]) / s1.potential_scale;
    bool ok = kernel <= 1e-3 && s1.kernel_cosine >= 0.999;
    json lowest;
    for (int k : {0, 2, 3}) {
        SpectralReport r = harmonic_operator_spectrum(m, k, 1);
        lowest[std::to_string(k)] = r.eigenvalues[0];
        ok = ok && r.eigenvalues[0] > 0.0;
    }
    CoercivityReport a = coercivity_constant(m);
    SpectralOptions fine;
    fine.n = 2 * fine.n;
    CoercivityReport b = coercivity_constant(m, fine);
    double drift = std::abs(a.c0 - b.c0) / b.c0;
    s.seconds = since(t0);
    s.pass = ok && a.positive && drift <= 0.05 && s.seconds <= 60.0;
    s.details = {{"k1_kernel_over_VQ", kernel}, {"k1_cosine", s1.kernel_cosine}, {"max_VQ", s1.potential_scale},
                 {"lowest", lowest}, {"c0", a.c0}, {"c0_refined", b.c0}, {"c0_relative_change", drift},
                 {"k0_min", a.k0_min}, {"k1_second", a.k1_second}, {"k2_min", a.k2_min}};
    s.summary = "k=1 |lambda|/max V_Q " + fmt("%.1e", kernel) + ", cos " + fmt("%.5f", s1.kernel_cosine) +
                "; lowest k=0,2,3 " + fmt("%.3g", lowest["0"].get<double>()) + ", " +
                fmt("%.3g", lowest["2"].get<double>()) + ", " + fmt("%.3g", lowest["3"].get<double>()) + "; c0 " +
                fmt("%.4f", a.c0) + " -> " + fmt("%.4f", b.c0) + ", " + fmt("%.1f s", s.seconds);
    return s;
}

SuiteResult hormander_suite(const SteadyStateModel& m, std::size_t samples, std::uint64_t seed) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "hormander";
    std::vector<HormanderSample> pts = hormander_samples(m, samples, seed);
    HormanderReport a = hormander_identity_check(m, pts), b = hormander_identity_check(m, pts, 2e-3);
    double ratio = b.max_residual / a.max_residual, order = std::log2(ratio);
    s.seconds = since(t0);
    s.pass = a.used == samples && a.max_residual <= 1e-4 && order >= 1.6 && order <= 2.4;
    s.details = {{"samples", samples}, {"used", a.used}, {"max_residual", a.max_residual},
                 {"max_residual_double_step", b.max_residual}, {"observed_order", order}};
    s.summary = "max residual " + fmt("%.2e", a.max_residual) + ", observed order " + fmt("%.2f", order);
    return s;
}

SuiteResult lower_bound_suite(const SteadyStateModel& m, double c0, std::size_t count, std::uint64_t seed0) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "lowerbound";
    if (c0 <= 0.0) c0 = coercivity_constant(m).c0;
    PhaseSpaceGrid g = default_phase_grid(m, 200, 100);
    const double tol = 10.0 * quadrature_self_error(m, g);
    std::mt19937_64 rng(seed0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Perturbation fam[3] = {Perturbation::amplitude, Perturbation::scramble, Perturbation::squeeze};
    PhaseSpaceDensity Q = phase_space_density(m, g);
    std::size_t fails = 0, unreliable = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
        double eps = 0.02 * (0.05 + 0.95 * U(rng));
        PhaseSpaceDensity f = perturb(m, g, fam[k % 3], eps, seed0 + k);
        LowerBoundReport r = stability_lower_bound(f, m, c0);
        worst = std::min(worst, r.slack / tol);
        if (r.slack < -tol) ++fails;
        if (!r.reliable) ++unreliable;
    }
    // exact translates of phi_Q
    double shift_err = 0.0;
    for (int k = 0; k < 5; ++k) {
        Vec3 z0{0.2 * m.support_radius * (U(rng) - 0.5), 0.2 * m.support_radius * (U(rng) - 0.5),
                0.2 * m.support_radius * (U(rng) - 0.5)};
        TranslatedField F;
        F.terms.push_back({m.phi, z0, 1.0});
        ShiftResult r = modulation_shift(F, m);
        shift_err = std::max(shift_err, std::hypot(r.z[0] - z0[0], r.z[1] - z0[1], r.z[2] - z0[2]));
    }
    s.seconds = since(t0);
    s.pass = fails == 0 && unreliable == 0 && shift_err <= 1e-4;
    s.details = {{"c0", c0}, {"tol", tol}, {"count", count}, {"violations", fails}, {"unreliable", unreliable},
                 {"min_slack_over_tol", worst}, {"max_shift_error", shift_err}};
    s.summary = std::to_string(count) + " perturbations <= 2%, " + std::to_string(fails) + " violations (min slack/tol " +
                fmt("%.2f", worst) + "); shift recovery " + fmt("%.1e", shift_err);
    return s;
}

SuiteResult stability_suite(const SteadyStateModel& m, const StabilityOptions& opt) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "stability";
    const double td = m.dynamical_time(), norm = m.mass + 2.0 * m.kinetic;
    PhaseSpaceGrid g = default_phase_grid(m, 400, 200);
    EvolveOptions eo;
    eo.dt = opt.dt * td;
    eo.T = opt.T * td;
    eo.cadence = opt.cadence * td;
    bool conserve = true;
    json runs = json::array();
    auto run = [&](double eta, std::size_t N) {
        double amp = amplitude_for_size(m, eta, opt.seed);
        ParticleEnsemble p =
            sample_particles(perturbation_function(m, Perturbation::amplitude, amp, opt.seed), g, m, N, opt.replicas, opt.seed);
        TrajectoryDiagnostics d = evolve(p, m, eo);
        ConservationReport c = conservation_report(d);
        bool ok = !d.aborted && c.mass_drift <= 1e-6 && c.energy_drift <= 1e-3;
        conserve = conserve && ok;
        runs.push_back({{"eta", eta}, {"N", N}, {"amplitude", amp}, {"mass_drift", c.mass_drift},
                        {"energy_drift", c.energy_drift}, {"casimir_drift", c.casimir_drift},
                        {"distance", d.distance}, {"reflections", d.reflections}});
        return d;
    };
    // growth of the steady-state distance between 5 t_dyn (after phase mixing) and T
    auto growth = [&](const TrajectoryDiagnostics& d) {
        std::size_t k5 = std::min(d.distance.size() - 1, std::size_t(std::llround(5.0 / opt.cadence)));
        return d.distance.back() - d.distance[k5];
    };
    TrajectoryDiagnostics d0 = run(0.0, opt.N);
    std::vector<double> maxd;
    for (double eta : opt.eta) {
        TrajectoryDiagnostics d = run(eta, opt.N);
        maxd.push_back(*std::max_element(d.distance.begin(), d.distance.end()));
    }
    double exponent = loglog_slope(opt.eta, maxd);
    bool grows = true;
    for (std::size_t k = 1; k < maxd.size(); ++k) grows = grows && maxd[k] > maxd[k - 1];
    TrajectoryDiagnostics dN = run(0.0, opt.noise_factor * opt.N);
    double g1 = growth(d0), g2 = growth(dN);
    double noise_order = g1 > 0.0 && g2 > 0.0 ? std::log(g1 / g2) / std::log(double(opt.noise_factor)) : 1.0;
    bool no_secular = g1 <= 0.0 || noise_order >= 0.25;
    s.seconds = since(t0);
    s.pass = conserve && exponent <= 1.3 && grows && no_secular && s.seconds <= 600.0;
    s.details = {{"dt_over_tdyn", opt.dt}, {"T_over_tdyn", opt.T}, {"replicas", opt.replicas}, {"norm", norm},
                 {"eta", opt.eta}, {"max_distance", maxd}, {"exponent", exponent}, {"monotone_in_eta", grows},
                 {"eta0_growth", g1}, {"eta0_growth_large_N", g2}, {"noise_order", noise_order}, {"runs", runs}};
    double hd = 0.0, md = 0.0;
    for (auto& r : runs) {
        hd = std::max(hd, r["energy_drift"].get<double>());
        md = std::max(md, r["mass_drift"].get<double>());
    }
    s.summary = "mass drift " + fmt("%.1e", md) + ", H drift " + fmt("%.1e", hd) + "; max-distance exponent " +
                fmt("%.2f", exponent) + (grows ? " (increasing)" : " (not increasing)") + "; eta=0 growth " +
                fmt("%.3f", g1) + " vs " + fmt("%.3f", g2) + " at " + std::to_string(opt.noise_factor) +
                "N, N-order " + fmt("%.2f", noise_order) + "; " + fmt("%.0f s", s.seconds);
    return s;
}

SuiteResult estimates_suite(const SteadyStateModel& m, std::size_t count, std::uint64_t seed0) {
    auto t0 = Clock::now();
    SuiteResult s;
    s.name = "estimates";
    EstimateConstants c = calibrate_estimates(m, default_phase_grid(m, 400, 200));
    std::size_t vi = 0, vs = 0;
    double wi = 0.0, ws = 0.0;
    std::mt19937_64 rng(seed0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    json fam = json::object();
    for (std::size_t k = 0; k < count; ++k) {
        RandomDensity d = random_density(seed0 + k);
        PhaseSpaceGrid g = make_grids(1.05 * d.r_max, 200, 1.05 * d.u_max, 100);
        PhaseSpaceDensity f = density_on_grid(d.f, g);
        double r = interpolation_terms(f).ratio() / c.interpolation;
        wi = std::max(wi, r);
        if (r > 1.0) ++vi;
        fam[d.family] = fam.value(d.family, 0) + 1;
        // pair: a small mixture towards another density, or an independent density on the same grid
        PhaseSpaceDensity h = density_on_grid(random_density(seed0 + 100000 + k).f, g);
        if (k % 2 == 0 || h.mass() == 0.0) {
            double eps = std::pow(10.0, -3.0 + 3.0 * U(rng)), sc = h.mass() > 0.0 ? f.mass() / h.mass() : 0.0;
            for (std::size_t q = 0; q < h.f.size(); ++q) h.f[q] = (1.0 - eps) * f.f[q] + eps * sc * h.f[q];
        }
        PotentialStability p = potential_stability(f, h, c);
        double q = p.lhs() / p.rhs();
        ws = std::max(ws, q);
        if (q > 1.0) ++vs;
    }
    s.seconds = since(t0);
    s.pass = vi == 0 && vs == 0;
    s.details = {{"C_interpolation", c.interpolation}, {"C_grad", c.grad}, {"C_sup", c.sup}, {"safety", c.safety},
                 {"count", count}, {"families", fam}, {"interpolation_violations", vi}, {"worst_interpolation_ratio", wi},
                 {"se_violations", vs}, {"worst_se_ratio", ws}};
    s.summary = std::to_string(count) + " densities: interpolation worst " + fmt("%.2f", wi) + " of C, " +
                std::to_string(vi) + " violations; se worst " + fmt("%.2f", ws) + " of bound, " + std::to_string(vs) +
                " violations";
    return s;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> n{"fixedpoint", "monotonicity", "equimeasurability", "taylor",   "spectrum",
                                            "hormander",  "lowerbound",   "stability",         "estimates"};
    return n;
}

SuiteResult run_suite(const std::string& name, const SteadyStateModel& m) {
    if (name == "fixedpoint") return fixed_point_suite(m);
    if (name == "monotonicity") return monotonicity_suite(m);
    if (name == "equimeasurability") return equimeasurability_suite(m);
    if (name == "taylor") return taylor_suite(m);
    if (name == "spectrum") return spectrum_suite(m);
    if (name == "hormander") return hormander_suite(m);
    if (name == "lowerbound") return lower_bound_suite(m);
    if (name == "stability") return stability_suite(m);
    if (name == "estimates") return estimates_suite(m);
    throw std::invalid_argument("unknown suite: " + name);
}

}  // namespace vps
