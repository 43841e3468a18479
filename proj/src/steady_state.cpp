#include "vps/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace vps {

namespace {

// sum_k W^{k+a} Gamma(a) / Gamma(k+a+1) starting at k = k0
double king_series(double W, double a, int k0) {
    if (W <= 0.0) return 0.0;
    double t = std::pow(W, a) * boost::math::tgamma(a) / boost::math::tgamma(a + 1.0);
    for (int k = 1; k <= k0; ++k) t *= W / (k + a);
    double s = 0.0;
    for (int k = k0; k < 400; ++k) {
        s += t;
        t *= W / (k + 1 + a);
        if (t < 1e-18 * s) break;
    }
    return s;
}

double radial_integral(const std::function<double(double)>& f, double R, std::size_t panels = 128) {
    double s = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        double a = R * double(p) / double(panels), b = R * double(p + 1) / double(panels);
        s += gauss_integrate(f, a, b, 10);
    }
    return s;
}

}  // namespace

double ProfileF::evaluate(double e) const {
    if (e >= e0) return 0.0;
    if (kind == Kind::polytrope) return amplitude * std::pow(e0 - e, q);
    return amplitude * std::expm1(e0 - e);
}

double ProfileF::derivative(double e) const {
    if (e >= e0) return 0.0;
    if (kind == Kind::polytrope) return -amplitude * q * std::pow(e0 - e, q - 1.0);
    return -amplitude * std::exp(e0 - e);
}

double ProfileF::rho_of_depth(double W) const {
    if (W <= 0.0) return 0.0;
    const double c = 4.0 * pi * sqrt2 * amplitude;
    if (kind == Kind::polytrope) return c * boost::math::beta(q + 1.0, 1.5) * std::pow(W, q + 1.5);
    return c * king_series(W, 1.5, 1);
}

double ProfileF::veff_of_depth(double W) const {
    if (W <= 0.0) return 0.0;
    const double c = 4.0 * pi * sqrt2 * amplitude;
    if (kind == Kind::polytrope) return c * q * boost::math::beta(q, 1.5) * std::pow(W, q + 0.5);
    return c * king_series(W, 1.5, 0);
}

double ProfileF::kinetic_of_depth(double W) const {
    if (W <= 0.0) return 0.0;
    const double c = 4.0 * pi * sqrt2 * amplitude;
    if (kind == Kind::polytrope) return c * boost::math::beta(q + 1.0, 2.5) * std::pow(W, q + 2.5);
    return c * king_series(W, 2.5, 1);
}

DensityQuadrature density_quadrature(const ProfileF& F, double phi, std::size_t) {
    DensityQuadrature out;
    const double W = F.e0 - phi;
    if (W <= 0.0) return out;
    boost::math::quadrature::tanh_sinh<double> ts;
    // e = phi + W x
    auto f_form = [&](double x, double xc) {
        double one_minus = xc > 0.0 ? xc : 1.0 - x;
        double Fv = F.kind == ProfileF::Kind::polytrope ? F.amplitude * std::pow(W * one_minus, F.q)
                                                        : F.amplitude * std::expm1(W * one_minus);
        return Fv * std::sqrt(W * x);
    };
    auto fp_form = [&](double x, double xc) {
        double one_minus = xc > 0.0 ? xc : 1.0 - x;
        double dF = F.kind == ProfileF::Kind::polytrope ? F.amplitude * F.q * std::pow(W * one_minus, F.q - 1.0)
                                                         : F.amplitude * std::exp(W * one_minus);
        return dF * std::pow(W * x, 1.5);
    };
    out.f_form = 4.0 * pi * sqrt2 * W * ts.integrate(f_form, 0.0, 1.0);
    out.fprime_form = 8.0 * pi * sqrt2 / 3.0 * W * ts.integrate(fp_form, 0.0, 1.0);
    return out;
}

double density_from_potential(const ProfileF& F, double phi) {
    if (phi >= 0.0) throw std::domain_error("density requires a negative potential value");
    return density_quadrature(F, phi).f_form;
}

EmdenSolution solve_emden(const std::function<double(double)>& g, double dg0, double psi0, std::size_t steps,
                          double h_guess) {
    if (steps < 16) throw std::invalid_argument("too few integration steps");
    const double g0 = g(psi0);
    if (!(g0 >= 0.0)) throw std::invalid_argument("source must be nonnegative");

    auto series = [&](double r, double& p, double& dp) {
        p = psi0 - g0 * r * r / 6.0 + g0 * dg0 * std::pow(r, 4) / 120.0;
        dp = -g0 * r / 3.0 + g0 * dg0 * std::pow(r, 3) / 30.0;
    };
    // returns true when psi crosses zero; fills arrays up to the first node with psi <= 0
    auto run = [&](double h, std::size_t max_steps, EmdenSolution& s) {
        s.r.assign(1, 0.0);
        s.psi.assign(1, psi0);
        s.dpsi.assign(1, 0.0);
        for (int k = 1; k <= 2; ++k) {
            double p, dp;
            series(k * h, p, dp);
            s.r.push_back(k * h);
            s.psi.push_back(p);
            s.dpsi.push_back(dp);
        }
        auto rhs = [&](double r, double p, double dp, double& a, double& b) {
            a = dp;
            b = -g(std::max(p, 0.0)) - 2.0 * dp / r;
        };
        double p = s.psi.back(), dp = s.dpsi.back();
        for (std::size_t k = 2; k < max_steps; ++k) {
            double r = double(k) * h;
            double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
            rhs(r, p, dp, k1a, k1b);
            rhs(r + 0.5 * h, p + 0.5 * h * k1a, dp + 0.5 * h * k1b, k2a, k2b);
            rhs(r + 0.5 * h, p + 0.5 * h * k2a, dp + 0.5 * h * k2b, k3a, k3b);
            rhs(r + h, p + h * k3a, dp + h * k3b, k4a, k4b);
            p += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
            dp += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
            s.r.push_back(double(k + 1) * h);
            s.psi.push_back(p);
            s.dpsi.push_back(dp);
            if (p <= 0.0) return true;
        }
        return false;
    };
    auto crossing = [](const EmdenSolution& s) {
        std::size_t k = s.r.size() - 2;
        double a = s.r[k], b = s.r[k + 1];
        auto f = [&](double x) { return Hermite::value(s.r[k], s.r[k + 1], s.psi[k], s.psi[k + 1], s.dpsi[k], s.dpsi[k + 1], x); };
        for (int it = 0; it < 200; ++it) {
            double c = 0.5 * (a + b);
            if (f(c) > 0.0) a = c; else b = c;
        }
        return 0.5 * (a + b);
    };

    double h = h_guess > 0.0 ? h_guess : std::sqrt(6.0 * psi0 / std::max(g0, 1e-300)) / double(steps);
    EmdenSolution s;
    if (!run(h, 2000 * steps, s)) throw std::runtime_error("solution did not reach zero: infinite extent");
    double R = crossing(s);
    for (int pass = 0; pass < 2; ++pass) {
        h = R / double(steps);
        if (!run(h, steps + 8, s)) throw std::runtime_error("solution did not reach zero on refinement");
        R = crossing(s);
    }
    h = R / double(steps);
    run(h, steps + 8, s);
    if (s.r.size() < steps + 1) throw std::runtime_error("solution crossed zero early on the final pass");
    s.r.resize(steps + 1);
    s.psi.resize(steps + 1);
    s.dpsi.resize(steps + 1);
    s.r[steps] = R;
    s.psi[steps] = 0.0;
    s.radius = R;
    return s;
}

EmdenSolution solve_lane_emden(double n, std::size_t steps) {
    if (n == 0.0) return solve_emden([](double) { return 1.0; }, 0.0, 1.0, steps);
    return solve_emden([n](double t) { return t > 0.0 ? std::pow(t, n) : 0.0; }, n, 1.0, steps);
}

namespace {

Potential tabulate(const std::vector<double>& r_in, const std::vector<double>& psi, const std::vector<double>& dpsi,
                   double e0, double mass, double r_max_factor) {
    const std::size_t N = r_in.size() - 1;
    const double R = r_in[N];
    const double h = R / double(N);
    std::size_t total = std::size_t(std::ceil(r_max_factor * double(N)));
    std::vector<double> r(total + 1), p(total + 1), d(total + 1);
    for (std::size_t k = 0; k <= N; ++k) {
        r[k] = r_in[k];
        p[k] = e0 - psi[k];
        d[k] = -dpsi[k];
    }
    for (std::size_t k = N + 1; k <= total; ++k) {
        r[k] = double(k) * h;
        p[k] = -mass / (4.0 * pi * r[k]);
        d[k] = mass / (4.0 * pi * r[k] * r[k]);
    }
    return Potential(std::move(r), std::move(p), std::move(d), mass);
}

}  // namespace

SteadyStateModel assemble_model(const ProfileF& F, Potential phi, double parameter, std::size_t steps) {
    SteadyStateModel m;
    m.profile = F;
    m.phi = std::move(phi);
    m.parameter = parameter;
    m.steps = steps;
    m.mass = m.phi.mass();
    m.depth = F.e0 - m.phi.min();
    m.support_radius = m.phi.inverse(F.e0);
    const double R = m.support_radius;
    const double e0 = F.e0;
    const Potential& P = m.phi;
    m.L0 = 8.0 * pi * sqrt2 / 3.0 * 4.0 * pi * gauss_integrate_sqrt_end(
        [&](double r) { return std::pow(std::max(0.0, e0 - P(r)), 1.5) * r * r; }, 0.0, R, 200);
    m.kinetic = 4.0 * pi * radial_integral([&](double r) { return F.kinetic_of_depth(e0 - P(r)) * r * r; }, R);
    m.field_energy = 0.5 * m.phi.gradient_norm2();
    m.hamiltonian = m.kinetic - m.field_energy;
    m.central_density = F.rho_of_depth(m.depth);
    return m;
}

SteadyStateModel build_polytrope(double q, double depth, const BuildOptions& opt) {
    if (!(q > 0.0 && q < 3.5)) throw std::invalid_argument("polytrope exponent must satisfy 0 < q < 7/2");
    if (!(depth > 0.0)) throw std::invalid_argument("central potential depth must be positive");
    const double n = q + 1.5;
    EmdenSolution le = solve_lane_emden(n, opt.steps);
    const double c = 4.0 * pi * sqrt2 * boost::math::beta(q + 1.0, 1.5);
    const double alpha = 1.0 / std::sqrt(c * std::pow(depth, n - 1.0));
    const double xi1 = le.radius;
    const double R = alpha * xi1;
    const double M = 4.0 * pi * alpha * depth * xi1 * xi1 * std::abs(le.dpsi.back());
    const double e0 = -M / (4.0 * pi * R);
    std::vector<double> r(le.r.size()), psi(le.r.size()), dpsi(le.r.size());
    for (std::size_t k = 0; k < le.r.size(); ++k) {
        r[k] = alpha * le.r[k];
        psi[k] = depth * le.psi[k];
        dpsi[k] = depth * le.dpsi[k] / alpha;
    }
    ProfileF F;
    F.kind = ProfileF::Kind::polytrope;
    F.q = q;
    F.amplitude = 1.0;
    F.e0 = e0;
    return assemble_model(F, tabulate(r, psi, dpsi, e0, M, opt.r_max_factor), q, opt.steps);
}

SteadyStateModel build_king(double W0, const BuildOptions& opt) {
    if (!(W0 > 0.0)) throw std::invalid_argument("King depth W0 must be positive");
    ProfileF F;
    F.kind = ProfileF::Kind::king;
    F.amplitude = 1.0;
    EmdenSolution s = solve_emden([&F](double W) { return F.rho_of_depth(W); }, F.veff_of_depth(W0), W0, opt.steps);
    const double R = s.radius;
    const double M = 4.0 * pi * R * R * (-s.dpsi.back());
    F.e0 = -M / (4.0 * pi * R);
    return assemble_model(F, tabulate(s.r, s.psi, s.dpsi, F.e0, M, opt.r_max_factor), W0, opt.steps);
}

double SteadyStateModel::escape_speed() const { return std::sqrt(2.0 * (profile.e0 - phi.min())); }

double SteadyStateModel::dynamical_time() const { return 2.0 * pi / std::sqrt(central_density / 3.0); }

double check_steady_state(const Potential& phi, const std::function<double(double)>& rho, double r_eval,
                          std::size_t n_eval) {
    double rho_max = 0.0, res = 0.0;
    std::vector<double> lap(n_eval), rv(n_eval);
    const double dr = r_eval / double(n_eval);
    for (std::size_t i = 0; i < n_eval; ++i) {
        double r = (double(i) + 0.5) * dr;
        double d = 5e-4 * r;
        double a = r - d, b = r + d;
        double L = (b * b * phi.derivative(b) - a * a * phi.derivative(a)) / (2.0 * d) / (r * r);
        double p = rho(r);
        rho_max = std::max(rho_max, p);
        lap[i] = L;
        rv[i] = p;
    }
    if (rho_max <= 0.0) return 0.0;
    for (std::size_t i = 0; i < n_eval; ++i) res = std::max(res, std::abs(lap[i] - rv[i]));
    return res / rho_max;
}

double check_steady_state(const SteadyStateModel& m) {
    return check_steady_state(m.phi, [&m](double r) { return m.rho(r); }, m.phi.r_max());
}

double PhaseSpaceDensity::mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.n_r(); ++i)
        for (std::size_t j = 0; j < grid.n_u(); ++j) s += at(i, j) * grid.weight(i, j);
    return s;
}

double PhaseSpaceDensity::sup() const { return f.empty() ? 0.0 : *std::max_element(f.begin(), f.end()); }

bool PhaseSpaceDensity::same_grid(const PhaseSpaceDensity& g) const {
    return grid.radial.edges == g.grid.radial.edges && grid.speeds.edges == g.grid.speeds.edges;
}

double PhaseSpaceDensity::l1_distance(const PhaseSpaceDensity& g) const {
    if (!same_grid(g)) throw std::invalid_argument("densities live on different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < grid.n_r(); ++i)
        for (std::size_t j = 0; j < grid.n_u(); ++j) s += std::abs(at(i, j) - g.at(i, j)) * grid.weight(i, j);
    return s;
}

PhaseSpaceGrid default_phase_grid(const SteadyStateModel& m, std::size_t n_r, std::size_t n_u, double margin,
                                  Spacing spacing) {
    return make_grids(margin * m.support_radius, n_r, margin * m.escape_speed(), n_u, spacing);
}

PhaseSpaceDensity phase_space_density(const SteadyStateModel& m, const PhaseSpaceGrid& grid) {
    PhaseSpaceDensity d;
    d.grid = grid;
    d.f.assign(grid.cells(), 0.0);
    for (std::size_t i = 0; i < grid.n_r(); ++i) {
        double p = m.phi(grid.radial.nodes[i]);
        for (std::size_t j = 0; j < grid.n_u(); ++j) {
            double u = grid.speeds.nodes[j];
            d.at(i, j) = m.profile.evaluate(0.5 * u * u + p);
        }
    }
    d.truncated = grid.radial.r_max < m.support_radius || grid.speeds.r_max < m.escape_speed();
    return d;
}

}  // namespace vps
