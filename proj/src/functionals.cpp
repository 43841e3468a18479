#include "vps/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>

#include "vps/antonov.hpp"

namespace vps {

namespace {

std::vector<double> potential_averages(const PotentialX& phi, const RadialGrid& grid) {
    if (phi.grid.edges == grid.edges) return phi.phi_avg;
    return cell_averages(phi.phi, grid);
}

double total_mass(const PhaseSpaceDensity& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.grid.n_r(); ++i)
        for (std::size_t j = 0; j < f.grid.n_u(); ++j) s += f.at(i, j) * f.grid.weight(i, j);
    return s;
}

}  // namespace

std::vector<double> spatial_density(const PhaseSpaceDensity& f) {
    const PhaseSpaceGrid& g = f.grid;
    std::vector<double> rho(g.n_r(), 0.0);
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.n_u(); ++j) s += f.at(i, j) * g.speeds.volumes[j];
        rho[i] = s;
    }
    return rho;
}

PotentialX density_potential(const PhaseSpaceDensity& f) { return solve_poisson_radial(f.grid.radial, spatial_density(f)); }

EnergyReport hamiltonian(const PhaseSpaceDensity& f, const PotentialX& phi_f) {
    const PhaseSpaceGrid& g = f.grid;
    EnergyReport e;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) {
            double v = f.at(i, j);
            if (v < -1e-12) throw std::invalid_argument("phase-space density must be nonnegative");
            double w = v * g.weight(i, j);
            e.kinetic += 0.5 * w * g.mean_u2(j);
            e.mass += w;
            e.sup = std::max(e.sup, v);
        }
    e.potential = -phi_f.field_energy;
    e.hamiltonian = e.kinetic + e.potential;
    return e;
}

EnergyReport hamiltonian(const PhaseSpaceDensity& f) {
    for (double v : f.f)
        if (v < -1e-12) throw std::invalid_argument("phase-space density must be nonnegative");
    if (!(total_mass(f) > 0.0)) return EnergyReport{};
    return hamiltonian(f, density_potential(f));
}

double transport_pairing(const PhaseSpaceDensity& f, const PhaseSpaceDensity& g, const PotentialX& phi) {
    if (!f.same_grid(g)) throw std::invalid_argument("densities live on different grids");
    const PhaseSpaceGrid& G = f.grid;
    std::vector<double> avg = potential_averages(phi, G.radial);
    double s = 0.0;
    for (std::size_t i = 0; i < G.n_r(); ++i)
        for (std::size_t j = 0; j < G.n_u(); ++j) {
            double d = f.at(i, j) - g.at(i, j);
            if (d != 0.0) s += (0.5 * G.mean_u2(j) + avg[i]) * d * G.weight(i, j);
        }
    return s;
}

MonotonicityReport monotonicity_gaps(const PhaseSpaceDensity& f) {
    if (!(total_mass(f) > 0.0)) throw DegenerateInput("monotonicity gaps need a nonzero density");
    MonotonicityReport out;
    PotentialX phi_f = density_potential(f);
    out.fhat = bathtub_rearrangement(f, phi_f);
    PotentialX phi_hat = density_potential(out.fhat);
    out.h_f = hamiltonian(f, phi_f).hamiltonian;
    out.h_hat = hamiltonian(out.fhat, phi_hat).hamiltonian;
    out.gap1 = transport_pairing(f, out.fhat, phi_f);
    std::vector<double> rf = spatial_density(f), rh = spatial_density(out.fhat);
    for (std::size_t i = 0; i < rf.size(); ++i) rf[i] -= rh[i];
    out.gap2 = solve_poisson_signed(f.grid.radial, rf).field_energy;
    out.residual = out.gap1 + out.gap2 + out.h_hat - out.h_f;
    out.fhat_distance = f.l1_distance(out.fhat);
    return out;
}

double quadrature_self_error(const SteadyStateModel& m, const PhaseSpaceGrid& grid) {
    return std::abs(hamiltonian(phase_space_density(m, grid)).hamiltonian - m.hamiltonian);
}

ReducedFunctional::ReducedFunctional(const SteadyStateModel& m, std::size_t n_energy) : model_(m) {
    const GaussRule& g = gauss_legendre(n_energy);
    const double a = m.phi0(), b = m.e0();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t k = 0; k < g.x.size(); ++k) {
        double E = c + h * g.x[k];
        E_.push_back(E);
        s_.push_back(jacobian_fine(m.phi, E, 0));
        w_.push_back(h * g.w[k] * m.profile.evaluate(E) * jacobian_fine(m.phi, E, 1));
    }
}

double ReducedFunctional::J0(const Potential& phi) const {
    double s = 0.0;
    const double shift = phi.min() - model_.phi0();
    for (std::size_t k = 0; k < E_.size(); ++k) s += w_[k] * jacobian_fine_inverse(phi, s_[k], E_[k] + shift);
    return s;
}

double ReducedFunctional::operator()(const Potential& phi) const { return field_energy(phi) + J0(phi); }

double reduced_J0(const MonotoneRearrangement& fstar, const Potential& phi) {
    const double L = fstar.support(), M = fstar.mass();
    if (L <= 0.0) return 0.0;
    const double lo = phi.min();
    const double top = jacobian_fine_inverse(phi, L, 0.5 * lo);
    const std::size_t panels = 96;
    double s = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
        double a = lo + (top - lo) * double(k) / panels, b = lo + (top - lo) * double(k + 1) / panels;
        s += gauss_integrate([&](double e) { return fstar.primitive(jacobian_fine(phi, e, 0)); }, a, b, 8);
    }
    return -(s + M * (0.0 - top));
}

double rearrangement_gap(const MonotoneRearrangement& fstar, const MonotoneRearrangement& gstar, const Potential& phi) {
    JacobianMap jac(phi);
    std::vector<double> x;
    std::merge(fstar.t.begin(), fstar.t.end(), gstar.t.begin(), gstar.t.end(), std::back_inserter(x));
    x.erase(std::unique(x.begin(), x.end()), x.end());
    const GaussRule& g = gauss_legendre(3);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        double a = x[k], b = x[k + 1];
        if (b <= a) continue;
        double mid = 0.5 * (a + b);
        // f* - g* is linear on the piece; a^{-1} has a cube-root start at s = 0
        auto diff = [&](double t) {
            double fa = fstar.kind == MonotoneRearrangement::Kind::step ? fstar(mid) : fstar(t);
            double ga = gstar.kind == MonotoneRearrangement::Kind::step ? gstar(mid) : gstar(t);
            return fa - ga;
        };
        if (a == 0.0) {
            s += gauss_integrate([&](double u) { return 3.0 * u * u * b * jac.inverse(b * u * u * u) * diff(b * u * u * u); },
                                 0.0, 1.0, 12);
        } else {
            double c = 0.5 * (a + b), h = 0.5 * (b - a), t = 0.0;
            for (std::size_t q = 0; q < g.x.size(); ++q) {
                double u = c + h * g.x[q];
                t += g.w[q] * jac.inverse(u) * diff(u);
            }
            s += t * h;
        }
    }
    return s;
}

ReducedReport reduced_functional(const MonotoneRearrangement& fstar, const PotentialX& phi, const PhaseSpaceGrid& grid) {
    if (phi.grid.edges != grid.radial.edges) throw std::invalid_argument("potential and phase grid differ");
    ReducedReport out;
    out.G_table = fstar;
    PhaseSpaceDensity fs = fstar.kind == MonotoneRearrangement::Kind::step
                               ? bathtub_rearrangement(fstar, grid, phi.phi_avg)
                               : generalized_rearrangement(fstar, JacobianMap(phi.phi), grid);
    std::vector<double> rho = spatial_density(fs);
    double h = 0.0;
    if (total_mass(fs) > 0.0) h = hamiltonian(fs, density_potential(fs)).hamiltonian;
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = phi.density[i] - rho[i];
    out.coupling = solve_poisson_signed(grid.radial, rho).field_energy;
    out.J_value = h + out.coupling;
    out.J0_value = reduced_J0(fstar, phi.phi);
    out.J_G_route = phi.field_energy + out.J0_value;
    return out;
}

LowerBoundReport stability_lower_bound(const PhaseSpaceDensity& f, const SteadyStateModel& m, double c0,
                                       double neighbourhood) {
    LowerBoundReport out;
    PhaseSpaceDensity Q = phase_space_density(m, f.grid);
    PotentialX phi_f = density_potential(f), phi_Q = density_potential(Q);
    double hf = hamiltonian(f, phi_f).hamiltonian, hq = hamiltonian(Q, phi_Q).hamiltonian;
    MonotoneRearrangement fs = schwarz_rearrangement(distribution_function(f));
    MonotoneRearrangement qs = schwarz_rearrangement(distribution_function(Q));
    double sup_phi = -phi_f.min_phi;
    out.lhs = hf - hq + sup_phi * fs.l1_distance(qs);

    ShiftResult sh = modulation_shift(phi_f.phi, m);
    out.z = sh.z;
    PotentialDistance d = potential_distance(phi_f.phi, phi_Q.phi, sh.z);
    out.distance = d.dist_grad;
    out.linf_distance = d.dist_inf;
    out.rhs = c0 * d.dist_grad * d.dist_grad;
    out.slack = out.lhs - out.rhs;
    double scale = std::abs(phi_Q.min_phi) + std::sqrt(2.0 * phi_Q.field_energy);
    out.reliable = sh.converged && d.dist_inf + d.dist_grad < neighbourhood * scale;
    return out;
}

Perturbation parse_perturbation(const std::string& s) {
    if (s == "amplitude") return Perturbation::amplitude;
    if (s == "scramble") return Perturbation::scramble;
    if (s == "squeeze") return Perturbation::squeeze;
    throw std::invalid_argument("unknown perturbation family: " + s);
}

std::string to_string(Perturbation p) {
    switch (p) {
        case Perturbation::amplitude: return "amplitude";
        case Perturbation::scramble: return "scramble";
        case Perturbation::squeeze: return "squeeze";
    }
    return "?";
}

std::function<double(double, double)> perturbation_function(const SteadyStateModel& m, Perturbation kind, double eps,
                                                            std::uint64_t seed) {
    if (kind == Perturbation::scramble) throw std::invalid_argument("scramble has no pointwise form");
    if (kind == Perturbation::squeeze) {
        const double lam = 1.0 + eps;
        return [m, lam](double r, double u) { return lam * lam * lam * m.Q(r, lam * u); };
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double R = m.support_radius, V = m.escape_speed();
    struct Bump { double c, r, u, sr, su; };
    std::vector<Bump> bumps(3);
    double norm = 0.0;
    for (auto& b : bumps) {
        b.c = 2.0 * U(rng) - 1.0;
        b.r = R * U(rng);
        b.u = 0.8 * V * U(rng);
        b.sr = R * (0.1 + 0.3 * U(rng));
        b.su = V * (0.1 + 0.3 * U(rng));
        norm += std::abs(b.c);
    }
    return [m, bumps, norm, eps](double r, double u) {
        double chi = 0.0;
        for (const auto& b : bumps) {
            double x = (r - b.r) / b.sr, y = (u - b.u) / b.su;
            chi += b.c * std::exp(-0.5 * (x * x + y * y));
        }
        return std::max(0.0, m.Q(r, u) * (1.0 + eps * chi / norm));
    };
}

PhaseSpaceDensity perturb(const SteadyStateModel& m, const PhaseSpaceGrid& grid, Perturbation kind, double eps,
                          std::uint64_t seed) {
    PhaseSpaceDensity Q = phase_space_density(m, grid);
    if (eps == 0.0) return Q;
    switch (kind) {
        case Perturbation::amplitude:
        case Perturbation::squeeze: {
            auto f = perturbation_function(m, kind, eps, seed);
            for (std::size_t i = 0; i < grid.n_r(); ++i)
                for (std::size_t j = 0; j < grid.n_u(); ++j) Q.at(i, j) = f(grid.radial.nodes[i], grid.speeds.nodes[j]);
            return Q;
        }
        case Perturbation::scramble: {
            // groups of equal weight, swaps until a fraction eps of the mass has moved
            std::vector<std::size_t> idx(grid.cells());
            for (std::size_t c = 0; c < idx.size(); ++c) idx[c] = c;
            auto w = [&](std::size_t c) { return grid.weight(c / grid.n_u(), c % grid.n_u()); };
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return w(a) < w(b); });
            std::vector<std::size_t> group_of(grid.cells()), start;
            std::vector<std::size_t> len;
            for (std::size_t q = 0; q < idx.size();) {
                std::size_t e = q + 1;
                while (e < idx.size() && w(idx[e]) - w(idx[q]) <= 1e-12 * w(idx[q])) ++e;
                for (std::size_t t = q; t < e; ++t) group_of[idx[t]] = start.size();
                start.push_back(q);
                len.push_back(e - q);
                q = e;
            }
            std::vector<std::size_t> occupied;
            for (std::size_t c = 0; c < Q.f.size(); ++c)
                if (Q.f[c] > 0.0 && len[group_of[c]] > 1) occupied.push_back(c);
            if (occupied.empty()) throw std::invalid_argument("no equal-weight cells to exchange on this grid");
            const double target = eps * total_mass(Q);
            double moved = 0.0;
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> U(0.0, 1.0);
            for (std::size_t it = 0; it < 50 * Q.f.size() && moved < target; ++it) {
                std::size_t c = occupied[std::size_t(U(rng) * double(occupied.size())) % occupied.size()];
                std::size_t g = group_of[c];
                std::size_t d = idx[start[g] + std::size_t(U(rng) * double(len[g])) % len[g]];
                if (d == c || Q.f[c] == Q.f[d]) continue;
                moved += 2.0 * std::abs(Q.f[c] - Q.f[d]) * w(c);
                std::swap(Q.f[c], Q.f[d]);
            }
            return Q;
        }
    }
    return Q;
}

InterpolationTerms interpolation_terms(const PhaseSpaceDensity& g) {
    const PhaseSpaceGrid& G = g.grid;
    InterpolationTerms t;
    for (std::size_t i = 0; i < G.n_r(); ++i)
        for (std::size_t j = 0; j < G.n_u(); ++j) {
            double v = std::abs(g.at(i, j)), w = v * G.weight(i, j);
            t.l1 += w;
            t.v2 += w * G.mean_u2(j);
            t.sup = std::max(t.sup, v);
        }
    if (!(t.l1 > 0.0)) throw DegenerateInput("zero density");
    t.grad2 = 2.0 * solve_poisson_signed(G.radial, spatial_density(g)).field_energy;
    return t;
}

EstimateConstants calibrate_estimates(const SteadyStateModel& m, const PhaseSpaceGrid& grid, double safety) {
    if (!(safety >= 1.0)) throw std::invalid_argument("safety factor must be >= 1");
    PhaseSpaceDensity Q = phase_space_density(m, grid);
    InterpolationTerms t = interpolation_terms(Q);
    PotentialX phi = density_potential(Q);
    EstimateConstants c;
    c.safety = safety;
    c.interpolation = safety * t.ratio();
    c.grad = safety * std::sqrt(t.grad2) / (std::pow(t.l1, 7.0 / 12.0) * std::pow(t.B(), 5.0 / 12.0));
    c.sup = safety * std::abs(phi.min_phi) / (std::pow(t.l1, 1.0 / 6.0) * std::pow(t.B(), 5.0 / 6.0));
    return c;
}

PotentialStability potential_stability(const PhaseSpaceDensity& f, const PhaseSpaceDensity& g, const EstimateConstants& c) {
    if (!f.same_grid(g)) throw std::invalid_argument("densities live on different grids");
    PhaseSpaceDensity h = f;
    for (std::size_t k = 0; k < h.f.size(); ++k) h.f[k] -= g.f[k];
    PotentialStability s;
    InterpolationTerms tf = interpolation_terms(f), tg = interpolation_terms(g);
    const double N1 = tf.l1 + tg.l1, NB = std::pow(tf.sup + tg.sup, 0.4) * std::pow(tf.v2 + tg.v2, 0.6);
    s.c_fg = c.grad * std::pow(N1, 5.0 / 12.0) * std::pow(NB, 5.0 / 12.0) + c.sup * std::pow(NB, 5.0 / 6.0);
    double any = 0.0;
    for (double v : h.f) any = std::max(any, std::abs(v));
    if (any == 0.0) return s;
    InterpolationTerms th = interpolation_terms(h);
    PotentialX phi = solve_poisson_signed(f.grid.radial, spatial_density(h));
    s.grad = std::sqrt(th.grad2);
    s.l1 = th.l1;
    // phi_h is harmonic outside the grid, so its sup is attained on the table
    for (double v : phi.phi_edges) s.sup = std::max(s.sup, std::abs(v));
    s.grad_bound = c.grad * std::pow(th.l1, 7.0 / 12.0) * std::pow(th.B(), 5.0 / 12.0);
    s.sup_bound = c.sup * std::pow(th.l1, 1.0 / 6.0) * std::pow(th.B(), 5.0 / 6.0);
    return s;
}

PhaseSpaceDensity density_on_grid(const std::function<double(double, double)>& f, const PhaseSpaceGrid& grid) {
    PhaseSpaceDensity d;
    d.grid = grid;
    d.f.assign(grid.cells(), 0.0);
    for (std::size_t i = 0; i < grid.n_r(); ++i)
        for (std::size_t j = 0; j < grid.n_u(); ++j) d.at(i, j) = std::max(0.0, f(grid.radial.nodes[i], grid.speeds.nodes[j]));
    return d;
}

RandomDensity random_density(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, U(rng)); };
    const double A = logu(0.2, 5.0), a = logu(0.3, 3.0), b = logu(0.3, 3.0);
    RandomDensity d;
    switch (seed % 4) {
        case 0:
        case 1: {
            auto m = std::make_shared<SteadyStateModel>(seed % 4 == 0 ? build_king(1.0 + 7.0 * U(rng))
                                                                      : build_polytrope(0.05 + 3.35 * U(rng), 1.0));
            d.family = m->kind();
            d.f = [m, A, a, b](double r, double u) { return A * m->Q(r / a, u / b); };
            d.r_max = a * m->support_radius;
            d.u_max = b * m->escape_speed();
            break;
        }
        case 2: {
            const double p = 1.0 + 3.0 * U(rng), s = 0.5 + 3.5 * U(rng);
            d.family = "separable";
            d.f = [=](double r, double u) { return A * std::exp(-std::pow(r / a, p)) * std::max(0.0, 1.0 - std::pow(u / b, s)); };
            d.r_max = a * std::pow(30.0, 1.0 / p);
            d.u_max = b;
            break;
        }
        default: {
            auto m = std::make_shared<SteadyStateModel>(build_king(1.0 + 7.0 * U(rng)));
            auto bump = perturbation_function(*m, Perturbation::amplitude, 0.9 * U(rng), seed);
            d.family = "bumped-king";
            d.f = [bump, A, a, b](double r, double u) { return A * bump(r / a, u / b); };
            d.r_max = a * m->support_radius;
            d.u_max = b * m->escape_speed();
        }
    }
    return d;
}

}  // namespace vps
