#include "vps/evolver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include "vps/antonov.hpp"

namespace vps {

constexpr std::size_t kMinParticles = 10000;

namespace {

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    threads = std::max<std::size_t>(1, std::min(threads, n / 4096 + 1));
    if (threads == 1) {
        body(std::size_t(0), n, std::size_t(0));
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        std::size_t a = std::min(n, t * chunk), b = std::min(n, a + chunk);
        pool.emplace_back([&body, a, b, t] { body(a, b, t); });
    }
    for (auto& th : pool) th.join();
}

double shell_sample(double a, double b, double U) {
    double a3 = a * a * a, b3 = b * b * b;
    return std::cbrt(a3 + U * (b3 - a3));
}

// systematic sampling of cells proportional to cell mass
std::vector<std::size_t> allocate(const std::vector<double>& cell_mass, std::size_t N, double offset) {
    std::vector<std::size_t> count(cell_mass.size(), 0);
    double total = 0.0;
    for (double c : cell_mass) total += c;
    if (!(total > 0.0)) throw DegenerateInput("cannot sample a zero density");
    double cum = 0.0;
    std::size_t c = 0;
    for (std::size_t k = 0; k < N; ++k) {
        double target = (double(k) + offset) / double(N) * total;
        while (c + 1 < cell_mass.size() && cum + cell_mass[c] <= target) cum += cell_mass[c++];
        ++count[c];
    }
    return count;
}

template <class Emit>
void fill_cells(const PhaseSpaceGrid& g, const std::vector<std::size_t>& count, std::mt19937_64& rng, Emit&& emit) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) {
            std::size_t n = count[g.index(i, j)];
            for (std::size_t k = 0; k < n; ++k) {
                double r = shell_sample(g.radial.edges[i], g.radial.edges[i + 1], U(rng));
                double u = shell_sample(g.speeds.edges[j], g.speeds.edges[j + 1], U(rng));
                double mu = -1.0 + 2.0 * (double(k) + U(rng)) / double(n);
                double vt = u * std::sqrt(std::max(0.0, 1.0 - mu * mu));
                emit(i, j, n, r, u * mu, r * r * vt * vt);
            }
        }
}

}  // namespace

double ParticleEnsemble::r(std::size_t i) const { return std::hypot(x[i], y[i]); }

double ParticleEnsemble::v_r(std::size_t i) const {
    double rr = r(i);
    return rr > 0.0 ? (x[i] * vx[i] + y[i] * vy[i]) / rr : std::hypot(vx[i], vy[i]);
}

double ParticleEnsemble::l(std::size_t i) const {
    double c = x[i] * vy[i] - y[i] * vx[i];
    return c * c;
}

double ParticleEnsemble::mass() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
}

void ParticleEnsemble::push_back(double r, double v_r, double l, double weight, double f) {
    if (!(r >= 0.0) || !(l >= 0.0) || !(weight > 0.0) || !(f > 0.0)) throw std::invalid_argument("bad particle record");
    x.push_back(r);
    y.push_back(0.0);
    vx.push_back(v_r);
    vy.push_back(r > 0.0 ? std::sqrt(l) / r : 0.0);
    w.push_back(weight);
    f0.push_back(f);
}

ParticleEnsemble sample_particles(const PhaseSpaceDensity& f, std::size_t N, std::uint64_t seed) {
    if (N < kMinParticles) throw std::invalid_argument("need at least 10^4 particles");
    const PhaseSpaceGrid& g = f.grid;
    std::vector<double> cm(g.cells());
    double total = 0.0;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) total += cm[g.index(i, j)] = std::max(0.0, f.at(i, j)) * g.weight(i, j);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::size_t> count = allocate(cm, N, U(rng));
    ParticleEnsemble p;
    const double w = total / double(N);
    fill_cells(g, count, rng, [&](std::size_t i, std::size_t j, std::size_t, double r, double vr, double l) {
        p.push_back(r, vr, l, w, f.at(i, j));
    });
    return p;
}

namespace {

ParticleEnsemble sample_pointwise(const std::function<double(double, double)>& f, const PhaseSpaceGrid& g,
                                  std::size_t N, std::uint64_t seed) {
    if (N == 0) throw std::invalid_argument("need at least one particle");
    // cell masses from a 4 x 4 midpoint rule in the shell measure, so cells cut by the support edge are kept
    std::vector<double> cm(g.cells());
    const int q = 4;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) {
            double s = 0.0;
            for (int a = 0; a < q; ++a)
                for (int b = 0; b < q; ++b) {
                    double r = shell_sample(g.radial.edges[i], g.radial.edges[i + 1], (a + 0.5) / q);
                    double u = shell_sample(g.speeds.edges[j], g.speeds.edges[j + 1], (b + 0.5) / q);
                    s += std::max(0.0, f(r, u));
                }
            cm[g.index(i, j)] = s / (q * q) * g.weight(i, j);
        }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::size_t> count = allocate(cm, N, U(rng));
    double total = 0.0;
    for (double c : cm) total += c;
    ParticleEnsemble p;
    // weights divide by the expected count N cm / total, not the realized one
    fill_cells(g, count, rng, [&](std::size_t i, std::size_t j, std::size_t, double r, double vr, double l) {
        double u = std::sqrt(vr * vr + (r > 0.0 ? l / (r * r) : 0.0));
        double v = f(r, u);
        if (v > 0.0) p.push_back(r, vr, l, v * g.weight(i, j) * total / (double(N) * cm[g.index(i, j)]), v);
    });
    return p;
}

}  // namespace

ParticleEnsemble sample_particles(const std::function<double(double, double)>& f, const PhaseSpaceGrid& g,
                                  std::size_t N, std::uint64_t seed) {
    if (N < kMinParticles) throw std::invalid_argument("need at least 10^4 particles");
    return sample_pointwise(f, g, N, seed);
}

namespace {

struct Planar {
    double x, y, vx, vy;
};

void frozen_step(Planar& q, const Potential& phi, double h) {
    auto kick = [&](double dt) {
        double r = std::hypot(q.x, q.y);
        if (r > 0.0) {
            double a = -dt * phi.derivative(r) / r;
            q.vx += a * q.x;
            q.vy += a * q.y;
        }
    };
    kick(0.5 * h);
    q.x += h * q.vx;
    q.y += h * q.vy;
    kick(0.5 * h);
}

// radial period from three successive sign changes of x.v; 0 when none is found within the budget
double radial_period(Planar q, const Potential& phi, double h, std::size_t budget) {
    double t = 0.0, prev = q.x * q.vx + q.y * q.vy, first = -1.0;
    int changes = 0;
    for (std::size_t s = 0; s < budget; ++s) {
        frozen_step(q, phi, h);
        t += h;
        double cur = q.x * q.vx + q.y * q.vy;
        if ((prev < 0.0) != (cur < 0.0)) {
            double tc = t - h * cur / (cur - prev);
            if (++changes == 1) first = tc;
            else if (changes == 3) return tc - first;
        }
        prev = cur;
    }
    return 0.0;
}

}  // namespace

ParticleEnsemble sample_particles(const std::function<double(double, double)>& f, const PhaseSpaceGrid& grid,
                                  const SteadyStateModel& m, std::size_t N, std::size_t K, std::uint64_t seed) {
    if (N < kMinParticles) throw std::invalid_argument("need at least 10^4 particles");
    if (K == 0 || N < K) throw std::invalid_argument("need 1 <= K <= N");
    ParticleEnsemble seeds = sample_pointwise(f, grid, N / K, seed);
    if (K == 1) return seeds;
    const double h0 = m.dynamical_time() / 400.0;
    ParticleEnsemble p;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        Planar q{seeds.x[i], seeds.y[i], seeds.vx[i], seeds.vy[i]};
        double e = 0.5 * seeds.speed2(i) + m.phi(seeds.r(i));
        double T = e < 0.0 ? radial_period(q, m.phi, h0, 400000) : 0.0;
        if (!(T > 0.0)) {
            p.push_back(seeds.r(i), seeds.v_r(i), seeds.l(i), seeds.w[i], seeds.f0[i]);
            continue;
        }
        const std::size_t sub = std::max<std::size_t>(1, std::size_t(std::ceil(T / double(K) / h0)));
        const double h = T / double(K * sub);
        for (std::size_t k = 0; k < K; ++k) {
            if (k > 0)
                for (std::size_t s = 0; s < sub; ++s) frozen_step(q, m.phi, h);
            double r = std::hypot(q.x, q.y), u = std::hypot(q.vx, q.vy);
            // back onto the seed's (e, l) level set, which the step only keeps to O(h^2)
            const double l = seeds.l(i);
            double vr = r > 0.0 ? (q.x * q.vx + q.y * q.vy) / r : u;
            double vr2 = r > 0.0 ? 2.0 * (e - m.phi(r)) - l / (r * r) : vr * vr;
            if (vr2 > 0.0) vr = std::copysign(std::sqrt(vr2), vr);
            double v = f(r, std::sqrt(vr * vr + (r > 0.0 ? l / (r * r) : 0.0)));
            if (!(v > 0.0)) continue;
            p.push_back(r, vr, l, seeds.w[i] * v / (double(K) * seeds.f0[i]), v);
        }
    }
    return p;
}

double amplitude_for_size(const SteadyStateModel& m, double eta, std::uint64_t seed) {
    if (!(eta >= 0.0)) throw std::invalid_argument("perturbation size must be non-negative");
    if (eta == 0.0) return 0.0;
    // the bumps never clip for amplitude <= 1, so the weighted distance is linear in the amplitude
    PhaseSpaceGrid g = default_phase_grid(m, 400, 200);
    auto f = perturbation_function(m, Perturbation::amplitude, 1.0, seed);
    double d = 0.0, q = 0.0;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j) {
            double r = g.radial.nodes[i], u = g.speeds.nodes[j], w = g.weight(i, j) * (1.0 + u * u);
            double Q = m.Q(r, u);
            d += w * std::abs(f(r, u) - Q);
            q += w * Q;
        }
    double a = eta * q / d;
    if (a > 1.0) throw std::invalid_argument("perturbation size too large for the amplitude family");
    return a;
}

FieldSolver::FieldSolver(double r_max, std::size_t n)
    : grid_(make_radial_grid(r_max, n, Spacing::uniform)), delta_(r_max / double(n)), slope_(n, 0.0) {}

void FieldSolver::deposit(const ParticleEnsemble& p, std::size_t threads) {
    const std::size_t n = grid_.size();
    std::size_t T = std::max<std::size_t>(1, std::min(threads, p.size() / 4096 + 1));
    std::vector<std::vector<double>> part(T, std::vector<double>(n, 0.0));
    parallel_for(p.size(), T, [&](std::size_t a, std::size_t b, std::size_t t) {
        std::vector<double>& mass = part[t];
        for (std::size_t k = a; k < b; ++k) {
            double s = p.r(k) / delta_ - 0.5;
            if (s <= 0.0) mass[0] += p.w[k];
            else if (s >= double(n - 1)) mass[n - 1] += p.w[k];
            else {
                std::size_t i = std::size_t(s);
                double f = s - double(i);
                mass[i] += (1.0 - f) * p.w[k];
                mass[i + 1] += f * p.w[k];
            }
        }
    });
    std::vector<double> rho(n, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < n; ++i) rho[i] += part[t][i];
    for (std::size_t i = 0; i < n; ++i) rho[i] /= grid_.volumes[i];
    phi_ = solve_poisson_radial(grid_, rho);
    for (std::size_t i = 0; i + 1 < n; ++i) slope_[i] = (phi_.phi_avg[i + 1] - phi_.phi_avg[i]) / delta_;
}

double FieldSolver::force(double r) const {
    // slope_[i] sits on the edge (i + 1) delta; linear in between, zero at the centre
    const std::size_t n = grid_.size();
    double s = r / delta_ - 1.0;
    if (s >= double(n - 2)) return r >= double(n) * delta_ ? 0.0 : -slope_[n - 2];
    if (s <= 0.0) return -slope_[0] * std::max(0.0, r / delta_);
    std::size_t i = std::size_t(s);
    double f = s - double(i);
    return -((1.0 - f) * slope_[i] + f * slope_[i + 1]);
}

void kdk_step(ParticleEnsemble& p, const std::function<double(double)>& force, double dt) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        double r = p.r(i);
        if (r > 0.0) {
            double a = 0.5 * dt * force(r) / r;
            p.vx[i] += a * p.x[i];
            p.vy[i] += a * p.y[i];
        }
        p.x[i] += dt * p.vx[i];
        p.y[i] += dt * p.vy[i];
        r = p.r(i);
        if (r > 0.0) {
            double a = 0.5 * dt * force(r) / r;
            p.vx[i] += a * p.x[i];
            p.vy[i] += a * p.y[i];
        }
    }
    p.time += dt;
}

double orbital_distance(const ParticleEnsemble& p, const SteadyStateModel& m) {
    double covered = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double v2 = p.speed2(i), q = m.Q(p.r(i), std::sqrt(v2)), mi = p.measure(i);
        diff += mi * (1.0 + v2) * std::abs(p.f0[i] - q);
        covered += mi * (1.0 + v2) * q;
    }
    const double total = m.mass + 2.0 * m.kinetic;
    return diff + std::max(0.0, total - covered);
}

PhaseSpaceDensity bin_particles(const ParticleEnsemble& p, const PhaseSpaceGrid& grid) {
    PhaseSpaceDensity f;
    f.grid = grid;
    f.f.assign(grid.cells(), 0.0);
    auto locate = [](const std::vector<double>& e, double x) -> std::ptrdiff_t {
        if (x < e.front() || x >= e.back()) return -1;
        return std::ptrdiff_t(std::upper_bound(e.begin(), e.end(), x) - e.begin()) - 1;
    };
    for (std::size_t k = 0; k < p.size(); ++k) {
        std::ptrdiff_t i = locate(grid.radial.edges, p.r(k)), j = locate(grid.speeds.edges, std::sqrt(p.speed2(k)));
        if (i < 0 || j < 0) {
            f.truncated = true;
            continue;
        }
        f.at(std::size_t(i), std::size_t(j)) += p.w[k];
    }
    for (std::size_t i = 0; i < grid.n_r(); ++i)
        for (std::size_t j = 0; j < grid.n_u(); ++j) f.at(i, j) /= grid.weight(i, j);
    return f;
}

double orbital_distance(const PhaseSpaceDensity& f, const SteadyStateModel& m) {
    const PhaseSpaceGrid& g = f.grid;
    double s = 0.0;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_u(); ++j)
            s += (1.0 + g.mean_u2(j)) * std::abs(f.at(i, j) - m.Q(g.radial.nodes[i], g.speeds.nodes[j])) * g.weight(i, j);
    return s;
}

TrajectoryDiagnostics evolve(ParticleEnsemble& p, const SteadyStateModel& m, const EvolveOptions& opt) {
    if (p.size() == 0) throw DegenerateInput("empty ensemble");
    if (!(opt.dt > 0.0) || opt.dt > 0.1 * m.dynamical_time() * (1.0 + 1e-12))
        throw std::invalid_argument("dt must lie in (0, 0.1 t_dyn]");
    const double steps_f = opt.T / opt.dt, cad_f = opt.cadence / opt.dt;
    const std::size_t steps = std::size_t(std::llround(steps_f)), cad = std::size_t(std::llround(cad_f));
    if (cad == 0 || std::abs(steps_f - double(steps)) > 1e-6 * steps_f || std::abs(cad_f - double(cad)) > 1e-6 * cad_f ||
        steps % cad != 0)
        throw std::invalid_argument("T must be a multiple of the cadence and the cadence a multiple of dt");

    const double r_wall = opt.r_max_factor * m.support_radius;
    FieldSolver field(r_wall, opt.field_cells);
    double fmax = 0.0;
    for (double v : p.f0) fmax = std::max(fmax, v);
    const double cut = opt.casimir_cut > 0.0 ? opt.casimir_cut : 0.5 * fmax;
    PhaseSpaceGrid bins = make_grids(1.25 * m.support_radius, 64, 1.25 * m.escape_speed(), 32);

    TrajectoryDiagnostics d;
    auto energy = [&]() {
        double k = 0.0, u = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            k += 0.5 * p.w[i] * p.speed2(i);
            if (!opt.self_consistent) u += p.w[i] * m.phi(p.r(i));
        }
        return k + (opt.self_consistent ? field.potential_energy() : u);
    };
    auto record = [&]() {
        d.t.push_back(p.time);
        d.H.push_back(energy());
        d.mass.push_back(p.mass());
        double c2 = 0.0, cm = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            c2 += p.w[i] * p.f0[i];
            cm += p.measure(i) * std::min(p.f0[i], cut);
        }
        d.casimir_s2.push_back(c2);
        d.casimir_min.push_back(cm);
        d.distance.push_back(orbital_distance(p, m));
        d.binned_distance.push_back(orbital_distance(bin_particles(p, bins), m));
        Vec3 z{0, 0, 0};
        if (opt.self_consistent && opt.shift_diagnostic) z = modulation_shift(field.potential().phi, m, 12).z;
        d.z.push_back(z);
    };

    std::function<double(double)> force;
    if (opt.self_consistent) {
        field.deposit(p, opt.threads);
        force = [&field](double r) { return field.force(r); };
    } else {
        force = [&m](double r) { return -m.phi.derivative(r); };
    }
    record();
    const double H0 = d.H.front();

    auto kick = [&](double h) {
        parallel_for(p.size(), opt.threads, [&](std::size_t a, std::size_t b, std::size_t) {
            for (std::size_t i = a; i < b; ++i) {
                double r = p.r(i);
                if (r <= 0.0) continue;
                double s = h * force(r) / r;
                p.vx[i] += s * p.x[i];
                p.vy[i] += s * p.y[i];
            }
        });
    };
    std::vector<unsigned char> hit(p.size(), 0);
    auto drift = [&](double h) {
        parallel_for(p.size(), opt.threads, [&](std::size_t a, std::size_t b, std::size_t) {
            for (std::size_t i = a; i < b; ++i) {
                p.x[i] += h * p.vx[i];
                p.y[i] += h * p.vy[i];
                double r = p.r(i);
                if (r > r_wall) {
                    // mirror the radial coordinate and flip the radial velocity
                    double ex = p.x[i] / r, ey = p.y[i] / r, vr = p.vx[i] * ex + p.vy[i] * ey;
                    double rn = 2.0 * r_wall - r;
                    p.x[i] = rn * ex;
                    p.y[i] = rn * ey;
                    p.vx[i] -= 2.0 * vr * ex;
                    p.vy[i] -= 2.0 * vr * ey;
                    hit[i] = 1;
                }
            }
        });
    };

    for (std::size_t s = 1; s <= steps; ++s) {
        kick(0.5 * opt.dt);
        drift(opt.dt);
        if (opt.self_consistent) field.deposit(p, opt.threads);
        kick(0.5 * opt.dt);
        p.time = d.t.front() + double(s) * opt.dt;
        if (s % cad == 0) {
            record();
            if (std::abs(d.H.back() - H0) > opt.energy_spike * std::abs(H0)) {
                d.aborted = true;
                d.message = "energy spike: relative drift " + std::to_string((d.H.back() - H0) / std::abs(H0)) +
                            " at t = " + std::to_string(p.time);
                break;
            }
        }
    }
    for (unsigned char h : hit) d.reflections += h;
    if (d.reflections > 0 && d.message.empty())
        d.message = std::to_string(d.reflections) + " particles reflected at r_max";
    return d;
}

ConservationReport conservation_report(const TrajectoryDiagnostics& d, double mass_tol, double energy_tol,
                                       double casimir_tol) {
    ConservationReport c;
    if (d.t.empty()) return c;
    auto drift = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x - v.front()) / std::abs(v.front()));
        return m;
    };
    c.mass_drift = drift(d.mass);
    c.energy_drift = drift(d.H);
    c.casimir_drift = std::max(drift(d.casimir_s2), drift(d.casimir_min));
    c.pass = !d.aborted && c.mass_drift <= mass_tol && c.energy_drift <= energy_tol && c.casimir_drift <= casimir_tol;
    return c;
}

void write_diagnostics_csv(std::ostream& os, const TrajectoryDiagnostics& d, const std::string& digest) {
    os << "# " << digest << "\n";
    os << "t,H,mass,casimir_s2,casimir_min,orbital_distance,binned_distance,z_x,z_y,z_z\n";
    os << std::setprecision(17);
    for (std::size_t k = 0; k < d.t.size(); ++k)
        os << d.t[k] << ',' << d.H[k] << ',' << d.mass[k] << ',' << d.casimir_s2[k] << ',' << d.casimir_min[k] << ','
           << d.distance[k] << ',' << d.binned_distance[k] << ',' << d.z[k][0] << ',' << d.z[k][1] << ',' << d.z[k][2]
           << "\n";
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("truncated checkpoint");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const ParticleEnsemble& p) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    put<std::uint64_t>(os, p.size());
    put<double>(os, p.time);
    for (std::size_t i = 0; i < p.size(); ++i) {
        put<double>(os, p.r(i));
        put<double>(os, p.v_r(i));
        put<double>(os, p.l(i));
        put<double>(os, p.w[i]);
        put<double>(os, p.f0[i]);
    }
}

ParticleEnsemble read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    ParticleEnsemble p;
    std::uint64_t n = get<std::uint64_t>(is);
    p.time = get<double>(is);
    for (std::uint64_t k = 0; k < n; ++k) {
        double r = get<double>(is), vr = get<double>(is), l = get<double>(is), w = get<double>(is), f = get<double>(is);
        p.push_back(r, vr, l, w, f);
    }
    return p;
}

}  // namespace vps
