#include "vps/antonov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace vps {

namespace {

struct Operator {
    std::vector<double> r;
    double delta = 0.0;
    Eigen::MatrixXd A;   // D_k - V (+ P for k = 0), per unit mass
    Eigen::MatrixXd Dk;  // Dirichlet form with lambda_k / r^2
    double vmax = 0.0;
};

// 4 pi sqrt2 |F'(e_m)| omega_m on energies graded toward e0
struct EnergyMesh {
    std::vector<double> e, c;
};

EnergyMesh energy_mesh(const SteadyStateModel& m, std::size_t n) {
    EnergyMesh out;
    const GaussRule& g = gauss_legendre(n);
    const double e0 = m.e0(), span = e0 - m.phi0();
    for (std::size_t k = 0; k < g.x.size(); ++k) {
        double t = 0.5 * (g.x[k] + 1.0), s = 1.0 - t;
        out.e.push_back(e0 - span * s * s);
        out.c.push_back(4.0 * pi * sqrt2 * std::abs(m.profile.derivative(out.e.back())) * 0.5 * g.w[k] * 2.0 * span * s);
    }
    return out;
}

Operator build_operator(const SteadyStateModel& m, int k, const SpectralOptions& opt) {
    Operator op;
    const std::size_t n = opt.n;
    const double L = opt.r_max_factor * m.support_radius, d = L / double(n);
    const double lam = double(k) * double(k + 1);
    op.delta = d;
    op.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) op.r[i] = (double(i) + 0.5) * d;
    const double beta = double(k) * d / (2.0 * L), gamma = (1.0 - beta) / (1.0 + beta);

    op.Dk = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double diag = 2.0 / (d * d);
        if (i == 0) diag = 3.0 / (d * d);
        if (i == n - 1) diag = (2.0 - gamma) / (d * d);
        op.Dk(i, i) = diag + lam / (op.r[i] * op.r[i]);
        if (i + 1 < n) op.Dk(i, i + 1) = op.Dk(i + 1, i) = -1.0 / (d * d);
    }
    op.A = op.Dk;
    if (opt.zero_potential) return op;

    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) phi[i] = m.phi(op.r[i]);
    for (std::size_t i = 0; i < n; ++i) op.vmax = std::max(op.vmax, effective_potential(m, op.r[i]));
    if (k != 0) {
        for (std::size_t i = 0; i < n; ++i) op.A(i, i) -= effective_potential(m, op.r[i]);
        return op;
    }
    // radial sector: V and Pi from one energy mesh so that -V + P vanishes on functions of e
    EnergyMesh mesh = energy_mesh(m, opt.n_energy);
    Eigen::VectorXd K(n);
    for (std::size_t q = 0; q < mesh.e.size(); ++q) {
        double D = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = mesh.e[q] > phi[i] ? std::sqrt(mesh.e[q] - phi[i]) : 0.0;
            K[i] = s * op.r[i] * d;
            D += s * op.r[i] * op.r[i] * d;
            op.A(i, i) -= mesh.c[q] * s;
        }
        if (D <= 0.0) continue;
        op.A.noalias() += (mesh.c[q] / (D * d)) * K * K.transpose();
    }
    return op;
}

double norm3(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

// |grad F|^2 over R^3 for a field of finitely many radial terms
double field_gradient_norm2(const TranslatedField& F, std::size_t n) {
    const double R = F.extent();
    BallRule b = ball_rule({0, 0, 0}, R, n);
    double s = 0.0;
    for (std::size_t k = 0; k < b.x.size(); ++k) {
        Vec3 g = F.gradient(b.x[k]);
        s += b.w[k] * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    }
    double q = 0.0;
    Vec3 p{0, 0, 0};
    for (const auto& t : F.terms) {
        q += t.coef * t.phi.mass();
        for (int i = 0; i < 3; ++i) p[i] += t.coef * t.phi.mass() * t.centre[i];
    }
    double p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    return s + q * q / (4.0 * pi * R) + p2 / (6.0 * pi * R * R * R);
}

}  // namespace

double effective_potential(const SteadyStateModel& m, double r) {
    if (r >= m.support_radius) return 0.0;
    return m.profile.veff(m.phi(r));
}

RadialProfile effective_potential_VQ(const SteadyStateModel& m, const RadialGrid& grid) {
    RadialProfile p;
    p.grid = grid;
    for (double r : grid.nodes) p.values.push_back(effective_potential(m, r));
    return p;
}

double project_energy(const std::function<double(double)>& h, const SteadyStateModel& m, double e) {
    if (!(e > m.phi0() && e < 0.0)) throw std::domain_error("energy outside (phi_Q(0), 0)");
    const double re = m.phi.inverse(e);
    double num = 0.0, den = 0.0;
    const GaussRule& g = gauss_legendre(96);
    for (std::size_t k = 0; k < g.x.size(); ++k) {
        double t = 0.5 * (g.x[k] + 1.0), w = 0.5 * g.w[k] * 2.0 * re * t;
        double r = re * (1.0 - t * t);
        double s = std::sqrt(std::max(0.0, e - m.phi(r))) * r * r * w;
        num += s * h(r);
        den += s;
    }
    return num / den;
}

HessianParts hessian_parts(const Potential& h, const SteadyStateModel& m, std::size_t n_energy) {
    HessianParts out;
    out.dirichlet = h.gradient_norm2();
    const double R = m.support_radius;
    const std::size_t panels = 64;
    for (std::size_t p = 0; p < panels; ++p) {
        double a = R * double(p) / panels, b = R * double(p + 1) / panels;
        out.potential += 4.0 * pi * gauss_integrate([&](double r) {
            double v = h(r);
            return effective_potential(m, r) * v * v * r * r;
        }, a, b, 8);
    }
    const double lo = m.phi0(), e0 = m.e0();
    const GaussRule& g = gauss_legendre(96);
    out.projection = gauss_integrate([&](double e) {
        const double re = m.phi.inverse(e);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < g.x.size(); ++k) {
            double t = 0.5 * (g.x[k] + 1.0), w = 0.5 * g.w[k] * 2.0 * re * t;
            double r = re * (1.0 - t * t);
            double s = std::sqrt(std::max(0.0, e - m.phi(r))) * r * r * w;
            num += s * h(r);
            den += s;
        }
        if (den <= 0.0) return 0.0;
        return 16.0 * pi * pi * sqrt2 * std::abs(m.profile.derivative(e)) * num * num / den;
    }, lo, e0, n_energy);
    return out;
}

double hessian_form(const Potential& h, const SteadyStateModel& m) { return hessian_parts(h, m).value(); }

SpectralReport harmonic_operator_spectrum(const SteadyStateModel& m, int k, std::size_t n_eigs,
                                          const SpectralOptions& opt) {
    if (k < 0) throw std::invalid_argument("harmonic index must be nonnegative");
    if (opt.n < 16 || n_eigs == 0 || n_eigs > opt.n) throw std::invalid_argument("bad spectral resolution");
    Operator op = build_operator(m, k, opt);
    SpectralReport out;
    out.k = k;
    out.lambda_k = double(k) * double(k + 1);
    out.r = op.r;
    out.potential_scale = op.vmax;
    TridiagEigen st = eig_symmetric(op.A, n_eigs);
    for (Eigen::Index i = 0; i < st.values.size(); ++i) out.eigenvalues.push_back(st.values[i]);
    out.eigenvectors = st.vectors;
    TridiagEigen gen = eig_generalized(op.A, op.Dk, n_eigs);
    for (Eigen::Index i = 0; i < gen.values.size(); ++i) out.normalized.push_back(gen.values[i]);
    if (k == 1) {
        Eigen::VectorXd w(op.r.size());
        for (std::size_t i = 0; i < op.r.size(); ++i) w[i] = op.r[i] * m.phi.derivative(op.r[i]);
        Eigen::VectorXd v = st.vectors.col(0);
        out.kernel_cosine = std::abs(w.dot(v)) / (w.norm() * v.norm());
    }
    return out;
}

CoercivityReport coercivity_constant(const SteadyStateModel& m, const SpectralOptions& opt) {
    CoercivityReport out;
    SpectralReport s0 = harmonic_operator_spectrum(m, 0, 1, opt);
    SpectralReport s1 = harmonic_operator_spectrum(m, 1, 2, opt);
    SpectralReport s2 = harmonic_operator_spectrum(m, 2, 1, opt);
    out.k0_min = s0.normalized[0];
    out.k1_second = s1.normalized[1];
    out.k2_min = s2.normalized[0];
    out.k1_kernel = s1.eigenvalues[0];
    out.kernel_cosine = s1.kernel_cosine;
    out.c0 = std::min({out.k0_min, out.k1_second, out.k2_min});
    out.positive = out.k0_min > 0.0 && out.k1_second > 0.0 && out.k2_min > 0.0;
    return out;
}

double compactness_ratio(const SteadyStateModel& m, const SpectralOptions& opt, std::size_t index) {
    if (index < 2 || index > opt.n) throw std::invalid_argument("bad compactness index");
    Operator op = build_operator(m, 0, opt);
    Eigen::MatrixXd C = op.A - op.Dk;  // -V + P, negative semidefinite
    TridiagEigen e = eig_generalized(C, op.Dk, index);
    return std::abs(e.values[Eigen::Index(index) - 1]) / std::abs(e.values[0]);
}

HormanderReport hormander_identity_check(const std::function<double(double)>& phi,
                                         const std::function<double(double)>& dphi,
                                         const std::function<double(double)>& rho,
                                         const std::vector<HormanderSample>& sample, double eta, bool richardson) {
    HormanderReport out;
    for (const HormanderSample& s : sample) {
        const double r0 = s.r, e = s.e;
        // local scale: the smaller of r and the distance to the turning point
        const double slope = std::abs(dphi(r0));
        const double turn = slope > 0.0 ? (e - phi(r0)) / slope : r0;
        const double d = eta * std::min(r0, turn);
        if (!(d > 0.0) || !(r0 > 2.0 * d) || !(e - phi(r0 + 2.0 * d) > 0.0) || !(e - phi(r0 - 2.0 * d) > 0.0)) {
            ++out.excluded;
            continue;
        }
        auto u = [&](double r) { return std::sqrt(2.0 * (e - phi(r))); };
        auto g = [&](double r) { double v = r * u(r); return v * v * v; };
        auto T2 = [&](double h) {
            auto Tg = [&](double r) { return (g(r + h) - g(r - h)) / (2.0 * h) / (r * r * u(r)); };
            return (Tg(r0 + h) - Tg(r0 - h)) / (2.0 * h) / (r0 * r0 * u(r0));
        };
        double T2g = richardson ? (4.0 * T2(0.5 * d) - T2(d)) / 3.0 : T2(d);
        double u0 = u(r0);
        double closed = 3.0 * (rho(r0) + dphi(r0) / r0) / std::pow(r0 * u0, 4);
        double lhs = -T2g / g(r0);
        out.max_residual = std::max(out.max_residual, std::abs(lhs / closed - 1.0));
        ++out.used;
    }
    return out;
}

HormanderReport hormander_identity_check(const SteadyStateModel& m, const std::vector<HormanderSample>& sample,
                                         double eta, bool richardson) {
    // quintic Hermite through the table with phi'' = rho - 2 phi'/r at the nodes, so that the
    // nested differences see a C^2 potential
    const std::vector<double>& x = m.phi.nodes();
    const std::vector<double>& f = m.phi.values();
    const std::vector<double>& df = m.phi.derivatives();
    std::vector<double> d2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        d2[i] = x[i] > 0.0 ? m.profile.rho(f[i]) - 2.0 * df[i] / x[i] : m.profile.rho(f[i]) / 3.0;
    auto eval = [&](double r, int der) {
        if (r >= x.back()) return der == 0 ? m.phi(r) : m.phi.derivative(r);
        std::size_t i = std::size_t(std::upper_bound(x.begin(), x.end(), r) - x.begin());
        i = std::min(std::max<std::size_t>(i, 1), x.size() - 1) - 1;
        const double h = x[i + 1] - x[i], t = (r - x[i]) / h;
        const double y0 = f[i], y1 = f[i + 1], p0 = df[i] * h, p1 = df[i + 1] * h, q0 = d2[i] * h * h,
                     q1 = d2[i + 1] * h * h;
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        if (der == 0) {
            double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, h1 = t - 6 * t3 + 8 * t4 - 3 * t5,
                   h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), h3 = 0.5 * (t3 - 2 * t4 + t5),
                   h4 = -4 * t3 + 7 * t4 - 3 * t5, h5 = 10 * t3 - 15 * t4 + 6 * t5;
            return h0 * y0 + h1 * p0 + h2 * q0 + h3 * q1 + h4 * p1 + h5 * y1;
        }
        double h0 = -30 * t2 + 60 * t3 - 30 * t4, h1 = 1 - 18 * t2 + 32 * t3 - 15 * t4,
               h2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4), h3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4),
               h4 = -12 * t2 + 28 * t3 - 15 * t4, h5 = 30 * t2 - 60 * t3 + 30 * t4;
        return (h0 * y0 + h1 * p0 + h2 * q0 + h3 * q1 + h4 * p1 + h5 * y1) / h;
    };
    std::vector<HormanderSample> inside;
    std::size_t outside = 0;
    for (const HormanderSample& s : sample) {
        double p = m.phi(s.r);
        if (s.r > 0.0 && s.e < m.e0() && s.e - p > 1e-10 * std::abs(p)) inside.push_back(s);
        else ++outside;
    }
    HormanderReport out = hormander_identity_check([&](double r) { return eval(r, 0); },
                                                   [&](double r) { return eval(r, 1); },
                                                   [&](double r) { return m.rho(r); }, inside, eta, richardson);
    out.excluded += outside;
    return out;
}

std::vector<HormanderSample> hormander_samples(const SteadyStateModel& m, std::size_t n, std::uint64_t seed,
                                               double margin) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(margin, 1.0 - margin);
    std::vector<HormanderSample> out;
    for (std::size_t k = 0; k < n; ++k) {
        double r = U(rng) * m.support_radius;
        double p = m.phi(r);
        out.push_back({r, p + U(rng) * (m.e0() - p)});
    }
    return out;
}

HardyReport hardy_check(const std::function<double(double)>& h, const SteadyStateModel& m, double margin,
                        std::size_t n_energy) {
    HardyReport out;
    out.worst_slice_ratio = std::numeric_limits<double>::infinity();
    const double lo = m.phi0(), e0 = m.e0(), span = e0 - lo;
    const double a = lo + margin * span, b = e0 - margin * span;
    const GaussRule& ge = gauss_legendre(n_energy);
    const GaussRule& gr = gauss_legendre(64);
    const GaussRule& gi = gauss_legendre(32);
    for (std::size_t q = 0; q < ge.x.size(); ++q) {
        const double e = 0.5 * (a + b) + 0.5 * (b - a) * ge.x[q];
        const double we = 0.5 * (b - a) * ge.w[q] * std::abs(m.profile.derivative(e));
        const double re = m.phi.inverse(e);
        auto u = [&](double r) { return std::sqrt(2.0 * std::max(0.0, e - m.phi(r))); };
        const double ph = project_energy(h, m, e);
        auto src = [&](double t) { return (h(t) - ph) * u(t) * t * t; };
        // f(r) = int_0^r src = -int_r^re src
        auto f = [&](double r) {
            if (r <= 0.5 * re) return gauss_integrate(src, 0.0, r, gi.x.size());
            return -gauss_integrate_sqrt_end(src, r, re, gi.x.size());
        };
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t k = 0; k < gr.x.size(); ++k) {
            double x = 0.5 * (gr.x[k] + 1.0), w = 0.5 * gr.w[k] * re * 2.0 * (1.0 - x);
            double r = re * (1.0 - (1.0 - x) * (1.0 - x));
            double uu = u(r);
            if (uu <= 0.0) continue;
            double d = h(r) - ph, fv = f(r);
            lhs += w * d * d * uu * r * r;
            rhs += w * 3.0 * (m.rho(r) + m.phi.derivative(r) / r) * fv * fv / std::pow(r * uu, 4) * uu * r * r;
        }
        out.lhs += we * lhs;
        out.rhs += we * rhs;
        if (rhs > 0.0) out.worst_slice_ratio = std::min(out.worst_slice_ratio, lhs / rhs);
    }
    return out;
}

Potential taylor_direction(const SteadyStateModel& m, const std::function<double(double)>& p, std::size_t n) {
    RadialGrid grid = make_radial_grid(m.phi.r_max(), n, Spacing::uniform);
    std::vector<double> rho(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double a = grid.edges[i], b = grid.edges[i + 1];
        if (a >= m.support_radius) break;
        double num = gauss_integrate([&](double r) { return m.rho(r) * p(r) * r * r; }, a, b, 4);
        rho[i] = num / ((b * b * b - a * a * a) / 3.0);
    }
    return solve_poisson_signed(grid, rho).phi;
}

TaylorReport taylor_remainder(const SteadyStateModel& m, const Potential& h, const std::vector<double>& eps) {
    TaylorReport out;
    ReducedFunctional J(m);
    auto at = [&](double e) {
        Potential p = Potential::combine(1.0, m.phi, e, h);
        if (!p.nondecreasing() || !check_X_membership(p).is_member)
            throw std::invalid_argument("perturbed potential leaves X");
        return J(p);
    };
    out.J_Q = at(0.0);
    out.hessian = hessian_form(h, m);
    for (double e : eps) {
        double v = at(e);
        out.eps.push_back(e);
        out.slope.push_back((v - out.J_Q) / e);
        out.remainder.push_back((v - out.J_Q - 0.5 * e * e * out.hessian) / (e * e));
    }
    auto fd = [&](double e) { return (at(e) - 2.0 * out.J_Q + at(-e)) / (e * e); };
    const double e1 = 0.02;
    out.hessian_fd = (4.0 * fd(0.5 * e1) - fd(e1)) / 3.0;
    return out;
}

ShiftResult modulation_shift(const TranslatedField& phi, const SteadyStateModel& m, std::size_t n) {
    if (phi.terms.empty()) throw std::invalid_argument("empty field");
    const double R = m.support_radius;
    BallRule b = ball_rule({0, 0, 0}, R, n);
    std::vector<double> w(b.x.size());
    double scale = 0.0;
    for (std::size_t k = 0; k < b.x.size(); ++k) {
        double r = norm3(b.x[k]);
        w[k] = b.w[k] * m.rho(r);
        scale += w[k] * std::abs(m.phi.derivative(r));
    }
    auto shifted = [&](const Vec3& z, std::size_t k) {
        return Vec3{z[0] + b.x[k][0], z[1] + b.x[k][1], z[2] + b.x[k][2]};
    };
    auto C = [&](const Vec3& z) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) s -= w[k] * phi.value(shifted(z, k));
        return s;
    };
    auto grad = [&](const Vec3& z) {
        Eigen::Vector3d g(0, 0, 0);
        for (std::size_t k = 0; k < w.size(); ++k) {
            Vec3 d = phi.gradient(shifted(z, k));
            for (int i = 0; i < 3; ++i) g[i] += w[k] * d[i];
        }
        return g;  // int grad phi(z + y) rho_Q(y) dy = -grad C
    };

    // Nelder-Mead on -C from the barycentre
    std::array<Vec3, 4> s;
    std::array<double, 4> fv;
    s[0] = phi.barycentre();
    for (int i = 0; i < 3; ++i) {
        s[i + 1] = s[0];
        s[i + 1][i] += 0.05 * R;
    }
    for (int i = 0; i < 4; ++i) fv[i] = -C(s[i]);
    auto lerp = [](const Vec3& a, const Vec3& c, double t) {
        return Vec3{a[0] + t * (c[0] - a[0]), a[1] + t * (c[1] - a[1]), a[2] + t * (c[2] - a[2])};
    };
    for (int it = 0; it < 600; ++it) {
        std::array<int, 4> o{0, 1, 2, 3};
        std::sort(o.begin(), o.end(), [&](int a, int c) { return fv[a] < fv[c]; });
        double spread = 0.0;
        for (int i = 1; i < 4; ++i) {
            Vec3 d{s[o[i]][0] - s[o[0]][0], s[o[i]][1] - s[o[0]][1], s[o[i]][2] - s[o[0]][2]};
            spread = std::max(spread, norm3(d));
        }
        if (spread < 1e-9 * R) break;
        Vec3 c{0, 0, 0};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) c[j] += s[o[i]][j] / 3.0;
        const int worst = o[3];
        Vec3 xr = lerp(c, s[worst], -1.0);
        double fr = -C(xr);
        if (fr < fv[o[0]]) {
            Vec3 xe = lerp(c, s[worst], -2.0);
            double fe = -C(xe);
            if (fe < fr) { s[worst] = xe; fv[worst] = fe; }
            else { s[worst] = xr; fv[worst] = fr; }
        } else if (fr < fv[o[2]]) {
            s[worst] = xr;
            fv[worst] = fr;
        } else {
            Vec3 xc = fr < fv[worst] ? lerp(c, s[worst], -0.5) : lerp(c, s[worst], 0.5);
            double fc = -C(xc);
            if (fc < std::min(fr, fv[worst])) {
                s[worst] = xc;
                fv[worst] = fc;
            } else {
                for (int i = 1; i < 4; ++i) {
                    s[o[i]] = lerp(s[o[0]], s[o[i]], 0.5);
                    fv[o[i]] = -C(s[o[i]]);
                }
            }
        }
    }
    int best = int(std::min_element(fv.begin(), fv.end()) - fv.begin());
    Vec3 z = s[best];

    // Newton polish on grad C = 0
    Eigen::Vector3d g = grad(z);
    const double hstep = 1e-4 * R;
    for (int it = 0; it < 8 && g.norm() > 1e-13 * scale; ++it) {
        Eigen::Matrix3d H;
        for (int i = 0; i < 3; ++i) {
            Vec3 zp = z, zm = z;
            zp[i] += hstep;
            zm[i] -= hstep;
            H.col(i) = (grad(zp) - grad(zm)) / (2.0 * hstep);
        }
        Eigen::Vector3d dz = H.fullPivLu().solve(-g);
        Vec3 zn{z[0] + dz[0], z[1] + dz[1], z[2] + dz[2]};
        Eigen::Vector3d gn = grad(zn);
        if (!(gn.norm() < g.norm())) break;
        z = zn;
        g = gn;
    }

    ShiftResult out;
    out.z = z;
    for (int i = 0; i < 3; ++i) out.residuals[i] = scale > 0.0 ? g[i] / scale : g[i];
    out.converged = g.norm() <= 1e-6 * scale;
    if (phi.terms.size() == 1 && phi.terms[0].coef == 1.0) {
        const Vec3& c = phi.terms[0].centre;
        out.distance = potential_distance(phi.terms[0].phi, m.phi, {z[0] - c[0], z[1] - c[1], z[2] - c[2]}).dist_grad;
    } else {
        TranslatedField D = phi;
        D.terms.push_back({m.phi, z, -1.0});
        out.distance = std::sqrt(std::max(0.0, field_gradient_norm2(D, 48)));
    }
    return out;
}

ShiftResult modulation_shift(const Potential& phi, const SteadyStateModel& m, std::size_t n) {
    TranslatedField F;
    F.terms.push_back({phi, {0, 0, 0}, 1.0});
    return modulation_shift(F, m, n);
}

}  // namespace vps
