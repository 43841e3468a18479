#include "vps/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vps {

namespace {

// (b^p - a^p) / (b - a) for p = 2, 3, 5, written without cancellation
double diff2(double a, double b) { return (b - a) * (a + b); }
double diff3(double a, double b) { return (b - a) * (b * b + a * b + a * a); }
double diff5(double a, double b) {
    double a2 = a * a, b2 = b * b;
    return (b - a) * (b2 * b2 + b2 * b * a + b2 * a2 + b * a2 * a + a2 * a2);
}

std::size_t cell_of(const std::vector<double>& edges, double r) {
    auto it = std::upper_bound(edges.begin(), edges.end(), r);
    std::size_t k = it == edges.begin() ? 0 : std::size_t(it - edges.begin()) - 1;
    return std::min(k, edges.size() - 2);
}

// rho: mass per volume of each cell; rho_s: the same cell's int rho s ds / int s ds.
// With rho_s == rho this is the exact field of a shell-wise constant density.
PotentialX solve_impl(const RadialGrid& grid, const std::vector<double>& rho, const std::vector<double>& rho_s) {
    const std::size_t n = grid.size();
    if (rho.size() != n || rho_s.size() != n) throw std::invalid_argument("density and grid sizes differ");
    PotentialX P;
    P.grid = grid;
    P.density = rho;
    const auto& E = grid.edges;
    P.mass_edges.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) P.mass_edges[i + 1] = P.mass_edges[i] + rho[i] * grid.volumes[i];
    P.mass = P.mass_edges[n];

    // outer[k] = int_{E_k}^inf rho s ds
    std::vector<double> outer(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) outer[i] = outer[i + 1] + 0.5 * rho_s[i] * diff2(E[i], E[i + 1]);

    P.phi_edges.assign(n + 1, 0.0);
    std::vector<double> dphi(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
        double r = E[k];
        P.phi_edges[k] = (r > 0.0 ? -P.mass_edges[k] / (4.0 * pi * r) : 0.0) - outer[k];
        dphi[k] = r > 0.0 ? P.mass_edges[k] / (4.0 * pi * r * r) : 0.0;
    }

    P.phi_avg.assign(n, 0.0);
    double fe = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = E[i], b = E[i + 1];
        double c = 4.0 * pi * rho[i] / 3.0;
        double d = P.mass_edges[i] - c * a * a * a;
        double V = grid.volumes[i];
        double I1 = c * diff5(a, b) / 5.0 + d * diff2(a, b) / 2.0;
        double I2 = 2.0 * pi * rho_s[i] * (b * b * diff3(a, b) / 3.0 - diff5(a, b) / 5.0);
        P.phi_avg[i] = -(I1 + I2) / V - outer[i + 1];
        double cell = c * c * diff5(a, b) / 5.0 + c * d * diff2(a, b);
        if (a > 0.0) cell += d * d * (b - a) / (a * b);
        fe += cell;
    }
    fe += P.mass * P.mass / E[n];
    P.field_energy = fe / (8.0 * pi);

    P.phi = Potential(E, P.phi_edges, dphi, P.mass);
    P.min_phi = *std::min_element(P.phi_edges.begin(), P.phi_edges.end());
    double m = P.mass > 0.0 ? P.mass / (4.0 * pi) : 0.0;
    for (std::size_t k = 0; k <= n; ++k) m = std::min(m, (1.0 + E[k]) * std::max(0.0, -P.phi_edges[k]));
    P.m_phi = std::max(0.0, m);
    P.density_s = rho_s;
    return P;
}

}  // namespace

PotentialX solve_poisson_signed(const RadialGrid& grid, const std::vector<double>& rho) {
    return solve_impl(grid, rho, rho);
}

PotentialX solve_poisson_radial(const RadialGrid& grid, const std::vector<double>& rho) {
    for (double v : rho)
        if (v < 0.0) throw std::invalid_argument("density must be nonnegative");
    PotentialX P = solve_poisson_signed(grid, rho);
    if (!(P.mass > 0.0)) throw DegenerateInput("zero total mass: the potential is not in the class X");
    return P;
}

PotentialX solve_poisson_radial(const RadialProfile& rho) { return solve_poisson_radial(rho.grid, rho.values); }

PotentialX solve_poisson_radial(const RadialGrid& grid, const std::function<double(double)>& rho) {
    std::vector<double> avg(grid.size()), avg_s(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double a = grid.edges[i], b = grid.edges[i + 1];
        double m = 4.0 * pi * gauss_integrate([&](double r) { return rho(r) * r * r; }, a, b, 8);
        double s = gauss_integrate([&](double r) { return rho(r) * r; }, a, b, 8);
        if (avg[i] = m / grid.volumes[i]; avg[i] < 0.0) throw std::invalid_argument("density must be nonnegative");
        avg_s[i] = 2.0 * s / diff2(a, b);
    }
    PotentialX P = solve_impl(grid, avg, avg_s);
    if (!(P.mass > 0.0)) throw DegenerateInput("zero total mass: the potential is not in the class X");
    return P;
}

double PotentialX::enclosed_mass(double r) const {
    r = std::abs(r);
    const auto& E = grid.edges;
    if (r >= E.back()) return mass;
    std::size_t i = cell_of(E, r);
    double a = E[i];
    return mass_edges[i] + 4.0 * pi / 3.0 * density[i] * (r - a) * (r * r + r * a + a * a);
}

double PotentialX::value(double r) const {
    r = std::abs(r);
    const auto& E = grid.edges;
    if (r >= E.back()) return -mass / (4.0 * pi * r);
    std::size_t i = cell_of(E, r);
    double b = E[i + 1];
    // phi(b) = -M_b/(4 pi b) - outer(b)
    double outer_next = -phi_edges[i + 1] - mass_edges[i + 1] / (4.0 * pi * b);
    double head = r > 0.0 ? -enclosed_mass(r) / (4.0 * pi * r) : 0.0;
    return head - 0.5 * density_s[i] * (b - r) * (b + r) - outer_next;
}

double PotentialX::derivative(double r) const {
    r = std::abs(r);
    if (r == 0.0) return 0.0;
    return enclosed_mass(r) / (4.0 * pi * r * r);
}

double field_energy(const PotentialX& phi) { return phi.field_energy; }

double field_energy(const Potential& phi) { return 0.5 * phi.gradient_norm2(); }

Membership check_X_membership(const Potential& phi) {
    Membership out;
    if (phi.empty()) return out;
    const auto& r = phi.nodes();
    const auto& v = phi.values();
    bool nonpositive = true;
    double m = phi.mass() > 0.0 ? phi.mass() / (4.0 * pi) : 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (v[k] > 0.0) nonpositive = false;
        m = std::min(m, (1.0 + r[k]) * std::max(0.0, -v[k]));
        if (k + 1 < r.size()) {
            double x = 0.5 * (r[k] + r[k + 1]);
            double p = phi(x);
            if (p > 0.0) nonpositive = false;
            m = std::min(m, (1.0 + x) * std::max(0.0, -p));
        }
    }
    out.m_phi = std::max(0.0, m);
    const double R = phi.r_max();
    const double kepler = -phi.mass() / (4.0 * pi * R);
    bool decay = phi.mass() > 0.0 && v.back() >= kepler * (1.0 + 1e-6);
    out.is_member = nonpositive && out.m_phi > 0.0 && decay;
    return out;
}

Membership check_X_membership(const PotentialX& phi) {
    Membership out = check_X_membership(phi.phi);
    out.m_phi = std::min(out.m_phi, phi.m_phi);
    return out;
}

std::vector<double> cell_averages(const Potential& phi, const RadialGrid& grid) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double a = grid.edges[i], b = grid.edges[i + 1];
        out[i] = 4.0 * pi * gauss_integrate([&](double r) { return phi(r) * r * r; }, a, b, 8) / grid.volumes[i];
    }
    return out;
}

double TranslatedField::value(const Vec3& x) const {
    double s = 0.0;
    for (const auto& t : terms) {
        double dx = x[0] - t.centre[0], dy = x[1] - t.centre[1], dz = x[2] - t.centre[2];
        s += t.coef * t.phi(std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    return s;
}

Vec3 TranslatedField::gradient(const Vec3& x) const {
    Vec3 g{0, 0, 0};
    for (const auto& t : terms) {
        double dx = x[0] - t.centre[0], dy = x[1] - t.centre[1], dz = x[2] - t.centre[2];
        double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (r == 0.0) continue;
        double s = t.coef * t.phi.derivative(r) / r;
        g[0] += s * dx;
        g[1] += s * dy;
        g[2] += s * dz;
    }
    return g;
}

double TranslatedField::mass() const {
    double m = 0.0;
    for (const auto& t : terms) m += t.coef * t.phi.mass();
    return m;
}

Vec3 TranslatedField::barycentre() const {
    Vec3 c{0, 0, 0};
    double m = 0.0;
    for (const auto& t : terms) {
        double w = t.coef * t.phi.mass();
        for (int k = 0; k < 3; ++k) c[k] += w * t.centre[k];
        m += w;
    }
    if (m != 0.0)
        for (double& v : c) v /= m;
    return c;
}

double TranslatedField::extent() const {
    double R = 0.0;
    for (const auto& t : terms) {
        double zc = std::sqrt(t.centre[0] * t.centre[0] + t.centre[1] * t.centre[1] + t.centre[2] * t.centre[2]);
        R = std::max(R, zc + t.phi.r_max());
    }
    return R;
}

BallRule ball_rule(const Vec3& centre, double radius, std::size_t n) {
    BallRule b;
    b.centre = centre;
    b.radius = radius;
    const GaussRule& g = gauss_legendre(n);
    b.x.reserve(n * n * n);
    b.w.reserve(n * n * n);
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.5 * radius * (g.x[i] + 1.0);
        double wr = 0.5 * radius * g.w[i] * r * r;
        for (std::size_t j = 0; j < n; ++j) {
            double ct = g.x[j], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
            for (std::size_t k = 0; k < n; ++k) {
                double az = 2.0 * pi * (double(k) + 0.5) / double(n);
                b.x.push_back({centre[0] + r * st * std::cos(az), centre[1] + r * st * std::sin(az), centre[2] + r * ct});
                b.w.push_back(wr * g.w[j] * 2.0 * pi / double(n));
            }
        }
    }
    return b;
}

namespace {

std::vector<double> merged_nodes(const Potential& a, const Potential& b) {
    std::vector<double> r;
    std::merge(a.nodes().begin(), a.nodes().end(), b.nodes().begin(), b.nodes().end(), std::back_inserter(r));
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

}  // namespace

PotentialDistance potential_distance(const Potential& phi1, const Potential& phi2, const Vec3& z, std::size_t n) {
    PotentialDistance out;
    const double zn = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
    if (zn == 0.0) {
        std::vector<double> r = merged_nodes(phi1, phi2);
        const GaussRule& g = gauss_legendre(4);
        double s = 0.0, sup = 0.0;
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
            double c = 0.5 * (r[i] + r[i + 1]), h = 0.5 * (r[i + 1] - r[i]);
            for (std::size_t k = 0; k < g.x.size(); ++k) {
                double x = c + h * g.x[k];
                double d = phi1.derivative(x) - phi2.derivative(x);
                s += g.w[k] * h * d * d * x * x;
            }
            sup = std::max(sup, std::abs(phi1(r[i]) - phi2(r[i])));
            sup = std::max(sup, std::abs(phi1(c) - phi2(c)));
        }
        sup = std::max(sup, std::abs(phi1(r.back()) - phi2(r.back())));
        double dm = phi1.mass() - phi2.mass();
        out.dist_grad = std::sqrt(4.0 * pi * s + dm * dm / (4.0 * pi * r.back()));
        out.dist_inf = sup;
        return out;
    }
    TranslatedField F;
    F.terms.push_back({phi1, {0, 0, 0}, 1.0});
    F.terms.push_back({phi2, z, -1.0});
    Vec3 c{0.5 * z[0], 0.5 * z[1], 0.5 * z[2]};
    double R = std::max(phi1.r_max(), phi2.r_max()) + 0.5 * zn;
    BallRule b = ball_rule(c, R, n);
    double s = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < b.x.size(); ++k) {
        Vec3 gr = F.gradient(b.x[k]);
        s += b.w[k] * (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]);
        sup = std::max(sup, std::abs(F.value(b.x[k])));
    }
    // the extremes sit on the line through both centres
    const std::size_t line = 4001;
    for (std::size_t k = 0; k < line; ++k) {
        double t = -R + 2.0 * R * double(k) / double(line - 1);
        Vec3 x{c[0] + t * z[0] / zn, c[1] + t * z[1] / zn, c[2] + t * z[2] / zn};
        sup = std::max(sup, std::abs(F.value(x)));
    }
    double dm = phi1.mass() - phi2.mass();
    double p = (phi1.mass() + phi2.mass()) * 0.5 * zn;
    s += dm * dm / (4.0 * pi * R) + p * p / (6.0 * pi * R * R * R);
    out.dist_grad = std::sqrt(s);
    out.dist_inf = sup;
    return out;
}

}  // namespace vps
