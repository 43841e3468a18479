#include "vps/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace vps {

double DistributionFunction::operator()(double s) const {
    if (s < 0.0) return total;
    if (levels.empty() || s >= sup) return 0.0;
    // first index with levels[k] <= s (levels decreasing)
    auto it = std::lower_bound(levels.begin(), levels.end(), s, [](double a, double b) { return a > b; });
    std::size_t k = std::size_t(it - levels.begin());
    if (!row_linear) return measures[k == 0 ? 0 : k - 1];
    if (k >= levels.size()) return measures.back();
    if (levels[k] == s) return measures[k];
    double s0 = levels[k], s1 = levels[k - 1];
    double m0 = measures[k], m1 = measures[k - 1];
    return m0 + (m1 - m0) * (s - s0) / (s1 - s0);
}

double DistributionFunction::support() const { return measures.empty() ? 0.0 : measures.back(); }

DistributionFunction distribution_function(const PhaseSpaceDensity& f) {
    const PhaseSpaceGrid& g = f.grid;
    std::vector<std::size_t> idx(f.f.size());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f.f[a] > f.f[b]; });
    DistributionFunction mu;
    mu.total = g.radial.volumes.empty() ? 0.0 : std::accumulate(g.radial.volumes.begin(), g.radial.volumes.end(), 0.0) *
                                                     std::accumulate(g.speeds.volumes.begin(), g.speeds.volumes.end(), 0.0);
    double cum = 0.0;
    for (std::size_t q = 0; q < idx.size(); ++q) {
        std::size_t c = idx[q];
        double v = f.f[c];
        if (!(v > 0.0)) break;
        cum += g.weight(c / g.n_u(), c % g.n_u());
        if (mu.levels.empty() || v != mu.levels.back()) {
            mu.levels.push_back(v);
            mu.measures.push_back(cum);
        } else {
            mu.measures.back() = cum;
        }
    }
    mu.sup = mu.levels.empty() ? 0.0 : mu.levels.front();
    return mu;
}

DistributionFunction distribution_function_linear(const PhaseSpaceDensity& f) {
    const PhaseSpaceGrid& g = f.grid;
    DistributionFunction mu;
    mu.row_linear = true;
    std::vector<double> asc;
    asc.reserve(f.f.size() + 1);
    for (double v : f.f)
        if (v > 0.0) asc.push_back(v);
    asc.push_back(0.0);
    std::sort(asc.begin(), asc.end());
    asc.erase(std::unique(asc.begin(), asc.end()), asc.end());
    const std::size_t K = asc.size();

    std::vector<double> full(K + 1, 0.0), part(K, 0.0);
    const std::size_t nu = g.n_u();
    std::vector<double> U(nu + 2), F(nu + 2);
    const double u_top = g.speeds.edges.back();
    const double c43 = 4.0 * pi / 3.0;
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        const double V = g.radial.volumes[i];
        U[0] = 0.0;
        F[0] = f.at(i, 0);
        for (std::size_t j = 0; j < nu; ++j) {
            U[j + 1] = g.speeds.nodes[j];
            F[j + 1] = f.at(i, j);
        }
        U[nu + 1] = u_top;
        F[nu + 1] = 0.0;
        for (std::size_t q = 0; q + 1 < U.size(); ++q) {
            double a = U[q], b = U[q + 1], p = F[q], r = F[q + 1];
            if (b <= a) continue;
            if (p > 0.0 && r == 0.0 && q >= 1 && F[q - 1] > p) {
                double uc = a + p * (a - U[q - 1]) / (F[q - 1] - p);
                if (uc < b) b = uc;
            }
            double lo = std::min(p, r), hi = std::max(p, r);
            double whole = V * c43 * (b * b * b - a * a * a);
            std::size_t klo = std::size_t(std::lower_bound(asc.begin(), asc.end(), lo) - asc.begin());
            std::size_t khi = std::size_t(std::lower_bound(asc.begin(), asc.end(), hi) - asc.begin());
            full[0] += whole;
            full[klo] -= whole;
            for (std::size_t k = klo; k < khi; ++k) {
                double s = asc[k];
                double uc = a + (s - p) / (r - p) * (b - a);
                double m = p > s ? uc * uc * uc - a * a * a : b * b * b - uc * uc * uc;
                part[k] += V * c43 * m;
            }
        }
    }
    std::vector<double> mu_asc(K);
    double run = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        run += full[k];
        mu_asc[k] = run + part[k];
    }
    mu.levels.assign(asc.rbegin(), asc.rend());
    mu.measures.assign(mu_asc.rbegin(), mu_asc.rend());
    mu.sup = mu.levels.front();
    double tr = 0.0, tu = 0.0;
    for (double v : g.radial.volumes) tr += v;
    for (double v : g.speeds.volumes) tu += v;
    mu.total = tr * tu;
    return mu;
}

void MonotoneRearrangement::finalize() {
    prefix.assign(t.size(), 0.0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        double h = t[k + 1] - t[k];
        double seg = kind == Kind::step ? value[k] * h : 0.5 * (value[k] + value[k + 1]) * h;
        prefix[k + 1] = prefix[k] + seg;
    }
}

double MonotoneRearrangement::operator()(double s) const {
    if (t.empty()) return 0.0;
    if (s < 0.0) return sup();
    if (s >= t.back()) return 0.0;
    std::size_t k = std::size_t(std::upper_bound(t.begin(), t.end(), s) - t.begin()) - 1;
    if (kind == Kind::step) return value[k];
    return value[k] + (value[k + 1] - value[k]) * (s - t[k]) / (t[k + 1] - t[k]);
}

double MonotoneRearrangement::primitive(double s) const {
    if (t.empty() || s <= 0.0) return 0.0;
    if (s >= t.back()) return mass();
    std::size_t k = std::size_t(std::upper_bound(t.begin(), t.end(), s) - t.begin()) - 1;
    if (kind == Kind::step) return prefix[k] + value[k] * (s - t[k]);
    return prefix[k] + 0.5 * (s - t[k]) * (value[k] + (*this)(s));
}

double MonotoneRearrangement::measure_above(double s) const {
    if (t.empty() || s >= sup()) return 0.0;
    // last index with value > s
    auto it = std::lower_bound(value.begin(), value.end(), s, [](double a, double b) { return a > b; });
    std::size_t k = std::size_t(it - value.begin());  // first index with value <= s
    if (kind == Kind::step) return t[k];
    if (k >= value.size()) return t.back();
    std::size_t j = k - 1;
    return t[j] + (value[j] - s) / (value[j] - value[k]) * (t[k] - t[j]);
}

double MonotoneRearrangement::integral(const std::function<double(double)>& beta) const {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        double a = t[k], b = t[k + 1];
        if (b <= a) continue;
        if (kind == Kind::step) {
            s += beta(value[k]) * (b - a);
        } else {
            double va = value[k], vb = value[k + 1];
            s += gauss_integrate([&](double x) { return beta(va + (vb - va) * (x - a) / (b - a)); }, a, b, 8);
        }
    }
    return s;
}

namespace {

// values on the open piece (x0, x1) that contains no breakpoint: right limit at x0, left limit at x1
std::pair<double, double> piece_values(const MonotoneRearrangement& f, double x0, double x1) {
    if (f.t.empty() || x0 >= f.t.back()) return {0.0, 0.0};
    double mid = 0.5 * (x0 + x1);
    std::size_t k = std::size_t(std::upper_bound(f.t.begin(), f.t.end(), mid) - f.t.begin()) - 1;
    if (f.kind == MonotoneRearrangement::Kind::step) return {f.value[k], f.value[k]};
    double a = f.t[k], b = f.t[k + 1], va = f.value[k], vb = f.value[k + 1];
    return {va + (vb - va) * (x0 - a) / (b - a), va + (vb - va) * (x1 - a) / (b - a)};
}

}  // namespace

double MonotoneRearrangement::l1_distance(const MonotoneRearrangement& g) const {
    std::vector<double> x;
    std::merge(t.begin(), t.end(), g.t.begin(), g.t.end(), std::back_inserter(x));
    x.erase(std::unique(x.begin(), x.end()), x.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        double a = x[k], b = x[k + 1];
        if (b <= a) continue;
        auto [f0, f1] = piece_values(*this, a, b);
        auto [g0, g1] = piece_values(g, a, b);
        double d0 = f0 - g0, d1 = f1 - g1;
        if (d0 * d1 >= 0.0) s += 0.5 * (std::abs(d0) + std::abs(d1)) * (b - a);
        else s += 0.5 * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1)) * (b - a);
    }
    return s;
}

MonotoneRearrangement schwarz_rearrangement(const DistributionFunction& mu) {
    MonotoneRearrangement r;
    if (mu.levels.empty()) return zero_rearrangement();
    if (!mu.row_linear) {
        r.kind = MonotoneRearrangement::Kind::step;
        r.t.push_back(0.0);
        for (std::size_t k = 0; k < mu.levels.size(); ++k) {
            r.t.push_back(mu.measures[k]);
            r.value.push_back(mu.levels[k]);
        }
    } else {
        r.kind = MonotoneRearrangement::Kind::linear;
        r.t.push_back(0.0);
        r.value.push_back(mu.sup);
        for (std::size_t k = 0; k < mu.levels.size(); ++k) {
            if (mu.measures[k] <= 0.0) continue;
            double tk = std::max(mu.measures[k], r.t.back());
            r.t.push_back(tk);
            r.value.push_back(mu.levels[k]);
        }
    }
    r.finalize();
    return r;
}

MonotoneRearrangement zero_rearrangement() {
    MonotoneRearrangement r;
    r.kind = MonotoneRearrangement::Kind::step;
    r.t = {0.0};
    r.finalize();
    return r;
}

namespace {

// int_0^inf (e - phi)_+^p g(r) r^2 dr, with g(r) = ext_coef r^ext_pow beyond the table
double energy_moment(const Potential& phi, double e, double p, const std::function<double(double)>& g,
                     double ext_coef, double ext_pow, std::size_t n = 96) {
    if (e <= phi.min()) return 0.0;
    if (e >= 0.0) return std::numeric_limits<double>::infinity();
    const double R = phi.r_max();
    auto integrand = [&](double r) {
        double w = e - phi(r);
        return w > 0.0 ? std::pow(w, p) * g(r) * r * r : 0.0;
    };
    if (e < phi.values().back()) return gauss_integrate_sqrt_end(integrand, 0.0, phi.inverse(e), n);
    const std::size_t panels = 32;
    double s = 0.0;
    for (std::size_t k = 0; k < panels; ++k)
        s += gauss_integrate(integrand, R * double(k) / panels, R * double(k + 1) / panels, 12);
    const double kk = phi.mass() / (4.0 * pi);
    const double E = -e, re = kk / E, xa = R / re;
    if (xa < 1.0 && ext_coef != 0.0) {
        const double m = 2.0 + ext_pow;
        const double A = m - p + 1.0, B = p + 1.0;
        s += ext_coef * std::pow(E, p) * std::pow(re, m + 1.0) * boost::math::beta(A, B) * boost::math::ibetac(A, B, xa);
    }
    return s;
}

double one(double) { return 1.0; }

}  // namespace

double jacobian_direct(const Potential& phi, double e) {
    if (e <= phi.min()) return 0.0;
    if (e >= 0.0) return std::numeric_limits<double>::infinity();
    return 8.0 * pi * sqrt2 / 3.0 * 4.0 * pi * energy_moment(phi, e, 1.5, one, 1.0, 0.0);
}

double jacobian_derivative_direct(const Potential& phi, double e) {
    if (e <= phi.min()) return 0.0;
    if (e >= 0.0) return std::numeric_limits<double>::infinity();
    return 4.0 * pi * sqrt2 * 4.0 * pi * energy_moment(phi, e, 0.5, one, 1.0, 0.0);
}

double jacobian_second_direct(const Potential& phi, double e) {
    if (e <= phi.min()) return 0.0;
    if (e >= 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * pi * sqrt2 * 4.0 * pi * energy_moment(phi, e, -0.5, one, 1.0, 0.0);
}

double jacobian_fine(const Potential& phi, double e, int order) {
    if (e <= phi.min()) return 0.0;
    if (e >= 0.0) return std::numeric_limits<double>::infinity();
    const double p = 1.5 - order;
    const double pref = order == 0 ? 8.0 * pi * sqrt2 / 3.0 : order == 1 ? 4.0 * pi * sqrt2 : 2.0 * pi * sqrt2;
    const auto& r = phi.nodes();
    const GaussRule& g = gauss_legendre(4);
    const bool inside = e < phi.values().back();
    const double re = inside ? phi.inverse(e) : r.back();
    auto term = [&](double x) {
        double w = e - phi(x);
        return w > 0.0 ? std::pow(w, p) * x * x : 0.0;
    };
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < r.size() && r[k] < re; ++k) {
        double a = r[k], b = r[k + 1];
        if (inside && b >= re) {
            s += gauss_integrate_sqrt_end(term, a, re, 8);
            break;
        }
        double c = 0.5 * (a + b), h = 0.5 * (b - a), t = 0.0;
        for (std::size_t q = 0; q < g.x.size(); ++q) t += g.w[q] * term(c + h * g.x[q]);
        s += t * h;
    }
    if (!inside) {
        const double kk = phi.mass() / (4.0 * pi);
        const double E = -e, rk = kk / E, xa = r.back() / rk;
        if (xa < 1.0) {
            const double A = 3.0 - p, B = p + 1.0;
            s += std::pow(E, p) * std::pow(rk, 3.0) * boost::math::beta(A, B) * boost::math::ibetac(A, B, xa);
        }
    }
    return pref * 4.0 * pi * s;
}

double jacobian_fine_inverse(const Potential& phi, double s, double guess) {
    if (!(s > 0.0)) return phi.min();
    double a = phi.min(), b = 0.0;
    double x = guess > a && guess < b ? guess : 0.5 * a;
    for (int it = 0; it < 200; ++it) {
        double gx = jacobian_fine(phi, x, 0) - s;
        if (gx == 0.0) return x;
        if (gx > 0.0) b = x; else a = x;
        double d = jacobian_fine(phi, x, 1);
        double xn = d > 0.0 ? x - gx / d : 0.5 * (a + b);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        if (std::abs(xn - x) <= 1e-15 * std::abs(x) || b - a <= 1e-15 * std::abs(x)) return xn;
        x = xn;
    }
    return x;
}

JacobianMap::JacobianMap(Potential phi, std::size_t nodes) : phi_(std::move(phi)) {
    if (nodes < 16) throw std::invalid_argument("too few Jacobian nodes");
    const double e_min = phi_.min();
    e_.resize(nodes);
    b_.resize(nodes);
    db_.resize(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        double t = double(k) / double(nodes - 1);
        double x = t - std::sin(2.0 * pi * t) / (2.0 * pi);
        e_[k] = e_min * (1.0 - x);
    }
    e_.front() = e_min;
    e_.back() = 0.0;
    const double kk = phi_.mass() / (4.0 * pi);
    for (std::size_t k = 0; k < nodes; ++k) {
        double e = e_[k];
        if (k == 0) {
            b_[k] = 0.0;
            db_[k] = 0.0;
        } else if (k + 1 == nodes) {
            b_[k] = 8.0 * pi * sqrt2 / 3.0 * 4.0 * pi * kk * kk * kk * boost::math::beta(1.5, 2.5);
            db_[k] = 0.0;
        } else {
            double E = -e;
            double a = jacobian_direct(phi_, e), da = jacobian_derivative_direct(phi_, e);
            b_[k] = a * std::pow(E, 1.5);
            db_[k] = da * std::pow(E, 1.5) - 1.5 * a * std::sqrt(E);
        }
    }
    e_low_ = e_min * 0.85;
    a_low_ = jacobian_direct(phi_, e_low_);
}

double JacobianMap::scaled(double e, double* deriv) const {
    std::size_t k = std::size_t(std::upper_bound(e_.begin(), e_.end(), e) - e_.begin());
    k = k == 0 ? 0 : k - 1;
    if (k + 1 >= e_.size()) k = e_.size() - 2;
    if (deriv) *deriv = Hermite::deriv(e_[k], e_[k + 1], b_[k], b_[k + 1], db_[k], db_[k + 1], e);
    return Hermite::value(e_[k], e_[k + 1], b_[k], b_[k + 1], db_[k], db_[k + 1], e);
}

double JacobianMap::operator()(double e) const {
    if (e <= e_.front()) return 0.0;
    if (e >= 0.0) return std::numeric_limits<double>::infinity();
    if (e < e_low_) return jacobian_direct(phi_, e);
    return scaled(e, nullptr) / std::pow(-e, 1.5);
}

double JacobianMap::inverse(double s) const {
    if (!(s > 0.0)) return e_.front();
    if (std::isinf(s)) return 0.0;
    if (s < a_low_) {
        double a = e_.front(), b = e_low_, x = 0.5 * (a + b);
        for (int it = 0; it < 200; ++it) {
            double gx = jacobian_direct(phi_, x) - s;
            if (gx == 0.0) return x;
            if (gx > 0.0) b = x; else a = x;
            double d = jacobian_derivative_direct(phi_, x);
            double xn = d > 0.0 ? x - gx / d : 0.5 * (a + b);
            if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
            if (std::abs(xn - x) <= 4e-16 * std::abs(x) || b - a <= 4e-16 * std::abs(x)) return xn;
            x = xn;
        }
        return x;
    }
    // bracket among the nodes
    std::size_t lo = 0, hi = e_.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        double am = b_[mid] / std::pow(-e_[mid], 1.5);
        if (am <= s) lo = mid; else hi = mid;
    }
    double a = e_[lo], b = e_[hi];
    auto g = [&](double e, double* d) {
        double db;
        double v = scaled(e, &db);
        double E = -e;
        double w = std::pow(E, 1.5);
        if (d) *d = db + 1.5 * s * std::sqrt(E);
        return v - s * w;
    };
    double x = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        double d;
        double gx = g(x, &d);
        if (gx == 0.0) return x;
        if (gx > 0.0) b = x; else a = x;
        double xn = d > 0.0 ? x - gx / d : 0.5 * (a + b);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        if (std::abs(xn - x) <= 4e-16 * std::abs(x) || b - a <= 4e-16 * std::abs(x)) return xn;
        x = xn;
    }
    return x;
}

JacobianMap jacobian_a(const Potential& phi, std::size_t nodes) {
    Membership m = check_X_membership(phi);
    if (!m.is_member) throw std::invalid_argument("potential is not in the class X");
    if (!phi.nondecreasing()) throw std::invalid_argument("potential must be nondecreasing in r");
    return JacobianMap(phi, nodes);
}

PhaseSpaceDensity generalized_rearrangement(const MonotoneRearrangement& fstar, const JacobianMap& jac,
                                            const PhaseSpaceGrid& grid) {
    PhaseSpaceDensity d;
    d.grid = grid;
    d.f.assign(grid.cells(), 0.0);
    const Potential& phi = jac.potential();
    for (std::size_t i = 0; i < grid.n_r(); ++i) {
        double p = phi(grid.radial.nodes[i]);
        for (std::size_t j = 0; j < grid.n_u(); ++j) {
            double u = grid.speeds.nodes[j];
            double e = 0.5 * u * u + p;
            if (e < 0.0) d.at(i, j) = fstar(jac(e));
        }
    }
    return d;
}

std::vector<double> cell_energies(const PhaseSpaceGrid& grid, const std::vector<double>& phi_cell_avg) {
    if (phi_cell_avg.size() != grid.n_r()) throw std::invalid_argument("potential averages do not match the grid");
    std::vector<double> e(grid.cells());
    for (std::size_t i = 0; i < grid.n_r(); ++i)
        for (std::size_t j = 0; j < grid.n_u(); ++j) e[grid.index(i, j)] = 0.5 * grid.mean_u2(j) + phi_cell_avg[i];
    return e;
}

PhaseSpaceDensity bathtub_rearrangement(const MonotoneRearrangement& fstar, const PhaseSpaceGrid& grid,
                                        const std::vector<double>& phi_cell_avg) {
    if (fstar.kind != MonotoneRearrangement::Kind::step)
        throw std::invalid_argument("discrete bathtub needs the cell-level rearrangement");
    std::vector<double> eps = cell_energies(grid, phi_cell_avg);
    std::vector<std::size_t> order(eps.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps[a] < eps[b]; });

    PhaseSpaceDensity d;
    d.grid = grid;
    d.f.assign(grid.cells(), 0.0);
    const auto& t = fstar.t;
    const auto& v = fstar.value;
    const std::size_t n = v.size();
    const double T_end = t.back();
    const double tol = 1e-13 * std::max(T_end, 1e-300);
    std::size_t m = 0;
    double A = 0.0;
    for (std::size_t c : order) {
        if (A >= T_end - tol) break;
        double w = grid.weight(c / grid.n_u(), c % grid.n_u());
        double B = A + w;
        while (m < n && t[m + 1] <= A + tol) ++m;
        double acc = 0.0;
        int pieces = 0;
        std::size_t last = 0;
        for (std::size_t q = m; q < n && t[q] < B - tol; ++q) {
            double ov = std::min(B, t[q + 1]) - std::max(A, t[q]);
            if (ov > tol) {
                acc += v[q] * ov;
                ++pieces;
                last = q;
            }
        }
        bool tail = B > T_end + tol;
        if (pieces == 1 && !tail) d.f[c] = v[last];
        else d.f[c] = acc / w;
        A = B;
    }
    return d;
}

PhaseSpaceDensity bathtub_rearrangement(const PhaseSpaceDensity& f, const PotentialX& phi) {
    std::vector<double> avg = phi.grid.edges == f.grid.radial.edges ? phi.phi_avg : cell_averages(phi.phi, f.grid.radial);
    return bathtub_rearrangement(schwarz_rearrangement(distribution_function(f)), f.grid, avg);
}

double pseudo_inverse_level(const MonotoneRearrangement& fstar, const JacobianMap& jac, double s) {
    if (!(s > 0.0 && s < fstar.sup())) throw std::out_of_range("level outside (0, sup f)");
    double t = fstar.measure_above(s);
    if (t <= 0.0) return jac.min_energy();
    return jac.inverse(t);
}

double path_derivative_a(const Potential& phi, const Potential& phitilde, double lambda, double e) {
    if (e >= 0.0) throw std::domain_error("energy must be negative");
    Potential pl = Potential::combine(1.0 - lambda, phi, lambda, phitilde);
    auto h = [&](double r) { return phitilde(r) - phi(r); };
    double dk = (phitilde.mass() - phi.mass()) / (4.0 * pi);
    return -4.0 * pi * sqrt2 * 4.0 * pi * energy_moment(pl, e, 0.5, h, -dk, -1.0);
}

MonotoneRearrangement rearrangement_from_profile(const ProfileF& F, const JacobianMap& jac, std::size_t n) {
    MonotoneRearrangement r;
    r.kind = MonotoneRearrangement::Kind::linear;
    const double lo = jac.min_energy(), hi = std::min(F.e0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double t = double(k) / double(n - 1);
        double x = t - std::sin(2.0 * pi * t) / (2.0 * pi);
        double e = lo + (hi - lo) * x;
        double s = k == 0 ? 0.0 : jac(e);
        if (k > 0 && s <= r.t.back()) continue;
        r.t.push_back(s);
        r.value.push_back(F.evaluate(e));
    }
    r.finalize();
    return r;
}

PhaseSpaceDensity scramble_equimeasurable(const PhaseSpaceDensity& f, std::uint64_t seed) {
    const PhaseSpaceGrid& g = f.grid;
    std::vector<std::size_t> idx(g.cells());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    auto w = [&](std::size_t c) { return g.weight(c / g.n_u(), c % g.n_u()); };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return w(a) < w(b); });
    PhaseSpaceDensity out = f;
    std::mt19937_64 rng(seed);
    std::size_t start = 0;
    while (start < idx.size()) {
        std::size_t end = start + 1;
        while (end < idx.size() && w(idx[end]) - w(idx[start]) <= 1e-12 * w(idx[start])) ++end;
        if (end - start > 1) {
            std::vector<std::size_t> perm(idx.begin() + std::ptrdiff_t(start), idx.begin() + std::ptrdiff_t(end));
            std::shuffle(perm.begin(), perm.end(), rng);
            for (std::size_t q = start; q < end; ++q) out.f[idx[q]] = f.f[perm[q - start]];
        }
        start = end;
    }
    return out;
}

double straddle_measure(const PhaseSpaceGrid& grid, const Potential& phi, double e) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.n_r(); ++i) {
        double plo = phi(grid.radial.edges[i]), phi_hi = phi(grid.radial.edges[i + 1]);
        for (std::size_t j = 0; j < grid.n_u(); ++j) {
            double ulo = grid.speeds.edges[j], uhi = grid.speeds.edges[j + 1];
            double elo = 0.5 * ulo * ulo + plo, ehi = 0.5 * uhi * uhi + phi_hi;
            if (elo <= e && e <= ehi) s += grid.weight(i, j);
        }
    }
    return s;
}

}  // namespace vps
