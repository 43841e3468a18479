#include "vps/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

namespace vps {

Spacing parse_spacing(const std::string& s) {
    if (s == "uniform") return Spacing::uniform;
    if (s == "log") return Spacing::log;
    if (s == "graded") return Spacing::graded;
    if (s == "equal_volume") return Spacing::equal_volume;
    throw std::invalid_argument("unknown spacing '" + s + "'");
}

std::string to_string(Spacing s) {
    switch (s) {
        case Spacing::uniform: return "uniform";
        case Spacing::log: return "log";
        case Spacing::graded: return "graded";
        case Spacing::equal_volume: return "equal_volume";
    }
    return "uniform";
}

double RadialGrid::integrate_r2(const std::function<double(double)>& g) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += volumes[i] * g(nodes[i]);
    return s / (4.0 * pi);
}

double RadialGrid::max_weight() const { return *std::max_element(volumes.begin(), volumes.end()); }

RadialGrid make_radial_grid(double r_max, std::size_t n, Spacing spacing, double r_min_log) {
    if (!(r_max > 0.0)) throw std::invalid_argument("grid extent must be positive");
    if (n < 16) throw std::invalid_argument("grid needs at least 16 cells");
    RadialGrid g;
    g.r_max = r_max;
    g.spacing = spacing;
    g.edges.resize(n + 1);
    g.nodes.resize(n);
    if (spacing == Spacing::log) {
        double r_min = r_min_log > 0.0 ? r_min_log : 1e-4 * r_max;
        if (r_min >= r_max) throw std::invalid_argument("log grid needs r_min < r_max");
        double q = std::log(r_max / r_min);
        for (std::size_t i = 0; i < n; ++i) g.nodes[i] = r_min * std::exp(q * double(i) / double(n - 1));
        g.edges[0] = 0.0;
        for (std::size_t i = 1; i < n; ++i) g.edges[i] = std::sqrt(g.nodes[i - 1] * g.nodes[i]);
        g.edges[n] = r_max * std::exp(0.5 * q / double(n - 1));
        g.r_max = g.edges[n];
    } else {
        for (std::size_t i = 0; i <= n; ++i) {
            double t = double(i) / double(n);
            double x = t;
            if (spacing == Spacing::graded) x = t - 0.5 * std::sin(2.0 * pi * t) / (2.0 * pi);
            if (spacing == Spacing::equal_volume) x = std::cbrt(t);
            g.edges[i] = r_max * x;
        }
        g.edges[0] = 0.0;
        g.edges[n] = r_max;
        for (std::size_t i = 0; i < n; ++i) g.nodes[i] = 0.5 * (g.edges[i] + g.edges[i + 1]);
    }
    g.weights.resize(n);
    g.volumes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double a = g.edges[i], b = g.edges[i + 1];
        g.weights[i] = b - a;
        g.volumes[i] = 4.0 * pi / 3.0 * (b - a) * (b * b + a * b + a * a);
    }
    if (spacing == Spacing::equal_volume) g.volumes.assign(n, 4.0 * pi / 3.0 * r_max * r_max * r_max / double(n));
    return g;
}

double PhaseSpaceGrid::mean_u2(std::size_t j) const {
    double a = speeds.edges[j], b = speeds.edges[j + 1];
    double a3 = a * a * a, b3 = b * b * b;
    return 0.6 * (b3 * b * b - a3 * a * a) / (b3 - a3);
}

double PhaseSpaceGrid::measure_box(double R, double U) const {
    auto partial = [](const RadialGrid& g, double X) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double a = g.edges[i], b = std::min(g.edges[i + 1], X);
            if (b > a) s += 4.0 * pi / 3.0 * (b * b * b - a * a * a);
        }
        return s;
    };
    return partial(radial, R) * partial(speeds, U);
}

PhaseSpaceGrid make_grids(double r_max, std::size_t n_r, double u_max, std::size_t n_u, Spacing spacing) {
    PhaseSpaceGrid g;
    g.radial = make_radial_grid(r_max, n_r, spacing);
    g.speeds = make_radial_grid(u_max, n_u, spacing);
    return g;
}

const GaussRule& gauss_legendre(std::size_t n) {
    static std::mutex m;
    static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;
    if (n < 1) throw std::invalid_argument("gauss rule needs n >= 1");
    auto rule = std::make_unique<GaussRule>();
    std::vector<double> z = boost::math::legendre_p_zeros<double>(int(n));
    std::vector<double> xs;
    for (double x : z) {
        xs.push_back(x);
        if (x != 0.0) xs.push_back(-x);
    }
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
        double p = boost::math::legendre_p_prime(int(n), x);
        rule->x.push_back(x);
        rule->w.push_back(2.0 / ((1.0 - x * x) * p * p));
    }
    auto& ref = *rule;
    cache.emplace(n, std::move(rule));
    return ref;
}

double invert_monotone(const std::function<double(double)>& fn, double lo, double hi, double target) {
    double flo = fn(lo), fhi = fn(hi);
    double tol = 1e-12 * std::max(1.0, std::abs(target));
    if (target < flo - tol || target > fhi + tol) throw std::out_of_range("target outside the range of the function");
    if (std::abs(flo - target) <= tol) return lo;
    if (std::abs(fhi - target) <= tol) return hi;
    double a = lo, b = hi, fa = flo - target, fb = fhi - target;
    for (int it = 0; it < 200 && (b - a) > 1e-6 * (std::abs(a) + std::abs(b) + 1e-300); ++it) {
        double c = 0.5 * (a + b);
        double fc = fn(c) - target;
        if (std::abs(fc) <= tol) return c;
        if (fc < 0.0) { a = c; fa = fc; } else { b = c; fb = fc; }
    }
    double best = std::abs(fa) < std::abs(fb) ? a : b;
    double fbest = std::min(std::abs(fa), std::abs(fb));
    for (int it = 0; it < 100; ++it) {
        if (fb == fa) break;
        double c = b - fb * (b - a) / (fb - fa);
        if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
        double fc = fn(c) - target;
        if (std::abs(fc) < fbest) { best = c; fbest = std::abs(fc); }
        if (std::abs(fc) <= tol) return c;
        if ((fc < 0.0) == (fa < 0.0)) { a = c; fa = fc; } else { b = c; fb = fc; }
        if (b - a <= 4e-16 * (std::abs(a) + std::abs(b))) break;
    }
    return best;
}

TridiagEigen eig_tridiag(const std::vector<double>& diag, const std::vector<double>& offdiag, std::size_t k) {
    const std::size_t n = diag.size();
    if (n == 0 || offdiag.size() + 1 != n) throw std::invalid_argument("tridiagonal dimension mismatch");
    if (k > n) throw std::invalid_argument("requested more eigenpairs than the dimension");
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), Eigen::Index(n));
    Eigen::VectorXd e(Eigen::Index(n > 1 ? n - 1 : 0));
    for (std::size_t i = 0; i + 1 < n; ++i) e[Eigen::Index(i)] = offdiag[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw std::runtime_error("tridiagonal eigensolver failed");
    TridiagEigen out;
    out.values = es.eigenvalues().head(Eigen::Index(k));
    out.vectors = es.eigenvectors().leftCols(Eigen::Index(k));
    return out;
}

TridiagEigen eig_symmetric(const Eigen::MatrixXd& A, std::size_t k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
    TridiagEigen out;
    out.values = es.eigenvalues().head(Eigen::Index(k));
    out.vectors = es.eigenvectors().leftCols(Eigen::Index(k));
    return out;
}

TridiagEigen eig_generalized(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::size_t k) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
    if (es.info() != Eigen::Success) throw std::runtime_error("generalized eigensolver failed");
    TridiagEigen out;
    out.values = es.eigenvalues().head(Eigen::Index(k));
    out.vectors = es.eigenvectors().leftCols(Eigen::Index(k));
    return out;
}

double Hermite::value(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
    double h = x1 - x0, t = (x - x0) / h;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
}

double Hermite::deriv(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
    double h = x1 - x0, t = (x - x0) / h;
    double t2 = t * t;
    return ((6 * t2 - 6 * t) * f0 + (-6 * t2 + 6 * t) * f1) / h + (3 * t2 - 4 * t + 1) * d0 + (3 * t2 - 2 * t) * d1;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace vps
