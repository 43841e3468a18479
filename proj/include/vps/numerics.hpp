#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vps {

constexpr double pi = 3.14159265358979323846;
constexpr double sqrt2 = 1.41421356237309504880;

struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// equal_volume: every cell has the same shell volume
enum class Spacing { uniform, log, graded, equal_volume };

Spacing parse_spacing(const std::string& s);
std::string to_string(Spacing s);

// Cells [edges[i], edges[i+1]] with representative node nodes[i].
// weights[i] is the cell length, volumes[i] the exact shell volume 4pi/3 (r+^3 - r-^3),
// so that sum volumes[i] g(nodes[i]) integrates g over a ball.
struct RadialGrid {
    std::vector<double> nodes;
    std::vector<double> edges;
    std::vector<double> weights;
    std::vector<double> volumes;
    double r_max = 0.0;
    Spacing spacing = Spacing::uniform;

    std::size_t size() const { return nodes.size(); }
    // sum of weights * g(nodes) * nodes^2 with the shell-exact rule
    double integrate_r2(const std::function<double(double)>& g) const;
    double max_weight() const;
};

RadialGrid make_radial_grid(double r_max, std::size_t n, Spacing spacing, double r_min_log = 0.0);

struct PhaseSpaceGrid {
    RadialGrid radial;
    RadialGrid speeds;

    std::size_t n_r() const { return radial.size(); }
    std::size_t n_u() const { return speeds.size(); }
    std::size_t cells() const { return n_r() * n_u(); }
    std::size_t index(std::size_t i, std::size_t j) const { return i * n_u() + j; }
    // measure of the cell in R^6: (4pi/3)(r+^3-r-^3) * (4pi/3)(u+^3-u-^3)
    double weight(std::size_t i, std::size_t j) const { return radial.volumes[i] * speeds.volumes[j]; }
    // mean of u^2 over the speed shell j
    double mean_u2(std::size_t j) const;
    double measure_box(double R, double U) const;
};

PhaseSpaceGrid make_grids(double r_max, std::size_t n_r, double u_max, std::size_t n_u,
                          Spacing spacing = Spacing::uniform);

// Gauss-Legendre rule on [-1,1], n nodes ascending.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};
const GaussRule& gauss_legendre(std::size_t n);

// integral over [a,b] with the n-point Gauss-Legendre rule
template <class F>
double gauss_integrate(F&& f, double a, double b, std::size_t n = 64) {
    const GaussRule& g = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < g.x.size(); ++k) s += g.w[k] * f(c + h * g.x[k]);
    return s * h;
}

// int_a^b f(x) (b-x)^{1/2} dx style endpoint singularities at b: x = b - (b-a) t^2
template <class F>
double gauss_integrate_sqrt_end(F&& f, double a, double b, std::size_t n = 64) {
    const double L = b - a;
    return gauss_integrate([&](double t) { return 2.0 * L * t * f(b - L * t * t); }, 0.0, 1.0, n);
}

double invert_monotone(const std::function<double(double)>& fn, double lo, double hi, double target);

struct TridiagEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};
TridiagEigen eig_tridiag(const std::vector<double>& diag, const std::vector<double>& offdiag, std::size_t k);

// Lowest k eigenpairs of a dense symmetric matrix (or generalized pencil when B is given).
TridiagEigen eig_symmetric(const Eigen::MatrixXd& A, std::size_t k);
TridiagEigen eig_generalized(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::size_t k);

// cubic Hermite on [x0,x1]
struct Hermite {
    static double value(double x0, double x1, double f0, double f1, double d0, double d1, double x);
    static double deriv(double x0, double x1, double f0, double f1, double d0, double d1, double x);
};

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vps
