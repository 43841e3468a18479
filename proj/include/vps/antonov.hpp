#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vps/functionals.hpp"
#include "vps/poisson.hpp"
#include "vps/steady_state.hpp"

namespace vps {

// V_Q(r) = 4 pi sqrt2 int |F'(e)| (e - phi_Q(r))_+^{1/2} de
double effective_potential(const SteadyStateModel& m, double r);
RadialProfile effective_potential_VQ(const SteadyStateModel& m, const RadialGrid& grid);

// Pi h(e) = int (e-phi_Q)_+^{1/2} h r^2 dr / int (e-phi_Q)_+^{1/2} r^2 dr; domain_error outside (phi_Q(0), 0)
double project_energy(const std::function<double(double)>& h, const SteadyStateModel& m, double e);

// D^2 J(phi_Q)(h,h) = int |grad h|^2 - int |F'(e)| (h - Pi h)^2 dx dv for radial h
struct HessianParts {
    double dirichlet = 0.0;   // int |grad h|^2
    double potential = 0.0;   // int V_Q h^2
    double projection = 0.0;  // int |F'| (Pi h)^2 dx dv
    double value() const { return dirichlet - potential + projection; }
};
HessianParts hessian_parts(const Potential& h, const SteadyStateModel& m, std::size_t n_energy = 128);
double hessian_form(const Potential& h, const SteadyStateModel& m);

struct SpectralOptions {
    std::size_t n = 800;         // radial midpoints for w = r h
    double r_max_factor = 3.0;   // domain [0, r_max_factor * R_Q]
    std::size_t n_energy = 256;  // energy mesh for Pi (k = 0)
    bool zero_potential = false; // drop V_Q and Pi: pure Laplacian
};

struct SpectralReport {
    int k = 0;
    double lambda_k = 0.0;                 // k(k+1)
    std::vector<double> r;                 // midpoints
    std::vector<double> eigenvalues;       // lowest of A_k (unit mass), Pi included for k = 0
    Eigen::MatrixXd eigenvectors;          // columns, in w = r h
    std::vector<double> normalized;        // lowest of (L h, h) / |grad h|^2
    double kernel_cosine = 0.0;            // k = 1: |cos(w_0, r phi_Q')|
    double potential_scale = 0.0;          // max V_Q
};
SpectralReport harmonic_operator_spectrum(const SteadyStateModel& m, int k, std::size_t n_eigs,
                                          const SpectralOptions& opt = {});

struct CoercivityReport {
    double c0 = 0.0;
    double k0_min = 0.0;     // normalized, radial sector with Pi
    double k1_second = 0.0;  // normalized, above the translation mode
    double k2_min = 0.0;
    double k1_kernel = 0.0;  // unit-mass eigenvalue of the translation mode
    double kernel_cosine = 0.0;
    bool positive = false;
};
CoercivityReport coercivity_constant(const SteadyStateModel& m, const SpectralOptions& opt = {});

// |sigma_20| / |sigma_1| for the compact part (-V_Q + Pi) relative to the Dirichlet form, k = 0
double compactness_ratio(const SteadyStateModel& m, const SpectralOptions& opt = {}, std::size_t index = 20);

// -T^2 g / g against 3 (rho + phi'/r) / (r^4 u^4), g = r^3 u^3, T f = d_r f / (r^2 u) at fixed e;
// step eta * min(r, (e - phi) / |phi'|); richardson combines eta and eta/2
struct HormanderSample {
    double r = 0.0, e = 0.0;
};
struct HormanderReport {
    double max_residual = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
};
HormanderReport hormander_identity_check(const std::function<double(double)>& phi,
                                         const std::function<double(double)>& dphi,
                                         const std::function<double(double)>& rho,
                                         const std::vector<HormanderSample>& sample, double eta = 1e-3,
                                         bool richardson = false);
HormanderReport hormander_identity_check(const SteadyStateModel& m, const std::vector<HormanderSample>& sample,
                                         double eta = 1e-3, bool richardson = false);
// samples with r in (0, R_Q) and phi_Q(r) < e < e0, away from the boundary by a relative margin
std::vector<HormanderSample> hormander_samples(const SteadyStateModel& m, std::size_t n, std::uint64_t seed,
                                               double margin = 0.02);

// int chi |F'| (T f)^2 against 3 int chi (rho + phi'/r) f^2 / (r^4 u^4) |F'| for f built from h,
// per energy slice and summed; chi excludes a relative margin at both ends of (phi_Q(0), e0)
struct HardyReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double worst_slice_ratio = 0.0;  // min over slices of lhs / rhs
};
HardyReport hardy_check(const std::function<double(double)>& h, const SteadyStateModel& m, double margin = 0.02,
                        std::size_t n_energy = 48);

// potential of rho_Q(r) p(r), |p| <= 1, on a uniform grid over the model table
Potential taylor_direction(const SteadyStateModel& m, const std::function<double(double)>& p, std::size_t n = 4000);

struct TaylorReport {
    std::vector<double> eps;
    std::vector<double> slope;      // (J(phi_Q + eps h) - J(phi_Q)) / eps
    std::vector<double> remainder;  // r(eps) / eps^2
    double hessian = 0.0;           // D^2 J(h,h), analytic
    double hessian_fd = 0.0;        // eps^2-extrapolated symmetric difference
    double J_Q = 0.0;
};
// throws invalid_argument when some phi_Q + eps h leaves the class X
TaylorReport taylor_remainder(const SteadyStateModel& m, const Potential& h, const std::vector<double>& eps);

struct ShiftResult {
    Vec3 z{0, 0, 0};
    std::array<double, 3> residuals{0, 0, 0};  // int grad(phi - phi_Q(. - z)) . grad d_i phi_Q(. - z), relative
    double distance = 0.0;                     // |grad phi - grad phi_Q(. - z)|
    bool converged = false;
};
// z minimizing |grad phi - grad phi_Q(. - z)|, seeded at the barycentre of the sources
ShiftResult modulation_shift(const TranslatedField& phi, const SteadyStateModel& m, std::size_t n = 24);
ShiftResult modulation_shift(const Potential& phi, const SteadyStateModel& m, std::size_t n = 24);

}  // namespace vps
