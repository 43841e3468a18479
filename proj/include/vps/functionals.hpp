#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vps/poisson.hpp"
#include "vps/rearrangement.hpp"
#include "vps/steady_state.hpp"

namespace vps {

struct EnergyReport {
    double kinetic = 0.0;
    double potential = 0.0;  // -(1/2)|grad phi_f|^2
    double hamiltonian = 0.0;
    double mass = 0.0;
    double sup = 0.0;
};

// rho_f(r_i) = sum_j f_ij |speed shell j|
std::vector<double> spatial_density(const PhaseSpaceDensity& f);
// phi_f on the radial grid of f; throws DegenerateInput for f = 0
PotentialX density_potential(const PhaseSpaceDensity& f);

EnergyReport hamiltonian(const PhaseSpaceDensity& f);
EnergyReport hamiltonian(const PhaseSpaceDensity& f, const PotentialX& phi_f);

// int (u^2/2 + phi)(f - g) over the grid, phi taken as its cell average
double transport_pairing(const PhaseSpaceDensity& f, const PhaseSpaceDensity& g, const PotentialX& phi);

struct MonotonicityReport {
    double gap1 = 0.0;  // H(f) - J_{f*}(phi_f) = pairing(f, fhat, phi_f)
    double gap2 = 0.0;  // J_{f*}(phi_f) - H(fhat) = (1/2)|grad(phi_f - phi_fhat)|^2
    double h_f = 0.0;
    double h_hat = 0.0;
    double residual = 0.0;  // gap1 + gap2 + H(fhat) - H(f)
    double fhat_distance = 0.0;  // |f - fhat|_1
    PhaseSpaceDensity fhat;
};
// throws DegenerateInput for f = 0
MonotonicityReport monotonicity_gaps(const PhaseSpaceDensity& f);

// |H(Q on the grid) - H(Q)|: the quadrature self-error that sets tolerances
double quadrature_self_error(const SteadyStateModel& m, const PhaseSpaceGrid& grid);

// J for the rearrangement class of Q, exact in Q* = F o a_Q^{-1}:
//   J(phi) = (1/2)|grad phi|^2 + int a_phi^{-1}(a_Q(E)) F(E) a_Q'(E) dE
class ReducedFunctional {
public:
    explicit ReducedFunctional(const SteadyStateModel& m, std::size_t n_energy = 128);
    double J0(const Potential& phi) const;
    double operator()(const Potential& phi) const;
    const SteadyStateModel& model() const { return model_; }

private:
    SteadyStateModel model_;
    std::vector<double> E_, s_, w_;  // Gauss energies, a_Q(E), weight F a_Q' dE
};

struct ReducedReport {
    double J_value = 0.0;      // H(f^{*phi}) + coupling, on the grid
    double J0_value = 0.0;     // -int G(a_phi(e)) de
    double J_G_route = 0.0;    // (1/2)|grad phi|^2 + J0_value
    double coupling = 0.0;     // (1/2)|grad phi - grad phi_{f^{*phi}}|^2
    MonotoneRearrangement G_table;  // G(s) = primitive(s)
};
// phi must be the potential of a density on grid.radial
ReducedReport reduced_functional(const MonotoneRearrangement& fstar, const PotentialX& phi, const PhaseSpaceGrid& grid);
// -int G(a_phi(e)) de with G the primitive of fstar
double reduced_J0(const MonotoneRearrangement& fstar, const Potential& phi);
// int_0^inf a_phi^{-1}(s)(f*(s) - g*(s)) ds
double rearrangement_gap(const MonotoneRearrangement& fstar, const MonotoneRearrangement& gstar, const Potential& phi);

struct LowerBoundReport {
    double lhs = 0.0;  // H(f) - H(Q) + |phi_f|_inf |f* - Q*|_1
    double rhs = 0.0;  // c0 |grad phi_f - grad phi_Q(. - z)|^2
    double slack = 0.0;
    double distance = 0.0;  // |grad phi_f - grad phi_Q(. - z)|
    double linf_distance = 0.0;
    Vec3 z{0, 0, 0};
    bool reliable = true;  // false outside the neighbourhood where the shift is defined
};
// Q is the grid density of m on f.grid
LowerBoundReport stability_lower_bound(const PhaseSpaceDensity& f, const SteadyStateModel& m, double c0,
                                       double neighbourhood = 0.5);

enum class Perturbation { amplitude, scramble, squeeze };
Perturbation parse_perturbation(const std::string& s);
std::string to_string(Perturbation p);
// Q(1 + eps chi) with a random smooth bump chi, |chi| <= 1, clipped at zero;
// partial scramble of equal-weight cells moving a fraction eps of the mass;
// lambda^3 Q(r, lambda u) with lambda = 1 + eps (same spatial density)
PhaseSpaceDensity perturb(const SteadyStateModel& m, const PhaseSpaceGrid& grid, Perturbation kind, double eps,
                          std::uint64_t seed);
// pointwise f(r, u) for the amplitude and squeeze families; perturb() samples it on the nodes
std::function<double(double, double)> perturbation_function(const SteadyStateModel& m, Perturbation kind, double eps,
                                                            std::uint64_t seed);

// Norms entering the interpolation bound |grad phi_g|^2 <= C |v^2 g|_1^(1/2) |g|_1^(7/6) |g|_inf^(1/3).
// For signed g the moments are taken of |g|.
struct InterpolationTerms {
    double grad2 = 0.0;  // |grad phi_g|_2^2
    double v2 = 0.0;     // | |v|^2 g |_1
    double l1 = 0.0;
    double sup = 0.0;
    double base() const { return std::sqrt(v2) * std::pow(l1, 7.0 / 6.0) * std::cbrt(sup); }
    double ratio() const { return grad2 / base(); }
    // |rho|_{5/3} scale |g|_inf^(2/5) |v^2 g|_1^(3/5)
    double B() const { return std::pow(sup, 0.4) * std::pow(v2, 0.6); }
};
InterpolationTerms interpolation_terms(const PhaseSpaceDensity& g);

// Constants fixed once: C for the interpolation bound, and the two pieces
//   |grad phi_h| <= C_grad |h|_1^(7/12) B^(5/12),   |phi_h|_inf <= C_sup |h|_1^(1/6) B^(5/6)
// from which C_{f,g} = C_grad N1^(5/12) NB^(5/12) + C_sup NB^(5/6) with N1 = |f|_1 + |g|_1,
// NB = (|f|_inf + |g|_inf)^(2/5) (|v^2 f|_1 + |v^2 g|_1)^(3/5).
struct EstimateConstants {
    double interpolation = 0.0;
    double grad = 0.0;
    double sup = 0.0;
    double safety = 1.0;
};
EstimateConstants calibrate_estimates(const SteadyStateModel& m, const PhaseSpaceGrid& grid, double safety = 2.0);

struct PotentialStability {
    double grad = 0.0;      // |grad phi_f - grad phi_g|_2
    double sup = 0.0;       // |phi_f - phi_g|_inf
    double l1 = 0.0;        // |f - g|_1
    double c_fg = 0.0;
    double lhs() const { return grad + sup; }
    double rhs() const { return c_fg * std::pow(l1, 1.0 / 6.0); }
    // the two intermediate bounds in terms of h = f - g itself
    double grad_bound = 0.0;
    double sup_bound = 0.0;
};
// f and g on the same grid
PotentialStability potential_stability(const PhaseSpaceDensity& f, const PhaseSpaceDensity& g, const EstimateConstants& c);

// Seeded random phase-space densities: rescaled King and polytrope models (mass, x and v scales),
// separable profiles A exp(-(r/a)^p) (1 - (u/b)^s)_+, and bumped King models.
struct RandomDensity {
    std::string family;
    std::function<double(double, double)> f;
    double r_max = 0.0;  // support radius (or effective extent)
    double u_max = 0.0;
};
RandomDensity random_density(std::uint64_t seed);
PhaseSpaceDensity density_on_grid(const std::function<double(double, double)>& f, const PhaseSpaceGrid& grid);

}  // namespace vps
