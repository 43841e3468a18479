#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vps/numerics.hpp"
#include "vps/potential.hpp"

namespace vps {

// F(e) = A (e0 - e)_+^q   or   F(e) = A (exp(e0 - e) - 1)_+
struct ProfileF {
    enum class Kind { polytrope, king };
    Kind kind = Kind::king;
    double q = 0.0;
    double amplitude = 1.0;
    double e0 = -1.0;

    double evaluate(double e) const;
    // F'(e) for e < e0, zero above
    double derivative(double e) const;

    // closed forms in terms of W = e0 - phi >= 0
    double rho_of_depth(double W) const;      // 4 pi sqrt2 int F (e-phi)^{1/2} de
    double veff_of_depth(double W) const;     // 4 pi sqrt2 int |F'| (e-phi)^{1/2} de = d rho / dW
    double kinetic_of_depth(double W) const;  // 4 pi sqrt2 int F (e-phi)^{3/2} de

    double rho(double phi) const { return rho_of_depth(e0 - phi); }
    double veff(double phi) const { return veff_of_depth(e0 - phi); }
    std::string name() const { return kind == Kind::king ? "king" : "polytrope"; }
};

// Quadrature value of 4 pi sqrt2 int F(e)(e - phi)_+^{1/2} de, with the
// |F'|-form recomputed alongside for cross-checking.
struct DensityQuadrature {
    double f_form = 0.0;
    double fprime_form = 0.0;
};
DensityQuadrature density_quadrature(const ProfileF& F, double phi, std::size_t n = 96);
double density_from_potential(const ProfileF& F, double phi);

struct EmdenSolution {
    std::vector<double> r, psi, dpsi;
    double radius = 0.0;
};
// psi'' + (2/r) psi' = -g(psi), psi(0) = psi0, psi'(0) = 0, stepped until psi = 0
EmdenSolution solve_emden(const std::function<double(double)>& g, double dg0, double psi0, std::size_t steps,
                          double h_guess = 0.0);
EmdenSolution solve_lane_emden(double n, std::size_t steps);

struct BuildOptions {
    std::size_t steps = 4000;
    double r_max_factor = 3.0;
};

struct SteadyStateModel {
    ProfileF profile;
    Potential phi;
    double support_radius = 0.0;
    double mass = 0.0;
    double depth = 0.0;  // e0 - phi(0)
    double L0 = 0.0;
    double kinetic = 0.0;
    double field_energy = 0.0;  // (1/2) |grad phi|^2
    double hamiltonian = 0.0;
    double central_density = 0.0;
    double parameter = 0.0;  // q or W0
    std::size_t steps = 0;

    double e0() const { return profile.e0; }
    double phi0() const { return phi.min(); }
    double rho(double r) const { return profile.rho(phi(r)); }
    double Q(double r, double u) const { return profile.evaluate(0.5 * u * u + phi(r)); }
    double escape_speed() const;
    // 2 pi / sqrt(rho(0)/3): period of small oscillations at the centre
    double dynamical_time() const;
    std::string kind() const { return profile.name(); }
};

SteadyStateModel build_polytrope(double q, double depth, const BuildOptions& opt = {});
SteadyStateModel build_king(double W0, const BuildOptions& opt = {});
// assemble a model from a profile and a tabulated potential
SteadyStateModel assemble_model(const ProfileF& F, Potential phi, double parameter, std::size_t steps);

double check_steady_state(const Potential& phi, const std::function<double(double)>& rho, double r_eval,
                          std::size_t n_eval = 200);
double check_steady_state(const SteadyStateModel& m);

struct PhaseSpaceDensity {
    PhaseSpaceGrid grid;
    std::vector<double> f;
    bool truncated = false;

    double& at(std::size_t i, std::size_t j) { return f[grid.index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return f[grid.index(i, j)]; }
    double mass() const;
    double sup() const;
    double l1_distance(const PhaseSpaceDensity& g) const;
    bool same_grid(const PhaseSpaceDensity& g) const;
};

PhaseSpaceGrid default_phase_grid(const SteadyStateModel& m, std::size_t n_r = 400, std::size_t n_u = 200,
                                  double margin = 1.25, Spacing spacing = Spacing::uniform);
PhaseSpaceDensity phase_space_density(const SteadyStateModel& m, const PhaseSpaceGrid& grid);

}  // namespace vps
