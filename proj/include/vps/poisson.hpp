#pragma once

#include <array>
#include <functional>
#include <vector>

#include "vps/numerics.hpp"
#include "vps/potential.hpp"

namespace vps {

using Vec3 = std::array<double, 3>;

// Potential of a density that is constant on each shell of a radial grid.
// Edge quantities and volume averages are exact for that density.
struct PotentialX {
    RadialGrid grid;
    std::vector<double> density;      // per cell
    std::vector<double> density_s;    // int rho s ds / int s ds per cell; equals density for shell-constant input
    std::vector<double> mass_edges;   // M(edges[k])
    std::vector<double> phi_edges;    // phi(edges[k])
    std::vector<double> phi_avg;      // volume average of phi over cell i
    Potential phi;                    // Hermite table on the edges
    double mass = 0.0;
    double min_phi = 0.0;
    double m_phi = 0.0;               // inf (1+r)|phi(r)|
    double field_energy = 0.0;        // (1/2) |grad phi|^2, exact

    double value(double r) const;
    double derivative(double r) const;
    double enclosed_mass(double r) const;
    double operator()(double r) const { return value(r); }
};

// rho >= 0 with positive total mass, else DegenerateInput / invalid_argument
PotentialX solve_poisson_radial(const RadialProfile& rho);
PotentialX solve_poisson_radial(const RadialGrid& grid, const std::vector<double>& rho);
// cell averages of a density given as a function, then solved as above
PotentialX solve_poisson_radial(const RadialGrid& grid, const std::function<double(double)>& rho);
// no sign or mass requirement; used for differences of densities
PotentialX solve_poisson_signed(const RadialGrid& grid, const std::vector<double>& rho);

double field_energy(const PotentialX& phi);
double field_energy(const Potential& phi);

struct Membership {
    bool is_member = false;
    double m_phi = 0.0;
};
Membership check_X_membership(const Potential& phi);
Membership check_X_membership(const PotentialX& phi);

struct PotentialDistance {
    double dist_inf = 0.0;
    double dist_grad = 0.0;
};
// || phi1 - phi2(. - z) ||_inf and || grad phi1 - grad phi2(. - z) ||_2 over R^3
PotentialDistance potential_distance(const Potential& phi1, const Potential& phi2, const Vec3& z = {0, 0, 0},
                                     std::size_t n = 48);

// volume averages of a potential over the cells of a grid
std::vector<double> cell_averages(const Potential& phi, const RadialGrid& grid);

// sum_k c_k P_k(|x - z_k|): radial potentials placed at arbitrary centres
struct TranslatedField {
    struct Term {
        Potential phi;
        Vec3 centre{0, 0, 0};
        double coef = 1.0;
    };
    std::vector<Term> terms;

    double value(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const;
    double mass() const;
    // mass-weighted centre of the sources
    Vec3 barycentre() const;
    double extent() const;  // radius of a ball around the origin containing every table
};

// spherical Gauss rule on a ball: nodes and weights for int over |x - c| < R
struct BallRule {
    std::vector<Vec3> x;
    std::vector<double> w;
    Vec3 centre{0, 0, 0};
    double radius = 0.0;
};
BallRule ball_rule(const Vec3& centre, double radius, std::size_t n);

}  // namespace vps
