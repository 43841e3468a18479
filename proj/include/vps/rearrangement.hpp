#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "vps/poisson.hpp"
#include "vps/steady_state.hpp"

namespace vps {

// mu_f(s) = meas{f > s}.
// Cell form: levels are the distinct positive cell values (decreasing) and
// measures[k] = meas{f >= levels[k]}, so mu is the right-continuous step function
// equal to measures[k] on [levels[k+1], levels[k]).
// Row-linear form: f is linear in u between speed nodes of each radial row,
// levels end with 0 and measures[k] = mu(levels[k]) exactly for that interpolant.
// Where a row drops to zero the crossing is extrapolated from the previous slope.
struct DistributionFunction {
    std::vector<double> levels;
    std::vector<double> measures;
    double sup = 0.0;
    double total = 0.0;  // measure of the whole grid box
    bool row_linear = false;

    double operator()(double s) const;
    double support() const;  // mu(0+)
};

DistributionFunction distribution_function(const PhaseSpaceDensity& f);
DistributionFunction distribution_function_linear(const PhaseSpaceDensity& f);

// Nonincreasing f* on [0, inf), zero after t.back().
// step:   value[k] on [t[k], t[k+1]), value.size() == t.size() - 1
// linear: interpolates (t[k], value[k]), value.size() == t.size()
struct MonotoneRearrangement {
    enum class Kind { step, linear };
    Kind kind = Kind::step;
    std::vector<double> t;
    std::vector<double> value;
    std::vector<double> prefix;  // int_0^{t[k]} f*

    double operator()(double s) const;
    double sup() const { return value.empty() ? 0.0 : value.front(); }
    double support() const { return t.empty() ? 0.0 : t.back(); }
    // int_0^s f*
    double primitive(double s) const;
    double mass() const { return prefix.empty() ? 0.0 : prefix.back(); }
    // sup{t : f*(t) > s}
    double measure_above(double s) const;
    double integral(const std::function<double(double)>& beta) const;
    double l1_distance(const MonotoneRearrangement& g) const;
    void finalize();
};

MonotoneRearrangement schwarz_rearrangement(const DistributionFunction& mu);
MonotoneRearrangement zero_rearrangement();

// e -> a_phi(e) = (8 pi sqrt2 / 3) int (e - phi)_+^{3/2} dx
double jacobian_direct(const Potential& phi, double e);
// a_phi'(e) = 4 pi sqrt2 int (e - phi)_+^{1/2} dx
double jacobian_derivative_direct(const Potential& phi, double e);
// a''(e) = 2 pi sqrt2 int (e - phi)_+^{-1/2} dx, finite for e inside the table
double jacobian_second_direct(const Potential& phi, double e);

// Same integrals with a Gauss rule on every interval of the potential table; smooth in e
// and in phi to roundoff, at a higher cost. order 0, 1, 2 gives a, a', a''.
double jacobian_fine(const Potential& phi, double e, int order = 0);
// a_phi^{-1}(s) by safeguarded Newton on jacobian_fine, started from guess
double jacobian_fine_inverse(const Potential& phi, double s, double guess);

class JacobianMap {
public:
    JacobianMap() = default;
    explicit JacobianMap(Potential phi, std::size_t nodes = 1024);

    double operator()(double e) const;
    double derivative(double e) const { return jacobian_derivative_direct(phi_, e); }
    double exact(double e) const { return jacobian_direct(phi_, e); }
    // a^{-1}(s) in [min phi, 0); s <= 0 maps to min phi
    double inverse(double s) const;
    double min_energy() const { return phi_.min(); }
    const Potential& potential() const { return phi_; }
    const std::vector<double>& energies() const { return e_; }

private:
    Potential phi_;
    std::vector<double> e_, b_, db_;  // b = a (-e)^{3/2}
    double e_low_ = 0.0, a_low_ = 0.0;  // below e_low the integral is evaluated directly
    double scaled(double e, double* deriv) const;
};

// throws invalid_argument when phi is not in the class X
JacobianMap jacobian_a(const Potential& phi, std::size_t nodes = 1024);

// f*(a_phi(u^2/2 + phi(r))) at the nodes of the grid, zero for nonnegative energies
PhaseSpaceDensity generalized_rearrangement(const MonotoneRearrangement& fstar, const JacobianMap& jac,
                                            const PhaseSpaceGrid& grid);

// Discrete bathtub: cells sorted by their mean energy <u^2>/2 + <phi> (ties by index)
// receive the average of the cell-level f* over their slot of cumulative measure.
PhaseSpaceDensity bathtub_rearrangement(const PhaseSpaceDensity& f, const PotentialX& phi);
PhaseSpaceDensity bathtub_rearrangement(const MonotoneRearrangement& fstar, const PhaseSpaceGrid& grid,
                                        const std::vector<double>& phi_cell_avg);

// mean energy of every phase-space cell
std::vector<double> cell_energies(const PhaseSpaceGrid& grid, const std::vector<double>& phi_cell_avg);

// sup{e in [min phi, 0) : f*(a_phi(e)) > s}
double pseudo_inverse_level(const MonotoneRearrangement& fstar, const JacobianMap& jac, double s);

// d/dlambda a_{phi + lambda h}(e), h = phitilde - phi
double path_derivative_a(const Potential& phi, const Potential& phitilde, double lambda, double e);

// Q* = F o a_Q^{-1}, tabulated on energies graded toward both ends
MonotoneRearrangement rearrangement_from_profile(const ProfileF& F, const JacobianMap& jac, std::size_t n = 2048);

// random permutation of cell values among cells of equal weight (relative 1e-12)
PhaseSpaceDensity scramble_equimeasurable(const PhaseSpaceDensity& f, std::uint64_t seed);

// measure of the cells whose energy range crosses e (corners of the cell in (r,u))
double straddle_measure(const PhaseSpaceGrid& grid, const Potential& phi, double e);

}  // namespace vps
