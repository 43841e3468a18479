#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vps/functionals.hpp"
#include "vps/poisson.hpp"
#include "vps/steady_state.hpp"

namespace vps {

// Each particle moves in its own orbital plane: (x, y) position, (vx, vy) velocity.
// r, v_r and l = |x ^ v|^2 are derived; l is conserved exactly by central kicks.
struct ParticleEnsemble {
    std::vector<double> x, y, vx, vy;
    std::vector<double> w;   // mass carried
    std::vector<double> f0;  // density value carried along the characteristic
    double time = 0.0;

    std::size_t size() const { return w.size(); }
    double r(std::size_t i) const;
    double v_r(std::size_t i) const;
    double l(std::size_t i) const;
    double speed2(std::size_t i) const { return vx[i] * vx[i] + vy[i] * vy[i]; }
    double mass() const;
    // phase-space measure represented by particle i
    double measure(std::size_t i) const { return w[i] / f0[i]; }
    void push_back(double r, double v_r, double l, double w, double f0);
};

// Equal-weight stratified sampling: cells chosen by systematic sampling of the cumulative mass,
// then (r, u, pitch) uniform in the cell measure. f0 is the cell value; sum w = |f|_1 exactly.
ParticleEnsemble sample_particles(const PhaseSpaceDensity& f, std::size_t N, std::uint64_t seed);
// Same allocation from a pointwise density on a grid; w = f(X) |cell| / expected count, f0 = f(X).
ParticleEnsemble sample_particles(const std::function<double(double, double)>& f, const PhaseSpaceGrid& grid,
                                  std::size_t N, std::uint64_t seed);
// Orbit-phase quiet start: N / K seeds from the sampler above, each replaced by K copies spaced T_r / K in time
// along its orbit in phi_Q. Copy weights w f(Y) / (K f(X)) give every copy the seed's measure / K, so an
// equilibrium ensemble keeps its radial mass profile nearly fixed instead of relaxing on sampling noise.
ParticleEnsemble sample_particles(const std::function<double(double, double)>& f, const PhaseSpaceGrid& grid,
                                  const SteadyStateModel& m, std::size_t N, std::size_t K, std::uint64_t seed);

// amplitude eps of the bump family whose initial |(1+|v|^2)(f - Q)|_1 is eta |(1+|v|^2) Q|_1
double amplitude_for_size(const SteadyStateModel& m, double eta, std::uint64_t seed);

// Radial mass deposit with linear weights between cell midpoints. The force interpolates the
// edge slopes of the cell-average potential linearly, so it is continuous in r.
class FieldSolver {
public:
    FieldSolver(double r_max, std::size_t n);
    const RadialGrid& grid() const { return grid_; }
    void deposit(const ParticleEnsemble& p, std::size_t threads);
    const PotentialX& potential() const { return phi_; }
    double force(double r) const;  // -d/dr of the interpolated cell-average potential
    double potential_energy() const { return -phi_.field_energy; }

private:
    RadialGrid grid_;
    double delta_;
    PotentialX phi_;
    std::vector<double> slope_;  // (phibar_{i+1} - phibar_i) / delta
};

struct EvolveOptions {
    double dt = 0.0;
    double T = 0.0;
    double cadence = 0.0;        // diagnostics every cadence (T must be a multiple)
    bool self_consistent = true; // false: frozen phi_Q
    std::size_t field_cells = 400;
    double r_max_factor = 2.0;   // reflecting wall at r_max_factor * R_Q
    std::size_t threads = 4;     // fixed count keeps sums reproducible
    double energy_spike = 0.05;  // abort when |H - H0| / |H0| exceeds this
    double casimir_cut = 0.0;    // c in min(s, c); 0 picks half of sup f0
    bool shift_diagnostic = true;
};

struct TrajectoryDiagnostics {
    std::vector<double> t, H, mass, casimir_s2, casimir_min, distance, binned_distance;
    std::vector<Vec3> z;
    std::size_t reflections = 0;
    bool aborted = false;
    std::string message;
};

// Frozen mode uses -phi_Q' directly (no deposit).
TrajectoryDiagnostics evolve(ParticleEnsemble& p, const SteadyStateModel& m, const EvolveOptions& opt);
// one kick-drift-kick step in a given radial force field
void kdk_step(ParticleEnsemble& p, const std::function<double(double)>& force, double dt);

// |(1+|v|^2)(f - Q)|_1 from carried values along the measure-preserving flow:
//   sum_i m_i (1+v_i^2)|f0_i - Q(X_i)| + (int (1+v^2) Q - sum_i m_i (1+v_i^2) Q(X_i))_+
double orbital_distance(const ParticleEnsemble& p, const SteadyStateModel& m);
// same norm between a binned density and Q on its grid
double orbital_distance(const PhaseSpaceDensity& f, const SteadyStateModel& m);
PhaseSpaceDensity bin_particles(const ParticleEnsemble& p, const PhaseSpaceGrid& grid);

struct ConservationReport {
    double mass_drift = 0.0;     // max relative
    double energy_drift = 0.0;   // max relative
    double casimir_drift = 0.0;  // max relative over both Casimirs
    bool pass = false;
};
ConservationReport conservation_report(const TrajectoryDiagnostics& d, double mass_tol = 1e-6,
                                       double energy_tol = 1e-3, double casimir_tol = 1e-10);

void write_diagnostics_csv(std::ostream& os, const TrajectoryDiagnostics& d, const std::string& digest);

// little-endian: uint64 N, double time, then N records of (r, v_r, l, w, f0)
void write_checkpoint(const std::string& path, const ParticleEnsemble& p);
ParticleEnsemble read_checkpoint(const std::string& path);

}  // namespace vps
