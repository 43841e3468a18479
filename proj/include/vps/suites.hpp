#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vps/steady_state.hpp"

namespace vps {

struct SuiteResult {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string summary;
    nlohmann::json details;
};

// |Q^{*phi_Q} - Q|_1 / |Q|_1 at (n_r, n_u) and at twice the resolution
SuiteResult fixed_point_suite(const SteadyStateModel& m, std::size_t n_r = 400, std::size_t n_u = 200);
// gap1, gap2 over seeded perturbations cycling through the three families; tol = 10 x self-error
SuiteResult monotonicity_suite(const SteadyStateModel& m, std::size_t seeds = 200, std::uint64_t seed0 = 1);
// mu of f^{*phi_f} against mu_f at 50 levels (straddle-measure resolution) and the exact bathtub
SuiteResult equimeasurability_suite(const SteadyStateModel& m, std::uint64_t seed = 11);
SuiteResult taylor_suite(const SteadyStateModel& m);
SuiteResult spectrum_suite(const SteadyStateModel& m);
SuiteResult hormander_suite(const SteadyStateModel& m, std::size_t samples = 200, std::uint64_t seed = 3);
// c0 <= 0 computes it from the spectrum
SuiteResult lower_bound_suite(const SteadyStateModel& m, double c0 = 0.0, std::size_t count = 100,
                              std::uint64_t seed0 = 1);

struct StabilityOptions {
    std::size_t N = 100000;
    std::size_t replicas = 16;
    double dt = 0.02;      // in central dynamical times
    double T = 50.0;       // in central dynamical times
    double cadence = 1.0;  // in central dynamical times
    std::vector<double> eta{0.0025, 0.005, 0.01, 0.02};
    std::size_t noise_factor = 4;  // the eta = 0 run is repeated with noise_factor * N
    std::uint64_t seed = 1;
};
SuiteResult stability_suite(const SteadyStateModel& m, const StabilityOptions& opt = {});
// constants calibrated on m, then checked on count random densities and count random pairs
SuiteResult estimates_suite(const SteadyStateModel& m, std::size_t count = 100, std::uint64_t seed0 = 1000);

// by name: fixedpoint, monotonicity, equimeasurability, taylor, spectrum, hormander, lowerbound, stability, estimates
SuiteResult run_suite(const std::string& name, const SteadyStateModel& m);
const std::vector<std::string>& suite_names();

}  // namespace vps
