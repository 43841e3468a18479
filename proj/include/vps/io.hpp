#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "vps/antonov.hpp"
#include "vps/rearrangement.hpp"
#include "vps/steady_state.hpp"

namespace vps {

const char* artifact_version();

// missing or malformed input files; the CLI maps these to exit code 2
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a 64 of the compact dump, 16 hex digits
std::string config_digest(const nlohmann::json& config);

struct ModelParams {
    std::string kind = "king";
    double q = 1.0;      // polytrope
    double depth = 1.0;  // polytrope, e0 - phi(0)
    double w0 = 3.0;     // king
    BuildOptions build;
};
nlohmann::json to_json(const ModelParams& p);
ModelParams model_params_from_json(const nlohmann::json& j);
SteadyStateModel build_model(const ModelParams& p);

// schema "vps.model" v1: params, scalars, and the table (r, phi, dphi, rho) at the potential nodes
nlohmann::json model_to_json(const SteadyStateModel& m, const ModelParams& p);
// rebuilds from params and checks the stored scalars and table against the rebuild
SteadyStateModel model_from_json(const nlohmann::json& j);
SteadyStateModel load_model(const std::string& path);

// schema "vps.potential" v1: mass, r, phi, dphi
nlohmann::json potential_to_json(const Potential& phi);
Potential potential_from_json(const nlohmann::json& j);
Potential load_potential(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

// tidy CSV tables; the first line is "# digest=<d> version=<v>"
void write_csv_header(std::ostream& os, const std::string& digest);
void write_distribution_csv(std::ostream& os, const DistributionFunction& mu, const std::string& digest);
void write_rearrangement_csv(std::ostream& os, const MonotoneRearrangement& fstar, const std::string& digest);
void write_jacobian_csv(std::ostream& os, const JacobianMap& a, const std::string& digest);
void write_spectrum_csv(std::ostream& os, const std::vector<SpectralReport>& s, const std::string& digest);

}  // namespace vps
