#include "vps/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace vps {

using json = nlohmann::json;

const char* artifact_version() { return "1.0.0"; }

std::string config_digest(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json to_json(const ModelParams& p) {
    json j{{"kind", p.kind}, {"steps", p.build.steps}, {"r_max_factor", p.build.r_max_factor}};
    if (p.kind == "king") j["w0"] = p.w0;
    else {
        j["q"] = p.q;
        j["depth"] = p.depth;
    }
    return j;
}

ModelParams model_params_from_json(const json& j) {
    ModelParams p;
    p.kind = j.value("kind", p.kind);
    p.q = j.value("q", p.q);
    p.depth = j.value("depth", p.depth);
    p.w0 = j.value("w0", p.w0);
    p.build.steps = j.value("steps", p.build.steps);
    p.build.r_max_factor = j.value("r_max_factor", p.build.r_max_factor);
    if (p.kind != "king" && p.kind != "polytrope") throw std::invalid_argument("unknown model kind: " + p.kind);
    return p;
}

SteadyStateModel build_model(const ModelParams& p) {
    if (p.kind == "king") return build_king(p.w0, p.build);
    if (p.kind == "polytrope") return build_polytrope(p.q, p.depth, p.build);
    throw std::invalid_argument("unknown model kind: " + p.kind);
}

json model_to_json(const SteadyStateModel& m, const ModelParams& p) {
    const auto& r = m.phi.nodes();
    std::vector<double> rho(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rho[i] = m.rho(r[i]);
    return {{"schema", "vps.model"},
            {"version", 1},
            {"artifact_version", artifact_version()},
            {"kind", m.kind()},
            {"params", to_json(p)},
            {"scalars",
             {{"e0", m.e0()},
              {"mass", m.mass},
              {"support_radius", m.support_radius},
              {"depth", m.depth},
              {"phi0", m.phi0()},
              {"kinetic", m.kinetic},
              {"field_energy", m.field_energy},
              {"hamiltonian", m.hamiltonian},
              {"central_density", m.central_density},
              {"dynamical_time", m.dynamical_time()},
              {"escape_speed", m.escape_speed()},
              {"compact_support", m.support_radius > 0.0 && std::isfinite(m.support_radius)}}},
            {"table", {{"r", r}, {"phi", m.phi.values()}, {"dphi", m.phi.derivatives()}, {"rho", rho}}}};
}

namespace {

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

}  // namespace

SteadyStateModel model_from_json(const json& j) {
    if (j.value("schema", "") != "vps.model") throw InputError("not a model document (schema != vps.model)");
    if (j.value("version", 0) != 1) throw InputError("unsupported model version");
    SteadyStateModel m;
    try {
        m = build_model(model_params_from_json(j.at("params")));
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("model params: ") + e.what());
    }
    const json& s = j.at("scalars");
    for (auto [key, v] : {std::pair{"e0", m.e0()}, {"mass", m.mass}, {"support_radius", m.support_radius}})
        if (!close(s.at(key).get<double>(), v, 1e-12))
            throw InputError(std::string("model file inconsistent with its params: ") + key);
    const auto r = j.at("table").at("r").get<std::vector<double>>();
    const auto phi = j.at("table").at("phi").get<std::vector<double>>();
    if (r.size() != phi.size() || r.size() != m.phi.nodes().size())
        throw InputError("model table size does not match a rebuild");
    for (std::size_t i = 0; i < r.size(); ++i)
        if (std::abs(phi[i] - m.phi(r[i])) > 1e-12 * std::abs(m.phi0()))
            throw InputError("model table inconsistent with its params");
    return m;
}

json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write " + path);
    os << j.dump(2) << '\n';
}

SteadyStateModel load_model(const std::string& path) {
    json j = read_json(path);
    try {
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

json potential_to_json(const Potential& phi) {
    return {{"schema", "vps.potential"},
            {"version", 1},
            {"mass", phi.mass()},
            {"r", phi.nodes()},
            {"phi", phi.values()},
            {"dphi", phi.derivatives()}};
}

Potential potential_from_json(const json& j) {
    if (j.value("schema", "") == "vps.model")
        return Potential(j.at("table").at("r").get<std::vector<double>>(), j.at("table").at("phi").get<std::vector<double>>(),
                         j.at("table").at("dphi").get<std::vector<double>>(), j.at("scalars").at("mass").get<double>());
    if (j.value("schema", "") != "vps.potential") throw InputError("not a potential document (schema != vps.potential)");
    auto r = j.at("r").get<std::vector<double>>(), phi = j.at("phi").get<std::vector<double>>(),
         dphi = j.at("dphi").get<std::vector<double>>();
    if (r.size() < 2 || r.size() != phi.size() || r.size() != dphi.size()) throw InputError("potential arrays malformed");
    try {
        return Potential(std::move(r), std::move(phi), std::move(dphi), j.at("mass").get<double>());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("potential: ") + e.what());
    }
}

Potential load_potential(const std::string& path) {
    json j = read_json(path);
    try {
        return potential_from_json(j);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_csv_header(std::ostream& os, const std::string& digest) {
    os << "# digest=" << digest << " version=" << artifact_version() << '\n';
    os << std::setprecision(17);
}

void write_distribution_csv(std::ostream& os, const DistributionFunction& mu, const std::string& digest) {
    write_csv_header(os, digest);
    os << "s,mu\n";
    for (std::size_t k = 0; k < mu.levels.size(); ++k) os << mu.levels[k] << ',' << mu.measures[k] << '\n';
}

void write_rearrangement_csv(std::ostream& os, const MonotoneRearrangement& fstar, const std::string& digest) {
    write_csv_header(os, digest);
    os << "t,fstar\n";
    for (std::size_t k = 0; k + 1 < fstar.t.size() && k < fstar.value.size(); ++k)
        os << fstar.t[k] << ',' << fstar.value[k] << '\n';
    if (!fstar.t.empty()) os << fstar.t.back() << ',' << 0.0 << '\n';
}

void write_jacobian_csv(std::ostream& os, const JacobianMap& a, const std::string& digest) {
    write_csv_header(os, digest);
    os << "e,a\n";
    for (double e : a.energies())
        if (e < 0.0) os << e << ',' << a(e) << '\n';
}

void write_spectrum_csv(std::ostream& os, const std::vector<SpectralReport>& s, const std::string& digest) {
    write_csv_header(os, digest);
    os << "k,index,lambda,normalized\n";
    for (const auto& r : s)
        for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
            os << r.k << ',' << i << ',' << r.eigenvalues[i] << ','
               << (i < r.normalized.size() ? r.normalized[i] : std::nan("")) << '\n';
}

}  // namespace vps
