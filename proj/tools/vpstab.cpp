#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vps/evolver.hpp"
#include "vps/functionals.hpp"
#include "vps/io.hpp"
#include "vps/suites.hpp"

using json = nlohmann::json;
using namespace vps;

namespace {

enum Exit { ok = 0, failed = 1, usage = 2 };

// defaults, then the config file (top level or its per-command object), then explicit flags
struct Resolver {
    json config;
    CLI::App* sub = nullptr;

    void load(const std::string& file, const std::string& command) {
        if (file.empty()) return;
        json j = read_json(file);
        if (!j.is_object()) throw InputError(file + ": config must be a JSON object");
        json top = j;
        if (j.contains(command) && j[command].is_object()) {
            top.erase(command);
            top.update(j[command]);
        }
        for (auto& [k, v] : top.items())
            if (config.contains(k)) config[k] = v;
    }

    template <class T>
    void flag(const std::string& key, const std::string& name, const T& value) {
        if (sub->get_option(name)->count() > 0) config[key] = value;
    }
};

void emit_config(const json& config, const std::string& path) {
    if (!path.empty()) write_json(path, config);
}

std::string tag(const std::string& digest) { return "digest=" + digest + " version=" + artifact_version(); }

json stamp(const json& config) {
    return {{"config", config}, {"digest", config_digest(config)}, {"artifact_version", artifact_version()}};
}

int cmd_build(const json& c) {
    ModelParams p = model_params_from_json(c);
    SteadyStateModel m = build_model(p);
    json out = model_to_json(m, p);
    out.update(stamp(c));
    std::string path = c["out"];
    write_json(path, out);
    std::cout << json{{"out", path},
                      {"kind", m.kind()},
                      {"e0", m.e0()},
                      {"mass", m.mass},
                      {"support_radius", m.support_radius},
                      {"compact_support", out["scalars"]["compact_support"]},
                      {"hamiltonian", m.hamiltonian},
                      {"digest", out["digest"]}}
                     .dump(2)
              << '\n';
    return ok;
}

int cmd_check(const json& c) {
    SteadyStateModel m = load_model(c["model"]);
    std::string suite = c["suite"];
    SuiteResult r;
    if (suite == "monotonicity") r = monotonicity_suite(m, c["seeds"], c["seed"]);
    else if (suite == "lowerbound") r = lower_bound_suite(m, 0.0, c["seeds"], c["seed"]);
    else if (suite == "hormander") r = hormander_suite(m, c["seeds"], c["seed"]);
    else if (suite == "estimates") r = estimates_suite(m, c["seeds"], c["seed"]);
    else if (suite == "equimeasurability") r = equimeasurability_suite(m, c["seed"]);
    else if (suite == "fixedpoint") r = fixed_point_suite(m, c["n_r"], c["n_u"]);
    else if (suite == "stability") {
        StabilityOptions o;
        o.N = c["N"];
        o.replicas = c["replicas"];
        o.seed = c["seed"];
        r = stability_suite(m, o);
    } else r = run_suite(suite, m);
    json out = stamp(c);
    out.update({{"suite", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"summary", r.summary}, {"details", r.details}});
    std::string path = c["out"];
    if (path.empty()) std::cout << out.dump(2) << '\n';
    else {
        write_json(path, out);
        std::cout << r.name << ": " << (r.pass ? "pass" : "FAIL") << " (" << r.summary << ")\n";
    }
    if (suite == "spectrum" && !c["csv"].get<std::string>().empty()) {
        std::vector<SpectralReport> s;
        for (int k = 0; k <= 3; ++k) s.push_back(harmonic_operator_spectrum(m, k, 4));
        std::ofstream os(c["csv"].get<std::string>());
        write_spectrum_csv(os, s, out["digest"]);
    }
    return r.pass ? ok : failed;
}

int cmd_evolve(const json& c) {
    SteadyStateModel m = load_model(c["model"]);
    const double eta = c["eta"], td = m.dynamical_time();
    const std::uint64_t seed = c["seed"];
    Perturbation fam = parse_perturbation(c["family"]);
    if (fam == Perturbation::scramble) throw std::invalid_argument("evolve supports the amplitude and squeeze families");
    if (eta < 0.0) throw std::invalid_argument("eta must be nonnegative");
    double eps = fam == Perturbation::amplitude ? amplitude_for_size(m, eta, seed) : eta;
    PhaseSpaceGrid g = default_phase_grid(m, 400, 200);
    ParticleEnsemble p = sample_particles(perturbation_function(m, fam, eps, seed), g, m, c["N"], c["replicas"], seed);
    EvolveOptions o;
    o.dt = c["dt"].get<double>() * td;
    o.T = c["T"].get<double>() * td;
    o.cadence = c["cadence"].get<double>() * td;
    o.self_consistent = !c["frozen"].get<bool>();
    o.threads = c["threads"];
    TrajectoryDiagnostics d = evolve(p, m, o);
    ConservationReport cr = conservation_report(d);
    json st = stamp(c);
    const std::string digest = st["digest"], out = c["out"];
    {
        std::ofstream os(out);
        if (!os) throw InputError("cannot write " + out);
        write_diagnostics_csv(os, d, tag(digest));
    }
    emit_config(st, out + ".config.json");
    if (!c["checkpoint"].get<std::string>().empty()) write_checkpoint(c["checkpoint"], p);
    double dmax = *std::max_element(d.distance.begin(), d.distance.end());
    std::cout << json{{"out", out},
                      {"amplitude", eps},
                      {"particles", p.size()},
                      {"max_distance", dmax},
                      {"final_distance", d.distance.back()},
                      {"mass_drift", cr.mass_drift},
                      {"energy_drift", cr.energy_drift},
                      {"aborted", d.aborted},
                      {"message", d.message},
                      {"digest", digest}}
                     .dump(2)
              << '\n';
    return !d.aborted && cr.mass_drift <= 1e-6 && cr.energy_drift <= 1e-3 ? ok : failed;
}

int cmd_rearrange(const json& c) {
    SteadyStateModel m = load_model(c["model"]);
    PhaseSpaceGrid g = default_phase_grid(m, c["n_r"], c["n_u"]);
    PhaseSpaceDensity f = perturb(m, g, parse_perturbation(c["family"]), c["eps"], c["seed"]);
    PotentialX phi = density_potential(f);
    JacobianMap a = jacobian_a(phi.phi);
    DistributionFunction mu = distribution_function(f);
    MonotoneRearrangement fs = schwarz_rearrangement(mu);
    PhaseSpaceDensity fr = generalized_rearrangement(schwarz_rearrangement(distribution_function_linear(f)), a, g);
    json st = stamp(c);
    const std::string t = st["digest"], pre = c["prefix"];
    auto open = [&](const std::string& s) {
        std::ofstream os(pre + s);
        if (!os) throw InputError("cannot write " + pre + s);
        return os;
    };
    {
        auto os = open("_mu.csv");
        write_distribution_csv(os, mu, t);
    }
    {
        auto os = open("_fstar.csv");
        write_rearrangement_csv(os, fs, t);
    }
    {
        auto os = open("_a.csv");
        write_jacobian_csv(os, a, t);
    }
    {
        auto os = open("_grid.csv");
        write_csv_header(os, t);
        os << "r,u,f,f_rearranged\n";
        for (std::size_t i = 0; i < g.n_r(); ++i)
            for (std::size_t j = 0; j < g.n_u(); ++j)
                os << g.radial.nodes[i] << ',' << g.speeds.nodes[j] << ',' << f.at(i, j) << ',' << fr.at(i, j) << '\n';
    }
    emit_config(st, pre + ".config.json");
    std::cout << json{{"prefix", pre},
                      {"mass", f.mass()},
                      {"mass_rearranged", fr.mass()},
                      {"l1_distance", f.l1_distance(fr)},
                      {"digest", st["digest"]}}
                     .dump(2)
              << '\n';
    return ok;
}

int cmd_shift(const json& c) {
    SteadyStateModel m = load_model(c["model"]);
    Potential phi = c["potential"].get<std::string>().empty() ? m.phi : load_potential(c["potential"]);
    TranslatedField F;
    auto z0 = c["centre"].get<std::vector<double>>();
    if (z0.size() != 3) throw std::invalid_argument("centre needs three coordinates");
    F.terms.push_back({phi, {z0[0], z0[1], z0[2]}, 1.0});
    ShiftResult r = modulation_shift(F, m);
    json out = stamp(c);
    out.update({{"z", {r.z[0], r.z[1], r.z[2]}},
                {"residuals", r.residuals},
                {"distance", r.distance},
                {"converged", r.converged}});
    std::cout << out.dump(2) << '\n';
    return r.converged ? ok : failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability diagnostics for spherical Vlasov-Poisson steady states"};
    app.require_subcommand(1);
    app.set_version_flag("--version", artifact_version());
    std::string config_file;
    app.add_option("--config", config_file, "JSON config; flags override its values");

    // every command's defaults; the resolved object is what gets digested
    json build_c{{"command", "build"}, {"kind", "king"}, {"w0", 3.0},   {"q", 1.0},
                 {"depth", 1.0},       {"steps", 4000},  {"r_max_factor", 3.0}, {"out", "model.json"}};
    json check_c{{"command", "check"}, {"model", "model.json"}, {"suite", "fixedpoint"}, {"seeds", 200},
                 {"seed", 1},          {"n_r", 400},            {"n_u", 200},           {"N", 100000},
                 {"replicas", 16},     {"out", ""},             {"csv", ""}};
    json evolve_c{{"command", "evolve"}, {"model", "model.json"}, {"eta", 0.01},   {"family", "amplitude"},
                  {"N", 100000},         {"replicas", 16},        {"dt", 0.02},    {"T", 50.0},
                  {"cadence", 1.0},      {"seed", 1},             {"threads", 4},  {"frozen", false},
                  {"out", "evolve.csv"}, {"checkpoint", ""}};
    json rearr_c{{"command", "rearrange"}, {"model", "model.json"}, {"family", "amplitude"}, {"eps", 0.05},
                 {"seed", 1},              {"n_r", 400},            {"n_u", 200},             {"prefix", "rearrange"}};
    json shift_c{{"command", "shift"}, {"model", "model.json"}, {"potential", ""}, {"centre", {0.0, 0.0, 0.0}}};

    ModelParams mp;
    std::string out, model, suite, family, prefix, potential, csv, checkpoint;
    double eta = 0, eps = 0, dt = 0, T = 0, cadence = 0;
    std::size_t seeds = 0, N = 0, replicas = 0, n_r = 0, n_u = 0, threads = 0;
    std::uint64_t seed = 0;
    bool frozen = false;
    std::vector<double> centre;

    auto* b = app.add_subcommand("build", "build a steady state and write its model JSON");
    b->add_option("--kind", mp.kind)->check(CLI::IsMember({"king", "polytrope"}));
    b->add_option("--w0", mp.w0, "King depth W0");
    b->add_option("--q", mp.q, "polytrope exponent, 0 < q < 7/2");
    b->add_option("--depth", mp.depth, "polytrope central depth e0 - phi(0)");
    b->add_option("--steps", mp.build.steps);
    b->add_option("--r-max-factor", mp.build.r_max_factor);
    b->add_option("--out", out);

    auto* ch = app.add_subcommand("check", "run a diagnostic suite; exit 0 iff it passes");
    ch->add_option("--model", model);
    ch->add_option("--suite", suite)->check(CLI::IsMember(suite_names()));
    ch->add_option("--seeds", seeds, "sample count (monotonicity, lowerbound, hormander, estimates)");
    ch->add_option("--seed", seed);
    ch->add_option("--n-r", n_r);
    ch->add_option("--n-u", n_u);
    ch->add_option("--N", N);
    ch->add_option("--replicas", replicas);
    ch->add_option("--out", out, "report path (stdout if empty)");
    ch->add_option("--csv", csv, "spectrum table (spectrum suite)");

    auto* ev = app.add_subcommand("evolve", "particle evolution of a perturbed steady state");
    ev->add_option("--model", model);
    ev->add_option("--eta", eta, "relative initial orbital distance (amplitude) or squeeze eps");
    ev->add_option("--family", family)->check(CLI::IsMember({"amplitude", "squeeze"}));
    ev->add_option("--N", N);
    ev->add_option("--replicas", replicas);
    ev->add_option("--dt", dt, "in central dynamical times");
    ev->add_option("--T", T, "in central dynamical times");
    ev->add_option("--cadence", cadence, "in central dynamical times");
    ev->add_option("--seed", seed);
    ev->add_option("--threads", threads);
    ev->add_flag("--frozen", frozen, "frozen phi_Q instead of the self-consistent field");
    ev->add_option("--out", out);
    ev->add_option("--checkpoint", checkpoint);

    auto* re = app.add_subcommand("rearrange", "dump mu_f, f*, a_phi and f^{*phi} tables");
    re->add_option("--model", model);
    re->add_option("--family", family)->check(CLI::IsMember({"amplitude", "scramble", "squeeze"}));
    re->add_option("--eps", eps);
    re->add_option("--seed", seed);
    re->add_option("--n-r", n_r);
    re->add_option("--n-u", n_u);
    re->add_option("--prefix", prefix);

    auto* sh = app.add_subcommand("shift", "modulation shift of a potential placed at a centre");
    sh->add_option("--model", model);
    sh->add_option("--potential", potential, "potential or model JSON (defaults to phi_Q)");
    sh->add_option("--centre", centre)->expected(3);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        Resolver r;
        if (b->parsed()) {
            r = {build_c, b};
            r.load(config_file, "build");
            r.flag("kind", "--kind", mp.kind);
            r.flag("w0", "--w0", mp.w0);
            r.flag("q", "--q", mp.q);
            r.flag("depth", "--depth", mp.depth);
            r.flag("steps", "--steps", mp.build.steps);
            r.flag("r_max_factor", "--r-max-factor", mp.build.r_max_factor);
            r.flag("out", "--out", out);
            return cmd_build(r.config);
        }
        if (ch->parsed()) {
            r = {check_c, ch};
            r.load(config_file, "check");
            r.flag("model", "--model", model);
            r.flag("suite", "--suite", suite);
            r.flag("seeds", "--seeds", seeds);
            r.flag("seed", "--seed", seed);
            r.flag("n_r", "--n-r", n_r);
            r.flag("n_u", "--n-u", n_u);
            r.flag("N", "--N", N);
            r.flag("replicas", "--replicas", replicas);
            r.flag("out", "--out", out);
            r.flag("csv", "--csv", csv);
            return cmd_check(r.config);
        }
        if (ev->parsed()) {
            r = {evolve_c, ev};
            r.load(config_file, "evolve");
            r.flag("model", "--model", model);
            r.flag("eta", "--eta", eta);
            r.flag("family", "--family", family);
            r.flag("N", "--N", N);
            r.flag("replicas", "--replicas", replicas);
            r.flag("dt", "--dt", dt);
            r.flag("T", "--T", T);
            r.flag("cadence", "--cadence", cadence);
            r.flag("seed", "--seed", seed);
            r.flag("threads", "--threads", threads);
            r.flag("frozen", "--frozen", frozen);
            r.flag("out", "--out", out);
            r.flag("checkpoint", "--checkpoint", checkpoint);
            return cmd_evolve(r.config);
        }
        if (re->parsed()) {
            r = {rearr_c, re};
            r.load(config_file, "rearrange");
            r.flag("model", "--model", model);
            r.flag("family", "--family", family);
            r.flag("eps", "--eps", eps);
            r.flag("seed", "--seed", seed);
            r.flag("n_r", "--n-r", n_r);
            r.flag("n_u", "--n-u", n_u);
            r.flag("prefix", "--prefix", prefix);
            return cmd_rearrange(r.config);
        }
        r = {shift_c, sh};
        r.load(config_file, "shift");
        r.flag("model", "--model", model);
        r.flag("potential", "--potential", potential);
        r.flag("centre", "--centre", centre);
        return cmd_shift(r.config);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failed;
    }
}
