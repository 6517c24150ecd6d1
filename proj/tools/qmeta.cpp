// qmeta: one subcommand per operation. Stdout carries only the manifest (or
// an error document); diagnostics go to stderr.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qmeta/cli/config.hpp"
#include "qmeta/cli/run.hpp"
#include "qmeta/errors.hpp"

using nlohmann::json;

namespace {

struct Flags {
    std::string config, preset, model, out, scan_param, psi0;
    std::vector<std::string> params, states, figures;
    std::optional<std::uint64_t> seed;
    std::optional<double> t_final, dt, radius, d;
    std::optional<std::size_t> n_traj, m;
    std::optional<unsigned> threads;
    std::vector<double> values;
    std::vector<int> phases;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("-c,--config", f.config, "JSON config document");
    sub->add_option("--preset", f.preset, "preset model name");
    sub->add_option("-p,--param", f.params, "preset parameter KEY=VALUE (repeatable)");
    sub->add_option("--model", f.model, "explicit model JSON file");
    sub->add_option("-o,--out", f.out, "output directory (default $QMETA_OUTPUT_DIR or qmeta_out)");
    sub->add_option("--seed", f.seed, "RNG seed (required for stochastic operations)");
    sub->add_option("-T,--T", f.t_final, "final time");
    sub->add_option("--dt", f.dt, "output grid spacing");
    sub->add_option("-n,--n-traj", f.n_traj, "number of trajectories");
    sub->add_option("-j,--threads", f.threads, "worker threads (0 = all cores)");
    sub->add_option("--psi0", f.psi0, "initial state: basis:k or a JSON amplitude list")->allow_extra_args(false);
    sub->add_option("--state", f.states, "committor/splitting input state, JSON amplitude list (repeatable)")
        ->expected(1)
        ->allow_extra_args(false)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("--scan-param", f.scan_param, "preset parameter scanned by 'scaling'");
    sub->add_option("--values", f.values, "values of the scanned parameter")->delimiter(',');
    sub->add_option("--phases", f.phases, "phase index of each reset point")->delimiter(',');
    sub->add_option("--radius", f.radius, "core ball radius (trace distance)");
    sub->add_option("--d", f.d, "elbow speed threshold");
    sub->add_option("--m", f.m, "number of slow modes (default: largest gap)");
    sub->add_option("--figure", f.figures, "ROLE=TAG figure declaration (repeatable)");
}

std::pair<std::string, std::string> split_kv(const std::string& s, const char* flag) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
        throw qmeta::SchemaError(std::string(flag) + " expects KEY=VALUE, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qmeta::InvalidArgument("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw qmeta::SchemaError("'" + path + "': " + e.what());
    }
}

json parse_state(const std::string& s) {
    if (s.rfind("basis:", 0) == 0) return s;
    try {
        return json::parse(s);
    } catch (const json::exception& e) {
        throw qmeta::SchemaError("state '" + s + "': " + e.what());
    }
}

json merge(const std::string& operation, const Flags& f) {
    json doc = f.config.empty() ? json::object() : read_json_file(f.config);
    if (!doc.is_object()) throw qmeta::SchemaError("config must be a JSON object");
    doc["operation"] = operation;
    if (!f.model.empty()) doc["model"] = read_json_file(f.model);
    if (!f.preset.empty()) {
        json params = doc.contains("model") && doc["model"].contains("params") ? doc["model"]["params"] : json::object();
        doc["model"] = {{"preset", f.preset}, {"params", params}};
    }
    for (const auto& kv : f.params) {
        const auto [k, v] = split_kv(kv, "--param");
        if (!doc.contains("model") || !doc["model"].contains("preset"))
            throw qmeta::SchemaError("--param needs a preset model");
        try {
            doc["model"]["params"][k] = std::stod(v);
        } catch (const std::exception&) {
            throw qmeta::SchemaError("--param " + k + ": '" + v + "' is not a number");
        }
    }
    if (!f.out.empty()) doc["output_dir"] = f.out;
    if (f.seed) doc["seed"] = *f.seed;
    if (f.t_final) doc["T"] = *f.t_final;
    if (f.dt) doc["dt"] = *f.dt;
    if (f.n_traj) doc["n_traj"] = *f.n_traj;
    if (f.threads) doc["threads"] = *f.threads;
    if (!f.psi0.empty()) doc["psi0"] = parse_state(f.psi0);
    if (!f.states.empty()) {
        doc["states"] = json::array();
        for (const auto& s : f.states) doc["states"].push_back(parse_state(s));
    }
    if (!f.scan_param.empty()) doc["scan_param"] = f.scan_param;
    if (!f.values.empty()) doc["values"] = f.values;
    if (!f.phases.empty()) doc["phases"] = f.phases;
    if (f.radius) doc["radius"] = *f.radius;
    if (f.d) doc["d"] = *f.d;
    if (f.m) doc["m"] = *f.m;
    for (const auto& kv : f.figures) {
        const auto [role, tag] = split_kv(kv, "--figure");
        doc["figures"][role] = tag;
    }
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metastability analysis of open quantum systems"};
    app.require_subcommand(1);
    Flags flags;
    for (const auto& op : qmeta::cli::operations()) add_flags(app.add_subcommand(op, op + " operation"), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, std::cerr, std::cerr);
    } catch (const CLI::ParseError& e) {
        std::cout << qmeta::cli::error_json("UsageError", e.what()).dump(2) << '\n';
        return 2;
    }

    try {
        const std::string op = app.get_subcommands().front()->get_name();
        const auto cfg = qmeta::cli::config_from_json(merge(op, flags));
        std::cout << qmeta::cli::run(cfg).dump(2) << '\n';
        return 0;
    } catch (const qmeta::Error& e) {
        std::cout << qmeta::cli::error_json(e.kind(), e.what()).dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cout << qmeta::cli::error_json("InternalError", e.what()).dump(2) << '\n';
    }
    return 1;
}
