#include "qmeta/cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "qmeta/errors.hpp"
#include "qmeta/model_io.hpp"
#include "qmeta/models.hpp"

namespace qmeta::cli {

using nlohmann::json;

namespace {

template <class T>
T get_as(const json& doc, const char* key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

std::string default_output_dir() {
    const char* env = std::getenv("QMETA_OUTPUT_DIR");
    return env && *env ? env : "qmeta_out";
}

CVector state_from_json(const json& j, std::size_t dim) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s.rfind("basis:", 0) != 0) throw SchemaError("state string must look like 'basis:k'");
        std::size_t k = 0;
        try {
            k = std::stoul(s.substr(6));
        } catch (const std::exception&) {
            throw SchemaError("bad basis index in '" + s + "'");
        }
        CVector v = CVector::Zero(Eigen::Index(dim));
        if (k >= dim) throw InvalidArgument("basis index " + std::to_string(k) + " out of range");
        v(Eigen::Index(k)) = 1.0;
        return v;
    }
    if (!j.is_array() || j.size() != dim)
        throw SchemaError("state must have " + std::to_string(dim) + " amplitudes");
    CVector v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        const auto& e = j[i];
        if (e.is_number())
            v(Eigen::Index(i)) = e.get<double>();
        else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
            v(Eigen::Index(i)) = Complex(e[0].get<double>(), e[1].get<double>());
        else
            throw SchemaError("state amplitude must be a number or [re, im]");
    }
    if (v.norm() == 0.0) throw InvalidArgument("state vector is zero");
    return v / v.norm();
}

json state_to_json(const CVector& psi) {
    json a = json::array();
    for (Eigen::Index i = 0; i < psi.size(); ++i) a.push_back({psi(i).real(), psi(i).imag()});
    return a;
}

ExperimentConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("config must be a JSON object");
    static const std::set<std::string> known{"operation", "model", "output_dir", "seed", "T", "dt", "n_traj",
                                             "threads", "psi0", "states", "scan_param", "values", "phases",
                                             "radius", "d", "m", "figures"};
    for (const auto& [k, v] : doc.items())
        if (!known.count(k)) throw SchemaError("unknown config key '" + k + "'");

    ExperimentConfig c;
    c.output_dir = default_output_dir();
    if (doc.contains("operation")) c.operation = get_as<std::string>(doc, "operation");
    if (doc.contains("model")) c.model_spec = doc.at("model");
    if (doc.contains("output_dir")) c.output_dir = get_as<std::string>(doc, "output_dir");
    if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc, "seed");
    if (doc.contains("T")) c.t_final = get_as<double>(doc, "T");
    if (doc.contains("dt")) c.dt = get_as<double>(doc, "dt");
    if (doc.contains("n_traj")) c.n_traj = get_as<std::size_t>(doc, "n_traj");
    if (doc.contains("threads")) c.threads = get_as<unsigned>(doc, "threads");
    if (doc.contains("scan_param")) c.scan_param = get_as<std::string>(doc, "scan_param");
    if (doc.contains("values")) c.values = get_as<std::vector<double>>(doc, "values");
    if (doc.contains("phases")) c.phases = get_as<std::vector<int>>(doc, "phases");
    if (doc.contains("radius")) c.radius = get_as<double>(doc, "radius");
    if (doc.contains("d")) c.d = get_as<double>(doc, "d");
    if (doc.contains("m")) c.m = get_as<std::size_t>(doc, "m");
    if (doc.contains("figures")) c.figures = get_as<std::map<std::string, std::string>>(doc, "figures");
    if (doc.contains("psi0") || doc.contains("states")) {
        const std::size_t dim = c.model().dim;
        if (doc.contains("psi0")) c.psi0 = state_from_json(doc.at("psi0"), dim);
        if (doc.contains("states")) {
            if (!doc.at("states").is_array()) throw SchemaError("'states' must be an array");
            for (const auto& s : doc.at("states")) c.states.push_back(state_from_json(s, dim));
        }
    }
    return c;
}

LindbladModel ExperimentConfig::model() const {
    if (model_spec.is_null()) throw SchemaError("config has no model");
    return model_from_json(model_spec);
}

LindbladModel ExperimentConfig::model_with(const std::string& param, double value) const {
    if (!model_spec.is_object() || !model_spec.contains("preset"))
        throw SchemaError("parameter scans need a preset model");
    json spec = model_spec;
    spec["params"][param] = value;
    return model_from_json(spec);
}

bool ExperimentConfig::stochastic() const {
    return operation == "trajectory" || operation == "ensemble" || operation == "invariant-measure" ||
           (operation == "committor" && !states.empty() && n_traj > 0 && seed.has_value());
}

void ExperimentConfig::validate() const {
    const auto& ops = operations();
    if (std::find(ops.begin(), ops.end(), operation) == ops.end())
        throw SchemaError("unknown operation '" + operation + "'");
    if (model_spec.is_null()) throw SchemaError("config has no model");
    if ((operation == "trajectory" || operation == "ensemble" || operation == "invariant-measure") && !seed)
        throw InvalidArgument("operation '" + operation + "' is stochastic and needs a seed");
    if (t_final && !(*t_final > 0)) throw InvalidArgument("T must be positive");
    if (dt && !(*dt > 0)) throw InvalidArgument("dt must be positive");
    if (!(radius > 0)) throw InvalidArgument("radius must be positive");
    if (!(d > 0)) throw InvalidArgument("d must be positive");
    if (operation == "scaling" && values.empty()) throw InvalidArgument("scaling needs a list of values");
    const auto& tags = figure_tags();
    for (const auto& [role, tag] : figures)
        if (std::find(tags.begin(), tags.end(), tag) == tags.end())
            throw SchemaError("figure tag '" + tag + "' for role '" + role + "' is not a declared figure");
}

json ExperimentConfig::to_json() const {
    json j;
    j["operation"] = operation;
    j["model"] = model_spec;
    j["output_dir"] = output_dir;
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["T"] = t_final ? json(*t_final) : json(nullptr);
    j["dt"] = dt ? json(*dt) : json(nullptr);
    j["n_traj"] = n_traj;
    if (psi0) j["psi0"] = state_to_json(*psi0);
    if (!states.empty()) {
        j["states"] = json::array();
        for (const auto& s : states) j["states"].push_back(state_to_json(s));
    }
    j["scan_param"] = scan_param;
    j["values"] = values;
    j["phases"] = phases;
    j["radius"] = radius;
    j["d"] = d;
    j["m"] = m ? json(*m) : json(nullptr);
    j["figures"] = figures;
    return j;
}

}  // namespace qmeta::cli
