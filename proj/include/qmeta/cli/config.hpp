#pragma once

// Experiment configuration: one JSON document plus command-line overrides.
//
// {
//   "operation": "invariant-measure",
//   "model": {"preset": "three_state_1j", "params": {"Omega1": 1, "Omega2": 0.05, "kappa1": 4}},
//   "output_dir": "out/measures",
//   "seed": 7,
//   "T": 2000, "dt": 0.1, "n_traj": 2000, "threads": 4,
//   "psi0": [1, 0, 0],                       // or "basis:2", entries may be [re, im]
//   "states": [[...], ...],                  // committor table inputs
//   "scan_param": "Omega2", "values": [1e-2, 1e-3],
//   "phases": [0, 1],                        // phase of each jump's reset point
//   "radius": 0.05, "d": 1.0, "m": 2,
//   "figures": {"p_ell": "fig3b"}            // output role -> figure tag
// }

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmeta/qme.hpp"

namespace qmeta::cli {

inline const std::vector<std::string>& operations() {
    static const std::vector<std::string> ops{"spectrum",          "evolve",    "trajectory", "ensemble", "committor",
                                              "invariant-measure", "splitting", "elbow",      "scaling"};
    return ops;
}

inline const std::vector<std::string>& figure_tags() {
    static const std::vector<std::string> tags{"fig2b", "fig3b", "fig3c", "fig3d", "fig4d", "fig4e",
                                               "fig4f", "fig5d", "fig5e", "fig6e", "fig6f"};
    return tags;
}

struct ExperimentConfig {
    std::string operation;
    nlohmann::json model_spec;  // preset reference or explicit model
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> t_final;
    std::optional<double> dt;
    std::size_t n_traj = 2000;
    unsigned threads = 0;
    std::optional<CVector> psi0;
    std::vector<CVector> states;
    std::string scan_param = "Omega2";
    std::vector<double> values;
    std::vector<int> phases;
    double radius = 0.05;
    double d = 1.0;
    std::optional<std::size_t> m;
    std::map<std::string, std::string> figures;

    LindbladModel model() const;
    /// Builds the model with one preset parameter replaced (scaling runs).
    LindbladModel model_with(const std::string& param, double value) const;
    bool stochastic() const;
    /// Throws SchemaError / InvalidArgument.
    void validate() const;
    nlohmann::json to_json() const;
};

/// Parses a config document. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// "basis:k", a list of numbers, or a list of [re, im] pairs; normalised.
CVector state_from_json(const nlohmann::json& j, std::size_t dim);
nlohmann::json state_to_json(const CVector& psi);

/// Default output directory: $QMETA_OUTPUT_DIR, else "qmeta_out".
std::string default_output_dir();

}  // namespace qmeta::cli
