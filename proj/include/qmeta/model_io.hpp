#pragma once

// JSON model documents:
//   {"dim": d, "label": "...", "H": [[[re, im], ...], ...], "jumps": [<matrix>, ...]}
// Matrices are row-major lists of rows; each entry is a [re, im] pair.
// A document may instead name a preset: {"preset": "three_state_1j", "params": {...}}.

#include "json.hpp"
#include <string>

#include "qmeta/qme.hpp"

namespace qmeta {

nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const LindbladModel& model);
/// Accepts either the explicit form or a preset reference. Throws SchemaError.
LindbladModel model_from_json(const nlohmann::json& j);

void save_model(const LindbladModel& model, const std::string& path);
LindbladModel load_model(const std::string& path);

}  // namespace qmeta
