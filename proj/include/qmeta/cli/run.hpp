#pragma once

// Experiment driver. Every operation writes its artifacts into
// config.output_dir together with manifest.json and returns the manifest:
//
// {"operation": ..., "config": {...}, "output_dir": ...,
//  "files": [{"path", "role", "figure", "sha256", "bytes"}], "summary": {...}}

#include <string>

#include "json.hpp"
#include "qmeta/cli/config.hpp"

namespace qmeta::cli {

nlohmann::json run(const ExperimentConfig& config);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// {"error": {"kind": ..., "message": ...}}
nlohmann::json error_json(const std::string& kind, const std::string& message);

}  // namespace qmeta::cli
