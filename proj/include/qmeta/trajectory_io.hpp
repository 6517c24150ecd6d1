#pragma once

// TrajectoryRecord serialisation: a grid CSV (t, re_0, im_0, re_1, im_1, ...)
// plus a JSON sidecar with the seed, stream and the exact jump record.

#include <string>

#include "json.hpp"
#include "qmeta/unravel.hpp"

namespace qmeta {

std::string trajectory_csv(const TrajectoryRecord& rec);
nlohmann::json trajectory_sidecar(const TrajectoryRecord& rec);

/// Writes <stem>.csv and <stem>.json; returns the two paths.
std::pair<std::string, std::string> save_trajectory(const TrajectoryRecord& rec, const std::string& stem);

}  // namespace qmeta
