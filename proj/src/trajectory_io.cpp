#include "qmeta/trajectory_io.hpp"

#include <fstream>
#include <sstream>

#include "qmeta/csv.hpp"
#include "qmeta/errors.hpp"

namespace qmeta {

std::string trajectory_csv(const TrajectoryRecord& rec) {
    std::ostringstream os;
    const auto d = rec.grid_states.empty() ? 0 : rec.grid_states.front().size();
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 0; i < d; ++i) {
        header.push_back("re_" + std::to_string(i));
        header.push_back("im_" + std::to_string(i));
    }
    CsvWriter w(os, header);
    for (std::size_t g = 0; g < rec.grid_times.size(); ++g) {
        w << rec.grid_times[g];
        for (Eigen::Index i = 0; i < d; ++i) w << rec.grid_states[g](i).real() << rec.grid_states[g](i).imag();
        w.end_row();
    }
    return os.str();
}

nlohmann::json trajectory_sidecar(const TrajectoryRecord& rec) {
    nlohmann::json j;
    j["seed"] = rec.seed;
    j["stream"] = rec.stream;
    j["t_final"] = rec.t_final;
    j["dt"] = rec.dt;
    j["jump_times"] = rec.jump_times;
    j["jump_indices"] = rec.jump_indices;
    nlohmann::json fin = nlohmann::json::array();
    for (Eigen::Index i = 0; i < rec.final_state.size(); ++i)
        fin.push_back({rec.final_state(i).real(), rec.final_state(i).imag()});
    j["final_state"] = fin;
    return j;
}

std::pair<std::string, std::string> save_trajectory(const TrajectoryRecord& rec, const std::string& stem) {
    const std::string csv = stem + ".csv", side = stem + ".json";
    std::ofstream c(csv), s(side);
    if (!c || !s) throw InvalidArgument("cannot write trajectory files at " + stem);
    c << trajectory_csv(rec);
    s << trajectory_sidecar(rec).dump(2) << '\n';
    return {csv, side};
}

}  // namespace qmeta
