#include "qmeta/model_io.hpp"

#include <fstream>

#include "qmeta/errors.hpp"
#include "qmeta/models.hpp"

namespace qmeta {

using nlohmann::json;

json matrix_to_json(const CMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw SchemaError("matrix must be a non-empty array of rows");
    const auto rows = Eigen::Index(j.size());
    const auto cols = Eigen::Index(j.front().size());
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[std::size_t(r)];
        if (!row.is_array() || Eigen::Index(row.size()) != cols) throw SchemaError("matrix rows have unequal length");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row[std::size_t(c)];
            if (e.is_number())
                m(r, c) = e.get<double>();
            else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
                m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
            else
                throw SchemaError("matrix entry must be a number or a [re, im] pair");
        }
    }
    return m;
}

json model_to_json(const LindbladModel& model) {
    json j;
    j["dim"] = model.dim;
    j["label"] = model.label;
    j["H"] = matrix_to_json(model.hamiltonian);
    j["jumps"] = json::array();
    for (const auto& op : model.jumps) j["jumps"].push_back(matrix_to_json(op));
    return j;
}

LindbladModel model_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("model document must be a JSON object");
    if (j.contains("preset")) {
        PresetParams p;
        p.name = j.at("preset").get<std::string>();
        if (j.contains("params")) {
            for (const auto& [k, v] : j.at("params").items()) {
                if (!v.is_number()) throw SchemaError("preset parameter " + k + " must be a number");
                p.params[k] = v.get<double>();
            }
        }
        return build_preset(p);
    }
    for (const char* key : {"dim", "H", "jumps"})
        if (!j.contains(key)) throw SchemaError(std::string("model document is missing '") + key + "'");
    LindbladModel m;
    try {
        m.dim = j.at("dim").get<std::size_t>();
        m.label = j.value("label", std::string{});
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model document: ") + e.what());
    }
    m.hamiltonian = matrix_from_json(j.at("H"));
    if (!j.at("jumps").is_array()) throw SchemaError("'jumps' must be an array of matrices");
    for (const auto& op : j.at("jumps")) m.jumps.push_back(matrix_from_json(op));
    m.validate();
    return m;
}

void save_model(const LindbladModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open " + path + " for writing");
    // nlohmann::json prints doubles with max_digits10, so the round trip is exact.
    out << model_to_json(model).dump(2) << '\n';
}

LindbladModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open model file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace qmeta
