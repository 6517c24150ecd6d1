#include "qmeta/models.hpp"

#include <cmath>
#include <sstream>

#include "qmeta/errors.hpp"

namespace qmeta {

namespace {

double need(const PresetParams& p, const std::string& key) {
    auto it = p.params.find(key);
    if (it == p.params.end()) throw MissingParam("preset " + p.name + " requires parameter " + key);
    const double v = it->second;
    if (!std::isfinite(v)) throw InvalidArgument("parameter " + key + " is not finite");
    return v;
}

double need_rate(const PresetParams& p, const std::string& key) {
    const double v = need(p, key);
    if (v < 0) throw InvalidArgument("rate " + key + " must be non-negative");
    return v;
}

double optional_param(const PresetParams& p, const std::string& key, double fallback) {
    auto it = p.params.find(key);
    if (it == p.params.end()) return fallback;
    if (!std::isfinite(it->second)) throw InvalidArgument("parameter " + key + " is not finite");
    return it->second;
}

// |j><k| in dimension 3.
CMatrix e3(int j, int k) {
    CMatrix m = CMatrix::Zero(3, 3);
    m(j, k) = 1.0;
    return m;
}

CMatrix three_state_hamiltonian(double o1, double o2) {
    // Rotated basis: H = i O1 (|0><1| - |1><0|) + i O2 (|0><2| - |2><0|),
    // so that G = -iH - J^dag J / 2 is real.
    return kI * o1 * (e3(0, 1) - e3(1, 0)) + kI * o2 * (e3(0, 2) - e3(2, 0));
}

const CMatrix& sigma_x() {
    static const CMatrix m = (CMatrix(2, 2) << 0, 1, 1, 0).finished();
    return m;
}
const CMatrix& sigma_y() {
    static const CMatrix m = (CMatrix(2, 2) << 0, -kI, kI, 0).finished();
    return m;
}
// Single-qubit basis (|u>, |d>).
const CMatrix& sigma_plus() {  // |u><d|
    static const CMatrix m = (CMatrix(2, 2) << 0, 1, 0, 0).finished();
    return m;
}
const CMatrix& sigma_minus() {  // |d><u|
    static const CMatrix m = (CMatrix(2, 2) << 0, 0, 1, 0).finished();
    return m;
}
const CMatrix& n_up() {
    static const CMatrix m = (CMatrix(2, 2) << 1, 0, 0, 0).finished();
    return m;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

LindbladModel two_qubit(const PresetParams& p, bool superposed) {
    const double g1 = need_rate(p, "gamma1");
    const double g2 = need_rate(p, "gamma2");
    const double o1 = need(p, "Omega1");
    const double o2 = need(p, "Omega2");
    const double orr = optional_param(p, "Omega_r", 0.0);
    const CMatrix id = CMatrix::Identity(2, 2);

    LindbladModel m;
    m.dim = 4;
    m.label = p.name;
    m.hamiltonian = o1 * kron(sigma_y(), id) + o2 * kron(id, sigma_y()) + orr * kron(sigma_x(), sigma_y());
    const CMatrix j1 = std::sqrt(g1) * kron(n_up(), sigma_minus());
    const CMatrix j2 = std::sqrt(g2) * kron(id - n_up(), sigma_plus());
    if (superposed)
        m.jumps = {j1 - j2};
    else
        m.jumps = {j1, j2};
    return m;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"three_state_1j", "three_state_2j", "three_state_merged", "two_qubit_dfs", "two_qubit_superposed"};
}

LindbladModel build_preset(const PresetParams& p) {
    if (p.name == "three_state_1j" || p.name == "three_state_2j" || p.name == "three_state_merged") {
        const double o1 = need(p, "Omega1");
        const double o2 = need(p, "Omega2");
        const double k1 = need_rate(p, "kappa1");
        LindbladModel m;
        m.dim = 3;
        m.label = p.name;
        m.hamiltonian = three_state_hamiltonian(o1, o2);
        const CMatrix j1 = std::sqrt(k1) * e3(0, 1);
        if (p.name == "three_state_1j") {
            m.jumps = {j1};
        } else {
            const CMatrix j2 = std::sqrt(need_rate(p, "kappa2")) * e3(2, 2);
            if (p.name == "three_state_2j")
                m.jumps = {j1, j2};
            else
                m.jumps = {j1 + j2};
        }
        m.validate();
        return m;
    }
    if (p.name == "two_qubit_dfs" || p.name == "two_qubit_superposed") {
        auto m = two_qubit(p, p.name == "two_qubit_superposed");
        m.validate();
        return m;
    }
    std::ostringstream os;
    os << "unknown preset '" << p.name << "'; known presets:";
    for (const auto& n : preset_names()) os << ' ' << n;
    throw UnknownPreset(os.str());
}

Eigen::MatrixXd appendix_liouvillian_3state(double o1, double o2, double k) {
    Eigen::MatrixXd l(9, 9);
    // clang-format off
    l <<  0,      0,      0,      0,     -o2,     0,      0,      0,      0,
          0,     -k,      0,     -o1,     0,      0,      0,      0,      0,
          0,      k,      0,      o1,     o2,     0,      0,      0,      0,
          0,      2 * o1, -2 * o1, -k / 2, 0,     o2,     0,      0,      0,
          2 * o2, 0,     -2 * o2, 0,      0,      o1,     0,      0,      0,
          0,      0,      0,     -o2,    -o1,    -k / 2,  0,      0,      0,
          0,      0,      0,      0,      0,      0,     -k / 2,  0,     -o2,
          0,      0,      0,      0,      0,      0,      0,      0,      o1,
          0,      0,      0,      0,      0,      0,      o2,    -o1,    -k / 2;
    // clang-format on
    return l;
}

std::vector<CMatrix> appendix_operator_basis() {
    return {e3(2, 2),           e3(1, 1),           e3(0, 0),
            e3(0, 1) + e3(1, 0), e3(0, 2) + e3(2, 0), e3(1, 2) + e3(2, 1),
            e3(0, 1) - e3(1, 0), e3(0, 2) - e3(2, 0), e3(1, 2) - e3(2, 1)};
}

CMatrix to_operator_basis(const CMatrix& sup, const std::vector<CMatrix>& basis) {
    const auto n = Eigen::Index(basis.size());
    if (sup.rows() != n || sup.cols() != n) throw DimensionMismatch("to_operator_basis: basis size does not match");
    CMatrix t(n, n);
    for (Eigen::Index a = 0; a < n; ++a) t.row(a) = vectorise(basis[std::size_t(a)]).adjoint();
    Eigen::PartialPivLU<CMatrix> lu(t);
    return t * sup * lu.inverse();
}

CVector basis_ket(std::size_t d, std::size_t k) {
    if (k >= d) throw InvalidArgument("basis_ket: index out of range");
    CVector v = CVector::Zero(Eigen::Index(d));
    v(Eigen::Index(k)) = 1.0;
    return v;
}

CVector ket_uu() { return basis_ket(4, 0); }
CVector ket_ud() { return basis_ket(4, 1); }
CVector ket_du() { return basis_ket(4, 2); }
CVector ket_dd() { return basis_ket(4, 3); }

}  // namespace qmeta
