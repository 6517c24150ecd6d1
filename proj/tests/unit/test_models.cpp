#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "qmeta/errors.hpp"
#include "qmeta/model_io.hpp"
#include "qmeta/models.hpp"

using namespace qmeta;

TEST_CASE("every preset builds a valid model") {
    const std::map<std::string, double> p{{"Omega1", 0.3}, {"Omega2", 0.05}, {"kappa1", 4.0}, {"kappa2", 1.0},
                                          {"gamma1", 4.0}, {"gamma2", 1.0}};
    for (const auto& name : preset_names()) {
        const auto m = build_preset({name, p});
        CHECK_NOTHROW(m.validate());
        CHECK((m.hamiltonian - m.hamiltonian.adjoint()).norm() < 1e-15);
        CHECK(m.dim == (name.rfind("two_qubit", 0) == 0 ? 4u : 3u));
    }
}

TEST_CASE("preset errors") {
    CHECK_THROWS_AS(build_preset({"nope", {}}), UnknownPreset);
    CHECK_THROWS_AS(build_preset({"three_state_1j", {{"Omega1", 1.0}}}), MissingParam);
    CHECK_THROWS_AS(build_preset({"three_state_1j", {{"Omega1", 1.0}, {"Omega2", 0.1}, {"kappa1", -1.0}}}),
                    InvalidArgument);
}

TEST_CASE("two-qubit jump operators are the conditional spin flips") {
    const auto m = testing_util::dfs_model();
    REQUIRE(m.jumps.size() == 2);
    // J1 takes |uu> to |ud>, J2 takes |dd> to |du>.
    CHECK((m.jumps[0] * ket_uu() - 2.0 * ket_ud()).norm() < 1e-14);
    CHECK((m.jumps[1] * ket_dd() - ket_du()).norm() < 1e-14);
    CHECK((m.jumps[0] * ket_ud()).norm() < 1e-14);
    CHECK((m.jumps[1] * ket_du()).norm() < 1e-14);
}

TEST_CASE("appendix matrix agrees with the Liouvillian in the operator basis") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    const auto basis = appendix_operator_basis();
    Eigen::MatrixXcd t(9, 9);
    for (Eigen::Index a = 0; a < 9; ++a) t.row(a) = oracle::vec(basis[std::size_t(a)]).adjoint();
    for (int rep = 0; rep < 5; ++rep) {
        const double o1 = u(rng), o2 = u(rng), k = u(rng);
        const auto m = build_preset({"three_state_1j", {{"Omega1", o1}, {"Omega2", o2}, {"kappa1", k}}});
        const Eigen::MatrixXcd conj = t * build_liouvillian(m) * t.inverse();
        const Eigen::MatrixXd app = appendix_liouvillian_3state(o1, o2, k);
        CHECK((conj - app.cast<Complex>()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((to_operator_basis(build_liouvillian(m), basis) - conj).norm() < 1e-12);
    }
}

TEST_CASE("model JSON round trip and preset references") {
    const auto m = testing_util::two_jump_model();
    const auto back = model_from_json(model_to_json(m));
    CHECK(back.dim == m.dim);
    CHECK((back.hamiltonian - m.hamiltonian).norm() == 0.0);
    REQUIRE(back.jumps.size() == m.jumps.size());
    for (std::size_t k = 0; k < m.jumps.size(); ++k) CHECK((back.jumps[k] - m.jumps[k]).norm() == 0.0);
    const auto p = model_from_json(nlohmann::json::parse(
        R"({"preset": "three_state_2j", "params": {"Omega1": 1, "Omega2": 0.05, "kappa1": 4, "kappa2": 1}})"));
    CHECK((p.hamiltonian - m.hamiltonian).norm() == 0.0);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"dim": 2, "H": [[1]]})")), SchemaError);
}
