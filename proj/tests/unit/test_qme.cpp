#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "qmeta/errors.hpp"
#include "qmeta/models.hpp"
#include "qmeta/qme.hpp"

using namespace qmeta;
using testing_util::one_jump_model;

TEST_CASE("build_liouvillian matches the column-by-column oracle") {
    for (const auto& m : {one_jump_model(), testing_util::two_jump_model(), testing_util::dfs_model(0.5)}) {
        const CMatrix ref = oracle::liouvillian(m.hamiltonian, m.jumps);
        CHECK((build_liouvillian(m) - ref).norm() < 1e-12 * ref.norm());
    }
}

TEST_CASE("apply_liouvillian agrees with the superoperator") {
    std::mt19937_64 rng(21);
    const auto m = testing_util::two_jump_model();
    const CMatrix rho = testing_util::random_matrix(rng, 3);
    const CMatrix l = build_liouvillian(m);
    CHECK((vectorise(apply_liouvillian(m, rho)) - l * vectorise(rho)).norm() < 1e-12);
    CHECK((devectorise(vectorise(rho), 3) - rho).norm() == 0.0);
}

TEST_CASE("Liouvillian preserves the trace") {
    const CMatrix l = build_liouvillian(testing_util::dfs_model());
    const CVector id = vectorise(CMatrix::Identity(4, 4));
    CHECK((id.adjoint() * l).norm() < 1e-12);
}

TEST_CASE("spectral_decompose: steady state, biorthonormality, Hermitian pairs") {
    const auto m = one_jump_model();
    const auto sp = spectral_decompose(m);
    REQUIRE(sp.values.size() == 9);
    CHECK(std::abs(sp.values[0]) < 1e-10);
    const CMatrix& rho = sp.steady_state();
    CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
    CHECK(is_hermitian(rho, 1e-12));
    CHECK(Eigen::SelfAdjointEigenSolver<CMatrix>(rho).eigenvalues().minCoeff() > -1e-12);
    const CMatrix oracle_ss = oracle::steady_state(oracle::liouvillian(m.hamiltonian, m.jumps), 3);
    CHECK((rho - oracle_ss).norm() < 1e-9);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            const Complex v = (sp.left[i] * sp.right[j]).trace();
            CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
    CHECK((sp.left[0] - CMatrix::Identity(3, 3)).norm() < 1e-9);
    CHECK(std::abs(sp.values[1].imag()) < 1e-10);
    CHECK(is_hermitian(sp.right[1], 1e-10));
    CHECK(is_hermitian(sp.left[1], 1e-10));
}

TEST_CASE("spectral_decompose reports a degenerate steady state") {
    LindbladModel m;
    m.dim = 3;
    m.hamiltonian = CMatrix::Zero(3, 3);
    CMatrix j = CMatrix::Zero(3, 3);
    j(0, 1) = 1.0;
    m.jumps = {j};
    try {
        spectral_decompose(m);
        FAIL("expected DegenerateSteadyState");
    } catch (const DegenerateSteadyState& e) {
        CHECK(e.candidates().size() >= 2);
    }
}

TEST_CASE("evolve_qme matches the Taylor-exponential oracle") {
    const auto m = one_jump_model();
    const auto sp = spectral_decompose(m);
    CMatrix rho0 = CMatrix::Zero(3, 3);
    rho0(0, 0) = 1.0;
    const std::vector<double> times{0.0, 0.5, 5.0, 50.0, 500.0};
    const auto got = evolve_qme(sp, rho0, times);
    const auto ref = oracle::evolve(oracle::liouvillian(m.hamiltonian, m.jumps), rho0, times);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK((got[i] - ref[i]).norm() < 1e-9);
    CMatrix bad = rho0;
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(evolve_qme(sp, bad, times), InvalidArgument);
}

TEST_CASE("metastable analysis of the single-jump model") {
    const auto m = one_jump_model();
    const auto sp = spectral_decompose(m);
    const auto meta = metastable_analysis(sp, m);
    CHECK(meta.m == 2);
    CHECK(meta.classical);
    CHECK_FALSE(meta.no_gap);
    CHECK(meta.tau_slow == doctest::Approx(-1.0 / sp.values[1].real()));
    CHECK(meta.gap_ratio > 10.0);
    CHECK((meta.povm_a + meta.povm_b - CMatrix::Identity(3, 3)).norm() < 1e-10);
    CHECK(std::abs(meta.rho_a.trace() - 1.0) < 1e-10);
    CHECK(std::abs(meta.rho_b.trace() - 1.0) < 1e-10);
    CHECK(meta.activity_a > meta.activity_b);
    // Phase B is the dark one, concentrated on |2>.
    CHECK(meta.rho_b(2, 2).real() > 0.9);
    // The steady state is a mixture of the two EMS.
    const double pa = (meta.povm_a * sp.steady_state()).trace().real();
    CHECK((pa * meta.rho_a + (1 - pa) * meta.rho_b - sp.steady_state()).norm() < 1e-9);
    CVector two = CVector::Zero(3);
    two(2) = 1.0;
    const auto [ca, cb] = committor_qme(meta, two);
    CHECK(ca + cb == doctest::Approx(1.0));
    CHECK(cb > 0.95);
}

TEST_CASE("metastable analysis flags a missing gap and honours strict mode") {
    const auto m = build_preset({"three_state_1j", {{"Omega1", 1.0}, {"Omega2", 1.0}, {"kappa1", 4.0}}});
    const auto sp = spectral_decompose(m);
    MetastableOptions o;
    o.m = 2;
    const auto meta = metastable_analysis(sp, m, o);
    CHECK(meta.no_gap);
    o.strict_gap = true;
    CHECK_THROWS_AS(metastable_analysis(sp, m, o), NoGap);
}

TEST_CASE("DFS model has four slow modes and is not classical") {
    const auto m = testing_util::dfs_model();
    const auto sp = spectral_decompose(m);
    CHECK(select_slow_modes(sp) == 4);
    const auto meta = metastable_analysis(sp, m);
    CHECK(meta.m == 4);
    CHECK_FALSE(meta.classical);
    const CVector ud = ket_ud(), du = ket_du();
    const CMatrix rho = density((ud + du) / std::sqrt(2.0));
    const auto c = dfs_coordinates(rho, ud, du);
    CHECK(c.p1 == doctest::Approx(0.5));
    CHECK(c.z.real() == doctest::Approx(0.5));
    const CMatrix proj = slow_projection(sp, rho, 4);
    CHECK(std::abs(proj.trace() - 1.0) < 1e-10);
    CHECK((metastable_truncation(sp, rho, 0.0, 4) - proj).norm() < 1e-12);
}

TEST_CASE("small_parameter_limit evaluates the family at eps") {
    auto family = [](double eps) {
        return build_preset({"three_state_1j", {{"Omega1", 1.0}, {"Omega2", eps}, {"kappa1", 4.0}}});
    };
    const auto meta = small_parameter_limit(family, 1e-3);
    CHECK(meta.povm_b(2, 2).real() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(jump_activity(family(1e-3), meta.rho_a) > 0.1);
}
