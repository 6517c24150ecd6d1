#include <algorithm>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "qmeta/errors.hpp"
#include "qmeta/unravel.hpp"

using namespace qmeta;
using testing_util::one_jump_model;

TEST_CASE("StreamRng: reproducible, open interval, distinct streams") {
    StreamRng a(42, 0), b(42, 0), c(42, 1);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x > 0.0);
        CHECK(x < 1.0);
        if (x != c.uniform()) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("effective generator and survival") {
    const auto m = one_jump_model();
    const auto gen = effective_generator(m);
    CMatrix heff = m.hamiltonian;
    for (const auto& j : m.jumps) heff -= 0.5 * kI * j.adjoint() * j;
    CHECK((gen.g + kI * heff).norm() < 1e-14);
    CVector psi = CVector::Zero(3);
    psi(0) = 1.0;
    CHECK(survival(gen, psi, 0.0) == doctest::Approx(1.0));
    for (double t : {0.3, 3.0, 30.0})
        CHECK(survival(gen, psi, t) == doctest::Approx((oracle::expm(gen.g * t) * psi).squaredNorm()).epsilon(1e-9));
}

TEST_CASE("effective generator of a model with a zero jump operator") {
    LindbladModel m;
    m.dim = 2;
    m.hamiltonian = CMatrix::Zero(2, 2);
    m.jumps = {CMatrix::Zero(2, 2)};
    CHECK_NOTHROW(effective_generator(m));
}

TEST_CASE("waiting times follow the exact survival function (KS)") {
    const auto gen = effective_generator(one_jump_model());
    CVector psi = CVector::Zero(3);
    psi(0) = 1.0;
    StreamRng rng(7, 3);
    std::vector<double> sample;
    for (int i = 0; i < 4000; ++i) {
        const auto t = sample_jump_time(gen, psi, rng, 1e6);
        REQUIRE(t.has_value());
        sample.push_back(*t);
    }
    std::sort(sample.begin(), sample.end());
    auto cdf = [&](double t) { return 1.0 - (oracle::expm(gen.g * t) * psi).squaredNorm(); };
    CHECK(oracle::ks_statistic(sample, cdf) < oracle::ks_critical_1(double(sample.size())));
}

TEST_CASE("jump_time_for inverts the survival function") {
    const auto gen = effective_generator(one_jump_model());
    CVector psi = CVector::Zero(3);
    psi(0) = 1.0;
    const ModalOrbit orbit(gen.eigensystem(), psi);
    for (double u : {0.9, 0.5, 0.1, 0.01}) {
        const auto t = jump_time_for(orbit, u, 1e6, 1e-3);
        REQUIRE(t.has_value());
        CHECK(survival(gen, psi, *t) == doctest::Approx(u).epsilon(1e-8));
    }
    CHECK_FALSE(jump_time_for(orbit, 1e-300, 1.0, 1e-3).has_value());
}

TEST_CASE("channel probabilities") {
    const auto m = testing_util::two_jump_model();
    CVector psi(3);
    psi << 0.0, 1.0, 1.0;
    psi.normalize();
    const auto p = jump_channel_probabilities(m, psi);
    CHECK(p[0] == doctest::Approx(4.0 / 5.0));
    CHECK(p[1] == doctest::Approx(1.0 / 5.0));
    CHECK(pick_channel(p, 0.79) == 0);
    CHECK(pick_channel(p, 0.81) == 1);
    CVector dark = CVector::Zero(3);
    dark(0) = 1.0;
    CHECK_THROWS_AS(jump_channel_probabilities(m, dark), AllRatesZero);
}

TEST_CASE("trajectories are deterministic and independent of the worker count") {
    const auto gen = effective_generator(one_jump_model());
    CVector psi = CVector::Zero(3);
    psi(0) = 1.0;
    const TrajectoryOptions o{50.0, 1.0};
    StreamRng r1(9, 4), r2(9, 4);
    const auto a = simulate_trajectory(gen, psi, o, r1);
    const auto b = simulate_trajectory(gen, psi, o, r2);
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.jump_indices == b.jump_indices);
    CHECK(a.grid_times.size() == 51);
    for (std::size_t i = 0; i < a.grid_states.size(); ++i) CHECK((a.grid_states[i] - b.grid_states[i]).norm() == 0.0);
    for (const auto& s : a.grid_states) CHECK(s.norm() == doctest::Approx(1.0));
    for (const auto& s : a.post_jump_states) CHECK(std::abs(s(0)) == doctest::Approx(1.0));
    const auto e1 = run_ensemble(gen, psi, o, 16, 5, 1);
    const auto e4 = run_ensemble(gen, psi, o, 16, 5, 4);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(e1[i].jump_times == e4[i].jump_times);
        CHECK(e1[i].stream == i);
    }
}

TEST_CASE("ensemble average of identical copies has zero standard error") {
    const auto gen = effective_generator(one_jump_model());
    CVector psi = CVector::Zero(3);
    psi(0) = 1.0;
    StreamRng rng(1, 1);
    const auto rec = simulate_trajectory(gen, psi, {20.0, 0.5}, rng);
    const std::vector<TrajectoryRecord> copies(5, rec);
    const auto avg = ensemble_average(copies);
    for (std::size_t g = 0; g < avg.times.size(); ++g) {
        CHECK(avg.se_re[g].maxCoeff() == 0.0);
        CHECK(avg.se_im[g].maxCoeff() == 0.0);
        CHECK((avg.mean[g] - density(rec.grid_states[g])).norm() < 1e-15);
    }
    CHECK_THROWS_AS(ensemble_average({}), EmptyEnsemble);
}

TEST_CASE("ensemble mean tracks the QME oracle (Hotelling test)") {
    const auto m = one_jump_model();
    const auto gen = effective_generator(m);
    CVector psi = CVector::Zero(3);
    psi(0) = 1.0;
    const auto recs = run_ensemble(gen, psi, {20.0, 2.0}, 2000, 17, 0);
    std::vector<double> times = recs.front().grid_times;
    const auto ref = oracle::evolve(oracle::liouvillian(m.hamiltonian, m.jumps), density(psi), times);
    const auto cmp = compare_ensemble(recs, ref);
    // Real states, 5 components per grid point. Every state lies on the
    // jumpless orbit of |0>, so some directions have almost no spread.
    CHECK(cmp.components <= 50);
    CHECK(cmp.components >= 40);
    CHECK(cmp.p_value > 0.001);
    CHECK(cmp.max_abs_dev_exact < 1e-12);
}

TEST_CASE("parallel_for rethrows worker exceptions") {
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) throw InvalidArgument("boom");
                                 }),
                    InvalidArgument);
}
