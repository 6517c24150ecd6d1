#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qmeta/csv.hpp"
#include "qmeta/errors.hpp"
#include "qmeta/metastat.hpp"

using namespace qmeta;

TEST_CASE("PhaseLabeler keeps the last visited core") {
    PhaseLabeler lab(2, 0.0);
    lab.visit(1.0, 0);
    lab.visit(2.0, 0);
    lab.visit(5.0, 1);
    lab.visit(7.0, 0);
    const auto s = lab.finish(10.0);
    CHECK(s.phase_at(0.5) == -1);
    CHECK(s.phase_at(3.0) == 0);
    CHECK(s.phase_at(6.0) == 1);
    CHECK(s.chi(0, 9.0));
    CHECK(s.times == std::vector<double>{1.0, 5.0, 7.0});
}

TEST_CASE("transition rates from a synthetic label series") {
    PhaseLabeler lab(2, 0.0);
    // Alternating dwell times 3 (phase 0) and 1 (phase 1), 20 transitions.
    double t = 0.0;
    for (int i = 0; i < 21; ++i) {
        lab.visit(t, i % 2);
        t += (i % 2 == 0) ? 3.0 : 1.0;
    }
    const auto r = transition_rate_estimate(lab.finish(t));
    CHECK(r.transitions == 20);
    REQUIRE(r.directions.size() == 2);
    for (const auto& d : r.directions) {
        if (d.from == 0) CHECK(d.rate == doctest::Approx(10.0 / r.time_in_phase[0]));
        else CHECK(d.rate == doctest::Approx(10.0 / r.time_in_phase[1]));
    }
    CHECK(r.mean_dwell[0] == doctest::Approx(3.0));
    CHECK(r.mean_dwell[1] == doctest::Approx(1.0));
    const auto j = rates_to_json(r);
    CHECK(j.at("transitions") == 20);

    PhaseLabeler few(2, 0.0);
    few.visit(0.0, 0);
    few.visit(1.0, 1);
    CHECK_THROWS_AS(transition_rate_estimate(few.finish(2.0)), TooFewTransitions);
}

TEST_CASE("core validation") {
    const auto rs = detect_reset_structure(testing_util::two_jump_model());
    const auto a = CoreSetSpec::reset(rs, 0, 0);
    const auto b = CoreSetSpec::reset(rs, 1, 1);
    CHECK(validate_cores({a, b}) == 2);
    CHECK_THROWS_AS(validate_cores({a}), InvalidArgument);
    CHECK_THROWS_AS(validate_cores({a, CoreSetSpec::reset(rs, 1, 2)}), InvalidArgument);
    CHECK(a.contains(rs.reset_points[0]));
    CHECK_FALSE(a.contains(rs.reset_points[1]));
}

TEST_CASE("find_peaks on synthetic profiles") {
    std::vector<double> two, one, flat(20, 1.0);
    for (int i = 0; i < 40; ++i) {
        const double x = i;
        two.push_back(std::exp(-0.5 * std::pow((x - 8) / 2.0, 2)) + 0.6 * std::exp(-0.5 * std::pow((x - 30) / 3.0, 2)));
        one.push_back(std::exp(-0.5 * std::pow((x - 20) / 5.0, 2)));
    }
    CHECK(find_peaks(two).size() == 2);
    CHECK(find_peaks(one).size() == 1);
    CHECK(find_peaks(flat).empty());
    // A monotone profile peaks at its edge.
    std::vector<double> ramp;
    for (int i = 0; i < 10; ++i) ramp.push_back(i);
    CHECK(find_peaks(ramp) == std::vector<std::size_t>{9});
}

TEST_CASE("invariant measures are normalised and carry one partition per reset point") {
    const auto m = testing_util::two_jump_model();
    const auto gen = effective_generator(m);
    const auto rs = detect_reset_structure(m);
    const SemiMarkovSampler sampler(gen, rs);
    StreamRng rng(2, 0);
    const auto path = sampler.sample(0, 20000.0, rng);
    std::vector<JumplessTrajectory> jts;
    for (std::size_t j = 0; j < 2; ++j) jts.emplace_back(gen, rs, j);
    InvariantMeasureOptions o;
    o.burn_in = 100.0;
    const auto im = invariant_measures({path}, jts, o);
    CHECK(im.ell.mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(im.log_tau.mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(im.ell.parts.size() == 2);
    for (const auto& p : im.ell.parts) {
        CHECK(p.edges.size() == p.density.size() + 1);
        CHECK(p.edges.size() == 41);
        CHECK(p.edges.back() <= 1e-12);  // backward arc length ends at phi_a
    }
    std::ostringstream out;
    write_histogram_csv(im.log_tau, out);
    std::istringstream in(out.str());
    const auto t = read_csv(in);
    CHECK(t.header == std::vector<std::string>{"bin_lo", "bin_hi", "density", "count", "partition"});
    CHECK(t.rows.size() == 80);

    const SemiMarkovPath empty{0, 10.0, {}, {}, {}};
    CHECK_THROWS_AS(invariant_measures({empty}, jts, o), InsufficientData);
}

TEST_CASE("semi-Markov labels and rates on the two-jump model") {
    const auto m = testing_util::two_jump_model();
    const auto gen = effective_generator(m);
    const auto rs = detect_reset_structure(m);
    const SemiMarkovSampler sampler(gen, rs);
    const SemiMarkovLabeler labeler(sampler, {CoreSetSpec::reset(rs, 0, 0), CoreSetSpec::reset(rs, 1, 1)});
    StreamRng rng(5, 0);
    const auto path = sampler.sample(0, 2e5, rng);
    const auto labels = labeler.label(path);
    CHECK(labels.phase_at(0.0) == 0);
    const auto r = transition_rate_estimate(labels);
    const auto sp = spectral_decompose(m);
    CHECK(r.total_rate() == doctest::Approx(-sp.values[1].real()).epsilon(0.3));
}

TEST_CASE("path_from_record recovers the jump sequence of a reset process") {
    const auto m = testing_util::two_jump_model();
    const auto gen = effective_generator(m);
    const auto rs = detect_reset_structure(m);
    StreamRng rng(6, 0);
    const auto rec = simulate_trajectory(gen, rs.reset_points[0], {200.0, 1.0}, rng);
    const auto path = path_from_record(rec, rs);
    CHECK(path.times == rec.jump_times);
    for (std::size_t i = 0; i < path.resets.size(); ++i)
        CHECK(path.resets[i] == rs.channels[rec.jump_indices[i]].reset_point);
    const auto labels = label_phases(rec, {CoreSetSpec::reset(rs, 0, 0), CoreSetSpec::reset(rs, 1, 1)});
    CHECK(labels.phase_at(0.0) == 0);
}

TEST_CASE("Monte Carlo committor agrees with the Sylvester committor") {
    const auto m = testing_util::two_jump_model();
    const auto gen = effective_generator(m);
    const auto rs = detect_reset_structure(m);
    CVector psi(3);
    psi << 1.0, 0.5, 1.0;
    psi.normalize();
    const auto exact = committor_reset(gen, rs, psi, {0, 1}, 2);
    CommittorMcOptions o;
    o.t_truncate = 1e5;
    const auto mc = committor_mc(gen, psi, {CoreSetSpec::reset(rs, 0, 0), CoreSetSpec::reset(rs, 1, 1)}, 2000, 3, o);
    const double sigma = std::sqrt(exact.c[1] * (1 - exact.c[1]) / 2000.0);
    CHECK(std::abs(mc.estimate[1] - exact.c[1]) < 4 * sigma);
    CHECK(mc.unresolved == 0.0);
    const auto again = committor_mc(gen, psi, {CoreSetSpec::reset(rs, 0, 0), CoreSetSpec::reset(rs, 1, 1)}, 2000, 3, o);
    CHECK(again.estimate == mc.estimate);
}
