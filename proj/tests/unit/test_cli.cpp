#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "qmeta/cli/config.hpp"
#include "qmeta/cli/run.hpp"
#include "qmeta/csv.hpp"
#include "qmeta/errors.hpp"

using namespace qmeta;
using namespace qmeta::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("qmeta_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json one_jump_config(const std::string& op, const fs::path& dir) {
    return {{"operation", op},
            {"model", {{"preset", "three_state_1j"}, {"params", {{"Omega1", 1.0}, {"Omega2", 0.05}, {"kappa1", 4.0}}}}},
            {"output_dir", dir.string()}};
}

}  // namespace

TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config parsing") {
    const auto dir = scratch("cfg");
    auto doc = one_jump_config("spectrum", dir);
    doc["psi0"] = "basis:2";
    doc["states"] = json::array({json::array({1, json::array({0, 1}), 0})});
    const auto c = config_from_json(doc);
    CHECK(c.model().dim == 3);
    CHECK(std::abs((*c.psi0)(2)) == doctest::Approx(1.0));
    CHECK(c.states[0](1).imag() == doctest::Approx(std::sqrt(0.5)));
    CHECK_NOTHROW(c.validate());

    auto bad = one_jump_config("spectrum", dir);
    bad["bogus"] = 1;
    CHECK_THROWS_AS(config_from_json(bad), SchemaError);
    auto op = one_jump_config("dance", dir);
    CHECK_THROWS_AS(config_from_json(op).validate(), SchemaError);
    auto stochastic = one_jump_config("trajectory", dir);
    CHECK_THROWS_AS(config_from_json(stochastic).validate(), InvalidArgument);
    auto tag = one_jump_config("spectrum", dir);
    tag["figures"] = {{"spectrum", "fig9z"}};
    CHECK_THROWS_AS(config_from_json(tag).validate(), SchemaError);
    CHECK_THROWS_AS(state_from_json(json::array({1, 2}), 3), SchemaError);
}

TEST_CASE("default output directory comes from the environment") {
    setenv("QMETA_OUTPUT_DIR", "/tmp/qmeta_env_dir", 1);
    CHECK(default_output_dir() == "/tmp/qmeta_env_dir");
    unsetenv("QMETA_OUTPUT_DIR");
    CHECK(default_output_dir() == "qmeta_out");
}

TEST_CASE("spectrum run: CSV schema, steady state first, manifest hashes") {
    const auto dir = scratch("spectrum");
    auto doc = one_jump_config("spectrum", dir);
    const auto manifest = run(config_from_json(doc));
    const auto table = read_csv_file((dir / "spectrum.csv").string());
    CHECK(table.header == std::vector<std::string>{"index", "re", "im"});
    CHECK(table.rows.size() == 9);
    CHECK(std::abs(table.number(0, "re")) < 1e-10);
    CHECK(table.number(1, "re") == doctest::Approx(-0.01708).epsilon(1e-3));
    for (const auto& f : manifest.at("files"))
        CHECK(f.at("sha256") == sha256_hex(slurp(dir / f.at("path").get<std::string>())));
    CHECK(json::parse(slurp(dir / "manifest.json")) == manifest);
}

TEST_CASE("stochastic runs are byte-identical for the same seed") {
    const auto a = scratch("traj_a"), b = scratch("traj_b");
    auto da = one_jump_config("trajectory", a);
    da["seed"] = 5;
    da["T"] = 100.0;
    da["figures"] = {{"trajectory", "fig2b"}};
    auto db = da;
    db["output_dir"] = b.string();
    const auto ma = run(config_from_json(da));
    const auto mb = run(config_from_json(db));
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    CHECK(ma.at("files") == mb.at("files"));
    CHECK(ma.at("files")[0].at("figure") == "fig2b");
}

TEST_CASE("figure tags must name a produced role") {
    const auto dir = scratch("badrole");
    auto doc = one_jump_config("spectrum", dir);
    doc["figures"] = {{"p_ell", "fig3b"}};
    CHECK_THROWS_AS(run(config_from_json(doc)), SchemaError);
}

TEST_CASE("invariant-measure and committor runs emit the plotting schemas") {
    const auto dir = scratch("im");
    auto doc = one_jump_config("invariant-measure", dir);
    doc["seed"] = 3;
    doc["figures"] = {{"p_ell", "fig3b"}, {"p_log_tau", "fig3c"}};
    const auto m = run(config_from_json(doc));
    const auto pe = read_csv_file((dir / "p_ell.csv").string());
    CHECK(pe.header == std::vector<std::string>{"bin_lo", "bin_hi", "density", "count", "partition"});
    std::set<std::string> figs;
    for (const auto& f : m.at("files"))
        if (!f.at("figure").is_null()) figs.insert(f.at("figure").get<std::string>());
    CHECK(figs == std::set<std::string>{"fig3b", "fig3c"});
    CHECK(m.at("summary").at("rates").contains("total_rate"));

    const auto cdir = scratch("committor");
    auto cdoc = one_jump_config("committor", cdir);
    cdoc["model"] = {{"preset", "three_state_2j"},
                     {"params", {{"Omega1", 1.0}, {"Omega2", 0.05}, {"kappa1", 4.0}, {"kappa2", 1.0}}}};
    cdoc["states"] = json::array({json::array({1, 0, 1})});
    run(config_from_json(cdoc));
    const auto curve = read_csv_file((cdir / "committor_curve.csv").string());
    CHECK(curve.header == std::vector<std::string>{"partition", "tau", "ell", "S", "c_0", "c_1", "method"});
    const auto table = read_csv_file((cdir / "committor_table.csv").string());
    CHECK(table.header == std::vector<std::string>{"psi_id", "phase", "value", "method"});
}

TEST_CASE("ensemble run reports the comparison with the QME") {
    const auto dir = scratch("ensemble");
    auto doc = one_jump_config("ensemble", dir);
    doc["seed"] = 1;
    doc["n_traj"] = 300;
    doc["T"] = 20.0;
    doc["dt"] = 2.0;
    const auto m = run(config_from_json(doc));
    const auto t = read_csv_file((dir / "ensemble.csv").string());
    CHECK(t.header.front() == "t");
    CHECK(t.header.back() == "within_3sigma");
    CHECK(t.rows.size() == 11);
    CHECK(m.at("summary").at("p_value").get<double>() > 0.0);
}

TEST_CASE("scaling run: lambda2 and cross-jump columns scale as eps^2") {
    const auto dir = scratch("scaling");
    json doc{{"operation", "scaling"},
             {"model", {{"preset", "three_state_2j"}, {"params", {{"Omega1", 1.0}, {"kappa1", 4.0}, {"kappa2", 1.0}}}}},
             {"output_dir", dir.string()},
             {"values", {1e-2, 1e-3}}};
    run(config_from_json(doc));
    const auto t = read_csv_file((dir / "scaling.csv").string());
    CHECK(t.number(0, "lambda2_over_eps2") == doctest::Approx(t.number(1, "lambda2_over_eps2")).epsilon(0.01));
    CHECK(t.number(0, "cross_over_eps2") == doctest::Approx(t.number(1, "cross_over_eps2")).epsilon(0.01));
}

TEST_CASE("error document") {
    const auto e = error_json("NoGap", "x");
    CHECK(e.at("error").at("kind") == "NoGap");
}
