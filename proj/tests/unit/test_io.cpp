#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qmeta/csv.hpp"
#include "qmeta/errors.hpp"
#include "qmeta/trajectory_io.hpp"

using namespace qmeta;

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("CsvWriter enforces the row width and CsvTable reads it back") {
    std::ostringstream out;
    CsvWriter w(out, {"a", "b"});
    w << 1.5 << std::string("x");
    w.end_row();
    w << 2;
    CHECK_THROWS(w.end_row());
    std::istringstream in("a,b\n1.5,x\n");
    const auto t = read_csv(in);
    CHECK(t.number(0, "a") == 1.5);
    CHECK_THROWS_AS(t.column("c"), SchemaError);
}

TEST_CASE("trajectory serialisation is byte-identical for identical seeds") {
    const auto gen = effective_generator(testing_util::one_jump_model());
    CVector psi = CVector::Zero(3);
    psi(0) = 1.0;
    StreamRng a(77, 0), b(77, 0);
    const auto ra = simulate_trajectory(gen, psi, {30.0, 0.5}, a);
    const auto rb = simulate_trajectory(gen, psi, {30.0, 0.5}, b);
    CHECK(trajectory_csv(ra) == trajectory_csv(rb));
    CHECK(trajectory_sidecar(ra).dump() == trajectory_sidecar(rb).dump());
    std::istringstream in(trajectory_csv(ra));
    const auto t = read_csv(in);
    CHECK(t.header == std::vector<std::string>{"t", "re_0", "im_0", "re_1", "im_1", "re_2", "im_2"});
    CHECK(t.rows.size() == ra.grid_times.size());
    const auto side = trajectory_sidecar(ra);
    CHECK(side.at("seed") == 77);
    CHECK(side.at("jump_times").size() == ra.jump_times.size());

    const auto dir = std::filesystem::temp_directory_path() / "qmeta_io_test";
    std::filesystem::create_directories(dir);
    const auto [csv, json] = save_trajectory(ra, (dir / "traj").string());
    std::ifstream f(csv);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str() == trajectory_csv(ra));
    CHECK(std::filesystem::exists(json));
}
