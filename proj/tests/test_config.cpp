#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <string>

#include "perfhom/config.hpp"
#include "perfhom/errors.hpp"
#include "perfhom/output.hpp"

using namespace perfhom;

TEST_CASE("empty file yields the defaults") {
    const Config c = parse_config("");
    CHECK(c.rho == 0.5);
    CHECK(c.m == 8);
    CHECK(c.ladder == std::vector<int>{4, 8, 16});
    CHECK(c.final_time == 0.25);
    CHECK(c.paths == 500);
    CHECK(c.seed == 0);
    const ExperimentPlan plan = plan_from_config(c);
    plan.validate();
}

TEST_CASE("range violations carry the line number") {
    const std::string text = "[geometry]\nrho = 1.5\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("rho") != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected with their line") {
    try {
        parse_config("[geometry]\nrho = 0.5\nrho_typo = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[nonsense]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("stray_top_level = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[drift]\nkind = cubic\n"), ConfigError);
}

TEST_CASE("a realistic config parses into the plan") {
    const std::string text = R"(
seed = 42
[geometry]
rho = 0.5
m = 8
ladder = 1/4,1/8,1/16
[time]
T = 0.25
dt = 1e-3
[physics]
b = 1
[noise]
J = 16
gamma = 2
q0 = 0.1
[experiment]
paths = 500
coupling = shared
functionals = 1:1,2:2
out_dir = /tmp/runx
)";
    const Config c = parse_config(text);
    const ExperimentPlan plan = plan_from_config(c);
    CHECK(plan.master_seed == 42);
    CHECK(plan.ladder == std::vector<int>{4, 8, 16});
    CHECK(plan.cell.hole_fraction == 0.5);
    CHECK(plan.noise.modes == 16);
    CHECK(plan.functional_modes.size() == 2);
    CHECK(plan.out_dir == "/tmp/runx");
    plan.validate();
}

TEST_CASE("round-trip: parse, serialize, parse is stable") {
    const std::string text = R"(
seed = 7
[geometry]
rho = 0.25
m = 8
ladder = 1/2,1/4
[time]
T = 0.125
dt = 5e-4
sample_times = 0.0625,0.125
[drift]
kind = polynomial
a = linear:1,0.5,0.25
p = 1.5
[noise]
g2 = sines:0.7
[init]
u0 = sines:1
v0 = 0.25
[experiment]
macro_n = 0
reuse_macro = false
)";
    const Config once = parse_config(text);
    const std::string canon = serialize_config(once);
    const Config twice = parse_config(canon);
    CHECK(serialize_config(twice) == canon);
    CHECK(twice.rho == once.rho);
    CHECK(twice.dt == once.dt);
    CHECK(twice.v0 == once.v0);
    CHECK(twice.drift_a == once.drift_a);
}

TEST_CASE("comments and whitespace are tolerated") {
    const Config c = parse_config("# top\n  seed = 9  # trailing\n\n[geometry]  \n m = 4 \n");
    CHECK(c.seed == 9);
    CHECK(c.m == 4);
}

TEST_CASE("env var supplies the default output root") {
    ::setenv("PERFHOM_OUT_DIR", "/tmp/elsewhere", 1);
    const Config c = parse_config("");
    CHECK(c.resolved_out_dir() == "/tmp/elsewhere");
    ::unsetenv("PERFHOM_OUT_DIR");
    CHECK(parse_config("").resolved_out_dir() == "out");
}

TEST_CASE("drift and noise builders reflect the config") {
    Config c = parse_config("[drift]\nkind = gradient\nh1 = sinu:2\nh2 = u:-0.5\n");
    const DriftSpec g = drift_from_config(c);
    CHECK(g.kind == DriftSpec::Kind::Gradient);
    CHECK(g.h1.form == DriftSpec::HForm::SinU);
    CHECK(g.h1.coefficient == 2.0);
    CHECK(g.h2.coefficient == -0.5);

    c = parse_config("[noise]\nJ = 4\ngamma = 1.5\nq0 = 0.3\ng1 = linear:1,2,3\n");
    const SpectralNoiseSpec n = noise_from_config(c);
    CHECK(n.modes == 4);
    CHECK(n.gamma == 1.5);
    CHECK(n.g1.kind == FieldExpr::Kind::Linear);
}

TEST_CASE("shortest round-trip float formatting") {
    for (const double v : {0.1, 1.0 / 3.0, 1e-17, 6.02214076e23, -0.0, 2.5}) {
        CHECK(std::stod(format_shortest(v)) == v);
    }
    CHECK(format_shortest(0.25) == "0.25");
}

TEST_CASE("fnv1a checksum is stable") {
    const std::string payload = "epsilon,model\n0.25,micro\n";
    CHECK(fnv1a_hex({payload.data(), payload.size()}) ==
          fnv1a_hex({payload.data(), payload.size()}));
    const std::string other = "epsilon,model\n0.25,macro\n";
    CHECK(fnv1a_hex({payload.data(), payload.size()}) !=
          fnv1a_hex({other.data(), other.size()}));
}

TEST_CASE("cell csv carries the declared columns") {
    HomogenizedTensor t = identity_tensor();
    t.rho = 0.5;
    t.m = 16;
    const std::string csv = cell_csv(t);
    CHECK(csv.rfind("rho,m,theta,lambda,a11,a12,a21,a22,residual1,residual2,iters1,iters2\n", 0) ==
          0);
    // one header + one data row
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(std::count(csv.begin(), csv.end(), ',') == 22);
}

TEST_CASE("field csv and raw dump round-trip") {
    const int n = 2;
    const std::vector<double> field = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    const std::string csv = field_csv(field, n, 0.5);
    CHECK(csv.rfind("x,y,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);

    const std::string path = "/tmp/perfhom_test_field.bin";
    write_field_dump(path, field, n, 0.5, 0.125);
    const std::string raw = read_file(path);
    REQUIRE(raw.size() == field.size() * sizeof(double));
    double value = 0.0;
    std::memcpy(&value, raw.data() + 3 * sizeof(double), sizeof(double));
    CHECK(value == 3.0);
    const std::string meta = read_file(path + ".meta");
    CHECK(meta.find("nx 3") != std::string::npos);
    CHECK(meta.find("time 0.125") != std::string::npos);
}

TEST_CASE("manifest embeds config, rng id and checksums") {
    const std::string manifest =
        manifest_json("seed = 1\n", {{"samples.csv", "abc123"}}, nullptr);
    CHECK(manifest.find("splitmix64") != std::string::npos);
    CHECK(manifest.find("samples.csv") != std::string::npos);
    CHECK(manifest.find("abc123") != std::string::npos);
}

TEST_CASE("empty results produce header-only CSVs") {
    const SweepResult empty;
    ExperimentPlan plan;
    CHECK(samples_csv(empty, plan) == "epsilon,model,path_id,functional_id,sample_time,value\n");
    CHECK(energy_csv(empty) ==
          "epsilon,model,path_id,x0_final,x1_integral,diagnostic,failed\n");
}

TEST_CASE("unwritable directories surface as IoError") {
    CHECK_THROWS_AS(ensure_directory("/dev/null/subdir"), IoError);
    CHECK_THROWS_AS(read_file("/nonexistent/path/file.csv"), IoError);
}

TEST_CASE("samples.csv golden file") {
    // Frozen from the first verified run of this exact configuration. Any
    // change to the schema, the stepping, the RNG stream or the float
    // formatting shows up here.
    ExperimentPlan plan;
    plan.ladder = {2};
    plan.paths = 2;
    plan.functional_modes = {{1, 1}};
    plan.final_time = 0.002;
    plan.dt = 1e-3;
    plan.sample_times = {0.001, 0.002};
    plan.master_seed = 12345;
    plan.cell = CellSpec{0.5, 4};
    plan.noise.q0 = 0.1;
    plan.macro_resolution = 8;
    plan.threads = 1;
    const SweepResult r = run_sweep(plan);
    const std::string golden =
        "epsilon,model,path_id,functional_id,sample_time,value\n"
        "0.5,micro,0,mode_1_1,0.001,-0.0009369015536505783\n"
        "0.5,micro,0,mode_1_1,0.002,0.004157766229050616\n"
        "0.5,micro,0,l2_spacetime,0.002,0.0005659725577544803\n"
        "0.5,micro,1,mode_1_1,0.001,0.006586070882264889\n"
        "0.5,micro,1,mode_1_1,0.002,0.006698444871584514\n"
        "0.5,micro,1,l2_spacetime,0.002,0.000796549981776826\n"
        "0.5,macro,0,mode_1_1,0.001,-0.0007406402905458477\n"
        "0.5,macro,0,mode_1_1,0.002,0.012221309683969207\n"
        "0.5,macro,0,l2_spacetime,0.002,0.0009003734291078709\n"
        "0.5,macro,1,mode_1_1,0.001,0.022310966577167524\n"
        "0.5,macro,1,mode_1_1,0.002,0.014484692539056617\n"
        "0.5,macro,1,l2_spacetime,0.002,0.001184794290480941\n";
    CHECK(samples_csv(r, plan) == golden);
}
