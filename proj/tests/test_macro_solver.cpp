#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "perfhom/errors.hpp"
#include "perfhom/macro_solver.hpp"
#include "perfhom/micro_solver.hpp"

using namespace perfhom;

namespace {

MacroParams quiet_params(double b, double dt, double T) {
    MacroParams p;
    p.b = b;
    p.dt = dt;
    p.final_time = T;
    p.noise_enabled = false;
    p.noise.q0 = 0.0;
    return p;
}

HomogenizedTensor scaled_tensor(double alpha, double theta, double lambda) {
    HomogenizedTensor t = identity_tensor();
    t.a = {{{alpha, 0.0}, {0.0, alpha}}};
    t.theta = theta;
    t.lambda = lambda;
    return t;
}

}  // namespace

TEST_CASE("identity tensor gives the standard heat stencil") {
    const MacroOperator op = assemble_macro(8, identity_tensor(), 5.0, 1e-3);
    // lambda = 0, so b is irrelevant.
    const int center = op.dof_index(4, 4);
    CHECK(op.stiffness.coeff(center, center) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(op.stiffness.coeff(center, op.dof_index(3, 4)) == -1.0);
    CHECK(op.stiffness.coeff(center, op.dof_index(4, 3)) == -1.0);
    CHECK(op.stiffness.coeff(center, op.dof_index(5, 5)) == 0.0);
}

TEST_CASE("diagonal tensor scales the Laplacian and adds the zeroth term") {
    const double alpha = 0.6, theta = 0.75, lambda = 2.0, b = 1.5;
    const MacroOperator op = assemble_macro(16, scaled_tensor(alpha, theta, lambda), b, 1e-3);
    const int center = op.dof_index(8, 8);
    const double scale = alpha / theta;
    CHECK(op.stiffness.coeff(center, center) ==
          doctest::Approx(4.0 * scale + b * lambda * op.mass).epsilon(1e-14));
    CHECK(op.stiffness.coeff(center, op.dof_index(9, 8)) == doctest::Approx(-scale).epsilon(1e-14));
}

TEST_CASE("cross-term stencil stays symmetric") {
    HomogenizedTensor t = identity_tensor();
    t.a = {{{1.0, 0.3}, {0.3, 0.8}}};
    const MacroOperator op = assemble_macro(32, t, 0.7, 1e-3);
    CHECK(op.stiffness.asymmetry() <= 1e-14);
    CHECK(op.system.asymmetry() <= 1e-14);
}

TEST_CASE("zero in, zero out") {
    MacroParams params = quiet_params(1.0, 1e-3, 0.01);
    params.resolution = 16;
    const RecordSpec record{{0.01}, {{1, 1}}, 0, false};
    const PathRecord r = simulate_macro_path(params, record, 0);
    CHECK(!r.failed);
    CHECK(r.mode_values.back()[0] == 0.0);
}

TEST_CASE("single-mode coefficient follows the exact discrete OU recursion") {
    MacroParams params = quiet_params(0.0, 1e-3, 0.05);
    params.resolution = 32;
    params.noise_enabled = true;
    params.noise.modes = 1;
    params.noise.q0 = 0.5;
    params.master_seed = 909;
    const RecordSpec record{{0.05}, {{1, 1}}, 0, false};
    const MacroSimulator sim(params, record);
    const PathRecord r = sim.run_path(7);
    REQUIRE(!r.failed);

    // Exact recursion: a_{n+1} = r (a_n + sqrt(q1) dbeta_n) with
    // r = h^2/(h^2 + dt kappa), kappa the discrete eigenvalue of K.
    const double h = 1.0 / params.resolution;
    const double kappa = 4.0 * std::pow(std::sin(M_PI * h / 2.0), 2) * 2.0;
    const double ratio = h * h / (h * h + params.dt * kappa);
    double a = 0.0;
    const double amp = std::sqrt(params.noise.covariance(1));
    for (int step = 0; step < 50; ++step) {
        const NoiseIncrement inc = sample_increment(params.noise, 7, 1,
                                                    static_cast<std::uint64_t>(step), params.dt,
                                                    params.master_seed);
        a = ratio * (a + amp * inc.dbeta[0]);
    }
    CHECK(r.mode_values.back()[0] == doctest::Approx(a).epsilon(1e-9));
}

TEST_CASE("deterministic steady state solves the effective elliptic problem") {
    const HomogenizedTensor t = scaled_tensor(0.6, 0.75, 2.0);
    MacroParams params = quiet_params(1.0, 5e-3, 2.0);
    params.resolution = 32;
    params.tensor = t;
    params.drift.kind = DriftSpec::Kind::Forcing;
    params.drift.forcing = FieldExpr::constant(1.0);
    const RecordSpec record{{2.0}, {{1, 1}}, 0, true};
    const MacroSimulator sim(params, record);
    const PathRecord r = sim.run_path(0);
    REQUIRE(!r.failed);

    // K U = h^2 theta f, straight from the assembled stiffness.
    const MacroOperator& op = sim.op();
    std::vector<double> rhs(static_cast<std::size_t>(op.dofs()), op.mass * t.theta * 1.0);
    std::vector<double> steady(static_cast<std::size_t>(op.dofs()), 0.0);
    CgOptions opts;
    opts.tol = 1e-12;
    const CgResult cg = conjugate_gradient(op.stiffness, rhs, steady, opts);
    REQUIRE(cg.converged);
    for (int j = 1; j <= op.n - 1; ++j) {
        for (int i = 1; i <= op.n - 1; ++i) {
            const double got =
                r.final_field[static_cast<std::size_t>(j) * (op.n + 1) + i];
            CHECK(got == doctest::Approx(steady[static_cast<std::size_t>(op.dof_index(i, j))])
                             .epsilon(1e-6)
                             .scale(0.1));
        }
    }
}

TEST_CASE("same seed reproduces the record") {
    MacroParams params = quiet_params(1.0, 1e-3, 0.02);
    params.resolution = 16;
    params.tensor = scaled_tensor(0.6, 0.75, 2.0);
    params.noise_enabled = true;
    params.noise.q0 = 0.1;
    params.master_seed = 31337;
    const RecordSpec record{{0.01, 0.02}, {{1, 1}}, 0, false};
    const PathRecord a = simulate_macro_path(params, record, 3);
    const PathRecord b = simulate_macro_path(params, record, 3);
    for (std::size_t s = 0; s < a.mode_values.size(); ++s) {
        CHECK(a.mode_values[s][0] == b.mode_values[s][0]);
    }
}

TEST_CASE("dissipativity with noise and drift off") {
    MacroParams params = quiet_params(0.5, 1e-3, 0.05);
    params.resolution = 24;
    params.tensor = scaled_tensor(0.6, 0.75, 2.0);
    params.u0 = FieldExpr::sines(1.0);
    const RecordSpec record{{0.05}, {}, 0, false};
    const MacroSimulator sim(params, record);
    MacroState state = sim.initial_state();
    double prev = sim.op().x0_energy(state);
    for (int step = 0; step < 50; ++step) {
        state = step_macro(state, sim.op(), params.drift, {}, {}, params.dt);
        const double now = sim.op().x0_energy(state);
        CHECK(now <= prev * (1.0 + 1e-12));
        prev = now;
    }
}

TEST_CASE("Monte Carlo mean matches the deterministic run for additive noise") {
    MacroParams params = quiet_params(1.0, 1e-3, 0.04);
    params.resolution = 24;
    params.tensor = scaled_tensor(0.7, 0.9, 1.0);
    params.u0 = FieldExpr::sines(1.0);
    const RecordSpec record{{0.04}, {{1, 1}}, 0, false};
    const PathRecord det = simulate_macro_path(params, record, 0);

    params.noise_enabled = true;
    params.noise.q0 = 0.05;
    params.master_seed = 77;
    const MacroSimulator sim(params, record);
    const int m = 200;
    double sum = 0.0, sum_sq = 0.0;
    for (int p = 0; p < m; ++p) {
        const double v = sim.run_path(static_cast<std::uint64_t>(p)).mode_values.back()[0];
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / m;
    const double sd = std::sqrt((sum_sq / m - mean * mean) * m / (m - 1.0));
    CHECK(std::abs(mean - det.mode_values.back()[0]) <= 3.0 * sd / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("rho=0 micro and identity macro agree under shared noise") {
    MicroParams mp;
    mp.b = 0.7;
    mp.dt = 1e-3;
    mp.final_time = 0.02;
    mp.noise_enabled = true;
    mp.noise.q0 = 0.1;
    mp.master_seed = 2024;
    const PerforatedGrid grid = build_perforated_grid({0.0, 8}, 4);  // 32x32

    MacroParams ap;
    ap.resolution = 32;
    ap.tensor = identity_tensor();
    ap.b = 0.7;
    ap.dt = 1e-3;
    ap.final_time = 0.02;
    ap.noise_enabled = true;
    ap.noise.q0 = 0.1;
    ap.master_seed = 2024;

    const RecordSpec record{{0.01, 0.02}, {{1, 1}, {2, 1}}, 0, false};
    const MicroSimulator micro(grid, mp, record);
    const MacroSimulator macro(ap, record);
    for (std::uint64_t path = 0; path < 3; ++path) {
        const PathRecord a = micro.run_path(path);
        const PathRecord b = macro.run_path(path);
        REQUIRE(!a.failed);
        REQUIRE(!b.failed);
        for (std::size_t s = 0; s < a.mode_values.size(); ++s) {
            for (std::size_t f = 0; f < a.mode_values[s].size(); ++f) {
                CHECK(std::abs(a.mode_values[s][f] - b.mode_values[s][f]) < 1e-8);
            }
        }
    }
}

TEST_CASE("initial condition modes scale by theta or its inverse") {
    MacroParams params = quiet_params(0.0, 1e-3, 0.01);
    params.resolution = 8;
    params.tensor = scaled_tensor(0.6, 0.75, 2.0);
    params.u0 = FieldExpr::constant(1.0);
    const RecordSpec record{{0.01}, {}, 0, false};
    params.init_mode = MacroInitMode::ThetaU0;
    CHECK(MacroSimulator(params, record).initial_state().values[0] ==
          doctest::Approx(0.75).epsilon(1e-15));
    params.init_mode = MacroInitMode::U0OverTheta;
    CHECK(MacroSimulator(params, record).initial_state().values[0] ==
          doctest::Approx(1.0 / 0.75).epsilon(1e-15));
}
