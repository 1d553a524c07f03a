#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "perfhom/errors.hpp"
#include "perfhom/micro_solver.hpp"

using namespace perfhom;

namespace {

MicroParams quiet_params(double b, double dt, double T) {
    MicroParams p;
    p.b = b;
    p.dt = dt;
    p.final_time = T;
    p.noise_enabled = false;
    p.noise.q0 = 0.0;
    return p;
}

// Independent 5-point Dirichlet Poisson solve of -lap u = 1 by plain CG,
// assembled from scratch. Returns the center value.
double poisson_center_oracle(int n) {
    const int inner = n - 1;
    const int dofs = inner * inner;
    std::vector<std::tuple<int, int, double>> t;
    auto idx = [&](int i, int j) { return (j - 1) * inner + (i - 1); };
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const int row = idx(i, j);
            t.emplace_back(row, row, 4.0);
            if (i > 1) t.emplace_back(row, idx(i - 1, j), -1.0);
            if (i < n - 1) t.emplace_back(row, idx(i + 1, j), -1.0);
            if (j > 1) t.emplace_back(row, idx(i, j - 1), -1.0);
            if (j < n - 1) t.emplace_back(row, idx(i, j + 1), -1.0);
        }
    }
    const CsrMatrix a = CsrMatrix::from_triplets(dofs, std::move(t));
    const double h2 = 1.0 / (static_cast<double>(n) * n);
    std::vector<double> rhs(static_cast<std::size_t>(dofs), h2);
    std::vector<double> x(static_cast<std::size_t>(dofs), 0.0);
    CgOptions opts;
    opts.tol = 1e-12;
    opts.max_iterations = 20 * dofs;
    const CgResult res = conjugate_gradient(a, rhs, x, opts);
    REQUIRE(res.converged);
    return x[static_cast<std::size_t>(idx(n / 2, n / 2))];
}

}  // namespace

TEST_CASE("rho=0 stiffness is the standard 5-point Dirichlet Laplacian") {
    const PerforatedGrid grid = build_perforated_grid({0.0, 4}, 2);
    const MicroOperator op = assemble_micro(grid, 3.0, 1e-3);
    REQUIRE(op.total_dofs() == 7 * 7);
    for (int f = 0; f < op.total_dofs(); ++f) {
        CHECK(op.mass[static_cast<std::size_t>(f)] == doctest::Approx(grid.spacing * grid.spacing));
        CHECK(op.stiffness.coeff(f, f) == 4.0);
    }
    // Interior node: all four couplings present.
    const int center = grid.fluid_dof[static_cast<std::size_t>(grid.node_index(4, 4))];
    CHECK(op.stiffness.coeff(center, grid.fluid_dof[static_cast<std::size_t>(grid.node_index(3, 4))]) == -1.0);
    CHECK(op.stiffness.coeff(center, grid.fluid_dof[static_cast<std::size_t>(grid.node_index(4, 5))]) == -1.0);
}

TEST_CASE("b=0 leaves boundary rows without the zeroth-order term") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    const MicroOperator op = assemble_micro(grid, 0.0, 1e-3);
    for (const double d : op.boundary_diag) CHECK(d == 0.0);

    const MicroOperator op_b = assemble_micro(grid, 2.0, 1e-3);
    for (int k = 0; k < grid.boundary_count(); ++k) {
        CHECK(op_b.boundary_diag[static_cast<std::size_t>(k)] ==
              doctest::Approx(grid.epsilon * 2.0 * grid.surface_measure[static_cast<std::size_t>(k)]));
    }
}

TEST_CASE("stiffness is symmetric") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 8}, 4);
    const MicroOperator op = assemble_micro(grid, 1.0, 1e-3);
    CHECK(op.stiffness.asymmetry() <= 1e-14);
    CHECK(op.system.asymmetry() <= 1e-14);
}

TEST_CASE("zero in, zero out") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    const MicroParams params = quiet_params(1.0, 1e-3, 0.01);
    const RecordSpec record{{0.01}, {{1, 1}}, 0, true};
    const PathRecord r = simulate_micro_path(grid, params, record, 0);
    CHECK(!r.failed);
    CHECK(r.mode_values.back()[0] == 0.0);
    for (const double v : r.final_field) CHECK(v == 0.0);
}

TEST_CASE("steady state under unit forcing matches the independent Poisson solve") {
    const double oracle = poisson_center_oracle(256);
    CHECK(std::abs(oracle - 0.07367) < 1e-4);  // series value of the unit-square torsion problem

    MicroParams params = quiet_params(0.0, 0.01, 1.0);
    params.drift.kind = DriftSpec::Kind::Forcing;
    params.drift.forcing = FieldExpr::constant(1.0);
    const PerforatedGrid grid = build_perforated_grid({0.0, 8}, 8);  // 64x64
    const RecordSpec record{{1.0}, {}, 0, true};
    const PathRecord r = simulate_micro_path(grid, params, record, 0);
    REQUIRE(!r.failed);
    const int stride = grid.n + 1;
    const double center = r.final_field[static_cast<std::size_t>(grid.n / 2) * stride + grid.n / 2];
    CHECK(std::abs(center - oracle) < 5e-4);
}

TEST_CASE("noise loading scales as M^{-1} S when the step is tiny") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    const double dt = 1e-12;
    const MicroOperator op = assemble_micro(grid, 1.0, dt);
    MicroState state;
    state.t = 0.0;
    state.u.assign(static_cast<std::size_t>(grid.fluid_count()), 0.0);
    state.v.assign(static_cast<std::size_t>(grid.boundary_count()), 0.0);
    std::vector<double> w1(state.u.size(), 0.7);
    std::vector<double> w2(state.v.size(), -0.3);
    DriftSpec drift;  // zero forcing
    const MicroState next = step_micro(state, op, drift, w1, w2, dt);
    for (const double u : next.u) CHECK(u == doctest::Approx(0.7).epsilon(1e-6));
    // boundary rows: eps*s_b*w2 / (eps^2*s_b) = w2/eps
    for (const double v : next.v) {
        CHECK(v == doctest::Approx(-0.3 / grid.epsilon).epsilon(1e-6));
    }
}

TEST_CASE("implicit step contracts the mass norm without forcing") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 8}, 2);
    MicroParams params = quiet_params(1.5, 1e-3, 1.0);
    const MicroOperator op = assemble_micro(grid, params.b, params.dt);
    std::mt19937_64 gen(3);
    std::normal_distribution<double> normal;
    MicroState state;
    state.u.resize(static_cast<std::size_t>(grid.fluid_count()));
    state.v.resize(static_cast<std::size_t>(grid.boundary_count()));
    for (double& x : state.u) x = normal(gen);
    for (double& x : state.v) x = normal(gen);
    double prev = op.x0_energy(state);
    for (int step = 0; step < 20; ++step) {
        state = step_micro(state, op, DriftSpec{}, {}, {}, params.dt);
        const double now = op.x0_energy(state);
        CHECK(now <= prev * (1.0 + 1e-12));
        prev = now;
    }
}

TEST_CASE("polynomial drift keeps the bulk L2 norm non-increasing") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 8}, 2);
    MicroParams params = quiet_params(1.0, 1e-3, 0.05);
    params.drift.kind = DriftSpec::Kind::Polynomial;
    params.drift.poly_a = FieldExpr::constant(1.0);
    params.drift.poly_p = 2.0;
    params.u0 = FieldExpr::sines(2.0);
    const MicroSimulator sim(grid, params, RecordSpec{{0.05}, {}, 0, false});
    MicroState state = sim.initial_state();
    double prev = 0.0;
    for (const double u : state.u) prev += u * u;
    for (int step = 0; step < 50; ++step) {
        state = step_micro(state, sim.op(), params.drift, {}, {}, params.dt);
        double now = 0.0;
        for (const double u : state.u) now += u * u;
        CHECK(now <= prev * (1.0 + 1e-12));
        prev = now;
    }
}

TEST_CASE("unit-forcing energy grows monotonically to its steady value") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    MicroParams params = quiet_params(1.0, 5e-3, 1.0);
    params.drift.kind = DriftSpec::Kind::Forcing;
    params.drift.forcing = FieldExpr::constant(1.0);
    std::vector<double> times;
    for (int k = 1; k <= 40; ++k) times.push_back(0.025 * k);
    const RecordSpec record{times, {}, 0, false};
    const PathRecord r = simulate_micro_path(grid, params, record, 0);
    REQUIRE(!r.failed);
    for (std::size_t s = 1; s < r.x0_energy.size(); ++s) {
        CHECK(r.x0_energy[s] >= r.x0_energy[s - 1] * (1.0 - 1e-10));
    }
}

TEST_CASE("same path id reproduces the record bit for bit") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    MicroParams params = quiet_params(1.0, 1e-3, 0.02);
    params.noise_enabled = true;
    params.noise.q0 = 0.1;
    params.master_seed = 4242;
    const RecordSpec record{{0.01, 0.02}, {{1, 1}, {2, 2}}, 0, true};
    const PathRecord a = simulate_micro_path(grid, params, record, 5);
    const PathRecord b = simulate_micro_path(grid, params, record, 5);
    REQUIRE(!a.failed);
    for (std::size_t s = 0; s < a.mode_values.size(); ++s) {
        for (std::size_t f = 0; f < a.mode_values[s].size(); ++f) {
            CHECK(a.mode_values[s][f] == b.mode_values[s][f]);
        }
    }
    for (std::size_t k = 0; k < a.final_field.size(); ++k) {
        CHECK(a.final_field[k] == b.final_field[k]);
    }
    CHECK(a.x1_time_integral == b.x1_time_integral);
}

TEST_CASE("blowup is reported as a path failure with the step index") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    MicroParams params = quiet_params(0.0, 1e-3, 0.05);
    params.drift.kind = DriftSpec::Kind::Lipschitz;
    params.drift.lipschitz_c = 1e5;  // explosive linear growth
    params.u0 = FieldExpr::constant(1.0);
    params.controls.blowup_cap = 1e6;
    const RecordSpec record{{0.05}, {}, 0, false};
    const PathRecord r = simulate_micro_path(grid, params, record, 0);
    CHECK(r.failed);
    CHECK(r.fail_step >= 1);
    CHECK(!r.fail_reason.empty());
}

TEST_CASE("strongly negative b is detected") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    CHECK_THROWS_AS(assemble_micro(grid, -1e7, 1e-2), NumericalError);
}

TEST_CASE("energy diagnostic is uniform across a small ladder") {
    MicroParams params = quiet_params(1.0, 1e-3, 0.05);
    params.noise_enabled = true;
    params.noise.q0 = 0.1;
    params.master_seed = 11;
    const RecordSpec record{{0.05}, {}, 0, false};
    std::vector<double> means;
    for (const int cells : {4, 8, 16}) {
        const PerforatedGrid grid = build_perforated_grid({0.5, 4}, cells);
        const MicroSimulator sim(grid, params, record);
        double acc = 0.0;
        const int paths = 4;
        for (int p = 0; p < paths; ++p) acc += energy_diagnostic(sim.run_path(static_cast<std::uint64_t>(p)));
        means.push_back(acc / paths);
    }
    const double lo = *std::min_element(means.begin(), means.end());
    const double hi = *std::max_element(means.begin(), means.end());
    CHECK(hi / lo <= 2.0);
}

TEST_CASE("constant boundary override replaces the trace") {
    const PerforatedGrid grid = build_perforated_grid({0.5, 4}, 2);
    MicroParams params = quiet_params(0.0, 1e-3, 0.01);
    params.u0 = FieldExpr::sines(1.0);
    params.v0_constant = true;
    params.v0_value = 0.125;
    const MicroSimulator sim(grid, params, RecordSpec{{0.01}, {}, 0, false});
    const MicroState state = sim.initial_state();
    for (const double v : state.v) CHECK(v == 0.125);
    bool any_nonzero = false;
    for (const double u : state.u) any_nonzero |= u != 0.0;
    CHECK(any_nonzero);
}
