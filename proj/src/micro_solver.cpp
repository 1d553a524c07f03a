#include "perfhom/micro_solver.hpp"

#include <cmath>
#include <tuple>

#include "perfhom/errors.hpp"

namespace perfhom {

namespace {

constexpr int kBulkNoiseId = 1;
constexpr int kBoundaryNoiseId = 2;

std::int64_t aligned_step(double t, double dt, const char* what) {
    const double q = t / dt;
    const std::int64_t k = std::llround(q);
    if (std::abs(q - static_cast<double>(k)) > 1e-6) {
        throw ConfigError(std::string(what) + " " + std::to_string(t) +
                          " is not a multiple of dt=" + std::to_string(dt));
    }
    return k;
}

}  // namespace

MicroOperator::MicroOperator(const PerforatedGrid& g, double b_in, double dt_in)
    : grid(&g), b(b_in), dt(dt_in) {
    const int nf = g.fluid_count();
    const int nb = g.boundary_count();
    const int n_dofs = nf + nb;
    const double h2 = g.spacing * g.spacing;

    mass.resize(static_cast<std::size_t>(n_dofs));
    for (int f = 0; f < nf; ++f) mass[static_cast<std::size_t>(f)] = h2;
    boundary_diag.resize(static_cast<std::size_t>(nb));
    for (int k = 0; k < nb; ++k) {
        const double sb = g.surface_measure[static_cast<std::size_t>(k)];
        mass[static_cast<std::size_t>(nf + k)] = g.epsilon * g.epsilon * sb;
        boundary_diag[static_cast<std::size_t>(k)] = g.epsilon * b * sb;
    }

    // DOF row of a node, or -1 (outer boundary carries the Dirichlet zero,
    // hole interior has no unknown).
    auto dof_of = [&](int i, int j) -> int {
        const std::size_t idx = static_cast<std::size_t>(g.node_index(i, j));
        if (g.fluid_dof[idx] >= 0) return g.fluid_dof[idx];
        if (g.boundary_dof[idx] >= 0) return nf + g.boundary_dof[idx];
        return -1;
    };

    std::vector<std::tuple<int, int, double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n_dofs) * 5);
    for (int j = 0; j <= g.n; ++j) {
        for (int i = 0; i <= g.n; ++i) {
            const NodeClass c = g.at(i, j);
            if (c == NodeClass::HoleInterior || c == NodeClass::OuterBoundary) continue;
            const int row = dof_of(i, j);
            const int di[2] = {1, 0};
            const int dj[2] = {0, 1};
            for (int e = 0; e < 2; ++e) {
                const int ni = i + di[e];
                const int nj = j + dj[e];
                const NodeClass nc = g.at(ni, nj);
                if (nc == NodeClass::HoleInterior) continue;  // dropped edge: Neumann on the hole
                if (nc == NodeClass::OuterBoundary) {
                    triplets.emplace_back(row, row, 1.0);  // edge to the Dirichlet zero
                    continue;
                }
                const int col = dof_of(ni, nj);
                triplets.emplace_back(row, row, 1.0);
                triplets.emplace_back(col, col, 1.0);
                triplets.emplace_back(row, col, -1.0);
                triplets.emplace_back(col, row, -1.0);
            }
            // Edges from the outer boundary into this node (left/bottom neighbors).
            if (i >= 1 && g.at(i - 1, j) == NodeClass::OuterBoundary) triplets.emplace_back(row, row, 1.0);
            if (j >= 1 && g.at(i, j - 1) == NodeClass::OuterBoundary) triplets.emplace_back(row, row, 1.0);
        }
    }
    for (int k = 0; k < nb; ++k) {
        triplets.emplace_back(nf + k, nf + k, boundary_diag[static_cast<std::size_t>(k)]);
    }
    stiffness = CsrMatrix::from_triplets(n_dofs, triplets);

    for (auto& [r, cidx, v] : triplets) v *= dt;
    for (int r = 0; r < n_dofs; ++r) {
        triplets.emplace_back(r, r, mass[static_cast<std::size_t>(r)]);
    }
    system = CsrMatrix::from_triplets(n_dofs, std::move(triplets));

    for (int r = 0; r < n_dofs; ++r) {
        if (system.coeff(r, r) <= 0.0) {
            throw NumericalError("M + dt*L lost positive definiteness (b=" + std::to_string(b) +
                                 "); reduce |b| or dt");
        }
    }
}

MicroOperator assemble_micro(const PerforatedGrid& grid, double b, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    return MicroOperator(grid, b, dt);
}

double MicroOperator::x0_energy(const MicroState& state) const {
    const int nf = fluid_count();
    double acc = 0.0;
    for (int f = 0; f < nf; ++f) acc += mass[static_cast<std::size_t>(f)] * state.u[static_cast<std::size_t>(f)] * state.u[static_cast<std::size_t>(f)];
    for (std::size_t k = 0; k < state.v.size(); ++k) acc += mass[static_cast<std::size_t>(nf) + k] * state.v[k] * state.v[k];
    return acc;
}

double MicroOperator::x1_energy(const MicroState& state) const {
    const int n = total_dofs();
    const int nf = fluid_count();
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int f = 0; f < nf; ++f) z[static_cast<std::size_t>(f)] = state.u[static_cast<std::size_t>(f)];
    for (std::size_t k = 0; k < state.v.size(); ++k) z[static_cast<std::size_t>(nf) + k] = state.v[k];
    std::vector<double> lz(static_cast<std::size_t>(n));
    stiffness.multiply(z, lz);
    double grad = dot(z, lz);
    for (std::size_t k = 0; k < state.v.size(); ++k) {
        grad -= boundary_diag[k] * state.v[k] * state.v[k];
    }
    return grad + x0_energy(state);
}

namespace {

// Gradient of the bulk field at a fluid node by centered differences, one-sided
// next to holes. Outer-boundary neighbors contribute their Dirichlet zero.
void fluid_gradient(const PerforatedGrid& g, const MicroState& state, int node, double& gx,
                    double& gy) {
    const int stride = g.n + 1;
    const int i = node % stride;
    const int j = node / stride;
    auto value = [&](int ii, int jj, bool& ok) -> double {
        const std::size_t idx = static_cast<std::size_t>(g.node_index(ii, jj));
        switch (g.node_class[idx]) {
            case NodeClass::Fluid: ok = true; return state.u[static_cast<std::size_t>(g.fluid_dof[idx])];
            case NodeClass::HoleBoundary: ok = true; return state.v[static_cast<std::size_t>(g.boundary_dof[idx])];
            case NodeClass::OuterBoundary: ok = true; return 0.0;
            case NodeClass::HoleInterior: ok = false; return 0.0;
        }
        ok = false;
        return 0.0;
    };
    bool okc = true;
    const double here = value(i, j, okc);
    auto diff = [&](int i_plus, int j_plus, int i_minus, int j_minus) -> double {
        bool okp = false, okm = false;
        const double vp = value(i_plus, j_plus, okp);
        const double vm = value(i_minus, j_minus, okm);
        if (okp && okm) return (vp - vm) / (2.0 * g.spacing);
        if (okp) return (vp - here) / g.spacing;
        if (okm) return (here - vm) / g.spacing;
        return 0.0;
    };
    gx = diff(i + 1, j, i - 1, j);
    gy = diff(i, j + 1, i, j - 1);
}

void check_blowup(std::span<const double> values, double cap) {
    for (const double x : values) {
        if (!std::isfinite(x) || std::abs(x) > cap) {
            throw NumericalError("state exceeded the blowup cap " + std::to_string(cap));
        }
    }
}

}  // namespace

MicroState step_micro(const MicroState& state, const MicroOperator& op, const DriftSpec& drift,
                      std::span<const double> bulk_noise, std::span<const double> boundary_noise,
                      double dt, const MicroStepControls& controls) {
    const PerforatedGrid& g = *op.grid;
    const int nf = g.fluid_count();
    const int nb = g.boundary_count();
    const int n = nf + nb;
    const double h2 = g.spacing * g.spacing;

    std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
    const bool zero_drift = drift.is_zero();
    for (int f = 0; f < nf; ++f) {
        const int node = g.fluid_nodes[static_cast<std::size_t>(f)];
        double value = op.mass[static_cast<std::size_t>(f)] * state.u[static_cast<std::size_t>(f)];
        if (!zero_drift) {
            const int stride = g.n + 1;
            const double x = g.x_of(node % stride);
            const double y = g.y_of(node / stride);
            double gx = 0.0, gy = 0.0;
            if (drift.needs_gradient()) fluid_gradient(g, state, node, gx, gy);
            value += dt * h2 *
                     eval_drift_point(drift, state.t, x, y, state.u[static_cast<std::size_t>(f)], gx, gy);
        }
        if (!bulk_noise.empty()) value += h2 * bulk_noise[static_cast<std::size_t>(f)];
        rhs[static_cast<std::size_t>(f)] = value;
    }
    for (int k = 0; k < nb; ++k) {
        double value = op.mass[static_cast<std::size_t>(nf + k)] * state.v[static_cast<std::size_t>(k)];
        if (!boundary_noise.empty()) {
            value += g.epsilon * g.surface_measure[static_cast<std::size_t>(k)] *
                     boundary_noise[static_cast<std::size_t>(k)];
        }
        rhs[static_cast<std::size_t>(nf + k)] = value;
    }

    std::vector<double> z(static_cast<std::size_t>(n));
    for (int f = 0; f < nf; ++f) z[static_cast<std::size_t>(f)] = state.u[static_cast<std::size_t>(f)];
    for (int k = 0; k < nb; ++k) z[static_cast<std::size_t>(nf + k)] = state.v[static_cast<std::size_t>(k)];

    CgOptions opts;
    opts.tol = controls.cg_tol;
    opts.max_iterations = controls.cg_max_iterations;
    const CgResult cg = conjugate_gradient(op.system, rhs, z, opts);
    if (cg.indefinite) throw NumericalError("micro system is not positive definite");
    if (!cg.converged && norm2(rhs) > 0.0) {
        throw NumericalError("micro CG stalled at relative residual " +
                             std::to_string(cg.relative_residual));
    }

    MicroState next;
    next.t = state.t + dt;
    next.u.assign(z.begin(), z.begin() + nf);
    next.v.assign(z.begin() + nf, z.end());
    check_blowup(next.u, controls.blowup_cap);
    check_blowup(next.v, controls.blowup_cap);
    return next;
}

MicroSimulator::MicroSimulator(const PerforatedGrid& grid, MicroParams params, RecordSpec record)
    : grid_(&grid),
      params_(std::move(params)),
      record_(std::move(record)),
      op_(grid, params_.b, params_.dt),
      bulk_noise_(params_.noise, kBulkNoiseId, {}, {}, true),
      boundary_noise_(params_.noise, kBoundaryNoiseId, {}, {}, true) {
    const int stride = grid.n + 1;
    for (const int node : grid.fluid_nodes) {
        fluid_x_.push_back(grid.x_of(node % stride));
        fluid_y_.push_back(grid.y_of(node / stride));
    }
    for (const int node : grid.boundary_nodes) {
        boundary_x_.push_back(grid.x_of(node % stride));
        boundary_y_.push_back(grid.y_of(node / stride));
    }
    if (params_.noise.q0 == 0.0) params_.noise_enabled = false;
    if (params_.noise_enabled) {
        bulk_noise_ = NoiseEvaluator(params_.noise, kBulkNoiseId, fluid_x_, fluid_y_, true);
        boundary_noise_ =
            NoiseEvaluator(params_.noise, kBoundaryNoiseId, boundary_x_, boundary_y_, true);
    }

    steps_ = aligned_step(params_.final_time, params_.dt, "final time");
    if (steps_ < 1) throw ConfigError("final time must cover at least one step");
    for (const double t : record_.sample_times) {
        const std::int64_t k = aligned_step(t, params_.dt, "sample time");
        if (k < 1 || k > steps_) {
            throw ConfigError("sample time " + std::to_string(t) + " outside (0, T]");
        }
        sample_steps_.push_back(k);
    }

    for (const auto& [k, l] : record_.modes) {
        std::vector<double> tf(fluid_x_.size());
        for (std::size_t p = 0; p < tf.size(); ++p) {
            const int node = grid.fluid_nodes[p];
            tf[p] = grid.bulk_weight[static_cast<std::size_t>(node)] *
                    dirichlet_mode(k, l, fluid_x_[p], fluid_y_[p]);
        }
        mode_table_fluid_.push_back(std::move(tf));
        std::vector<double> tb(boundary_x_.size());
        for (std::size_t p = 0; p < tb.size(); ++p) {
            const int node = grid.boundary_nodes[p];
            tb[p] = grid.bulk_weight[static_cast<std::size_t>(node)] *
                    dirichlet_mode(k, l, boundary_x_[p], boundary_y_[p]);
        }
        mode_table_boundary_.push_back(std::move(tb));
    }
}

MicroState MicroSimulator::initial_state() const {
    MicroState state;
    state.t = 0.0;
    state.u.resize(fluid_x_.size());
    for (std::size_t p = 0; p < state.u.size(); ++p) {
        state.u[p] = params_.u0(fluid_x_[p], fluid_y_[p]);
    }
    state.v.resize(boundary_x_.size());
    for (std::size_t p = 0; p < state.v.size(); ++p) {
        state.v[p] = params_.v0_constant ? params_.v0_value
                                         : params_.u0(boundary_x_[p], boundary_y_[p]);
    }
    return state;
}

PathRecord MicroSimulator::run_path(std::uint64_t path_id) const {
    PathRecord record;
    record.model = "micro";
    record.epsilon = grid_->epsilon;
    record.path_id = path_id;
    record.modes = record_.modes;

    MicroState state = initial_state();
    std::vector<double> w1(state.u.size());
    std::vector<double> w2(state.v.size());

    std::size_t next_sample = 0;
    double prev_sample_time = 0.0;
    double spacetime_sq = 0.0;

    for (std::int64_t step = 1; step <= steps_; ++step) {
        std::span<const double> bulk = {};
        std::span<const double> boundary = {};
        if (params_.noise_enabled) {
            const NoiseIncrement inc1 =
                sample_increment(params_.noise, path_id, kBulkNoiseId,
                                 static_cast<std::uint64_t>(step - 1), params_.dt,
                                 params_.master_seed);
            bulk_noise_.evaluate(inc1, w1);
            bulk = w1;
            if (!w2.empty()) {
                const NoiseIncrement inc2 =
                    sample_increment(params_.noise, path_id, kBoundaryNoiseId,
                                     static_cast<std::uint64_t>(step - 1), params_.dt,
                                     params_.master_seed);
                boundary_noise_.evaluate(inc2, w2);
                boundary = w2;
            }
        }
        try {
            state = step_micro(state, op_, params_.drift, bulk, boundary, params_.dt,
                               params_.controls);
        } catch (const NumericalError& err) {
            record.failed = true;
            record.fail_step = static_cast<std::uint64_t>(step);
            record.fail_reason = err.what();
            return record;
        }
        record.x1_time_integral += params_.dt * op_.x1_energy(state);

        while (next_sample < sample_steps_.size() && sample_steps_[next_sample] == step) {
            const double t = record_.sample_times[next_sample];
            record.sample_times.push_back(t);
            std::vector<double> values;
            values.reserve(record_.modes.size());
            for (std::size_t mdx = 0; mdx < record_.modes.size(); ++mdx) {
                values.push_back(dot(state.u, mode_table_fluid_[mdx]) +
                                 dot(state.v, mode_table_boundary_[mdx]));
            }
            record.mode_values.push_back(std::move(values));
            record.x0_energy.push_back(op_.x0_energy(state));

            double l2_sq = 0.0;
            for (std::size_t p = 0; p < state.u.size(); ++p) {
                const int node = grid_->fluid_nodes[p];
                l2_sq += grid_->bulk_weight[static_cast<std::size_t>(node)] * state.u[p] * state.u[p];
            }
            for (std::size_t p = 0; p < state.v.size(); ++p) {
                const int node = grid_->boundary_nodes[p];
                l2_sq += grid_->bulk_weight[static_cast<std::size_t>(node)] * state.v[p] * state.v[p];
            }
            spacetime_sq += (t - prev_sample_time) * l2_sq;
            prev_sample_time = t;

            if (record_.common_grid > 0) {
                const std::vector<double> full = zero_extend(state.u, state.v, *grid_);
                record.coarse_fields.push_back(
                    restrict_to_common_grid(full, grid_->n, record_.common_grid));
            }
            ++next_sample;
        }
    }
    record.spacetime_l2 = std::sqrt(spacetime_sq);
    if (record_.record_final_field) {
        record.final_field = zero_extend(state.u, state.v, *grid_);
    }
    return record;
}

PathRecord simulate_micro_path(const PerforatedGrid& grid, const MicroParams& params,
                               const RecordSpec& record, std::uint64_t path_id) {
    return MicroSimulator(grid, params, record).run_path(path_id);
}

}  // namespace perfhom
