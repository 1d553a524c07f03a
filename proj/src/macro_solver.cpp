#include "perfhom/macro_solver.hpp"

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

MacroOperator::MacroOperator(int resolution, const HomogenizedTensor& tensor, double b_in,
                             double dt_in) {
    if (resolution < 2) throw ConfigError("macro resolution must be at least 2");
    if (tensor.eigenvalues()[0] <= 0.0) {
        throw NumericalError("effective tensor must be positive definite");
    }
    n = resolution;
    spacing = 1.0 / n;
    theta = tensor.theta;
    lambda = tensor.lambda;
    a = tensor.a;
    b = b_in;
    dt = dt_in;
    mass = spacing * spacing;

    const double it = 1.0 / theta;
    const double a11 = it * a[0][0];
    const double a22 = it * a[1][1];
    const double a12 = it * 0.5 * (a[0][1] + a[1][0]);
    const double zeroth = b * lambda * mass;

    std::vector<std::tuple<int, int, double>> triplets;
    triplets.reserve(static_cast<std::size_t>(dofs()) * 9);
    auto dof = [&](int i, int j) -> int {
        return (i >= 1 && i <= n - 1 && j >= 1 && j <= n - 1) ? dof_index(i, j) : -1;
    };
    for (int j = 1; j <= n - 1; ++j) {
        for (int i = 1; i <= n - 1; ++i) {
            const int row = dof_index(i, j);
            triplets.emplace_back(row, row, 2.0 * a11 + 2.0 * a22 + zeroth);
            const int nbr[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
            const double w[4] = {-a11, -a11, -a22, -a22};
            for (int k = 0; k < 4; ++k) {
                const int col = dof(nbr[k][0], nbr[k][1]);
                if (col >= 0) triplets.emplace_back(row, col, w[k]);
            }
            if (a12 != 0.0) {
                const int diag[4][2] = {{i + 1, j + 1}, {i - 1, j - 1}, {i + 1, j - 1}, {i - 1, j + 1}};
                const double dw[4] = {-a12 / 2.0, -a12 / 2.0, a12 / 2.0, a12 / 2.0};
                for (int k = 0; k < 4; ++k) {
                    const int col = dof(diag[k][0], diag[k][1]);
                    if (col >= 0) triplets.emplace_back(row, col, dw[k]);
                }
            }
        }
    }
    stiffness = CsrMatrix::from_triplets(dofs(), triplets);

    for (auto& [r, c, v] : triplets) v *= dt;
    for (int r = 0; r < dofs(); ++r) triplets.emplace_back(r, r, mass);
    system = CsrMatrix::from_triplets(dofs(), std::move(triplets));

    for (int r = 0; r < dofs(); ++r) {
        if (system.coeff(r, r) <= 0.0) {
            throw NumericalError("M + dt*K lost positive definiteness (b=" + std::to_string(b) +
                                 "); reduce |b| or dt");
        }
    }
}

MacroOperator assemble_macro(int resolution, const HomogenizedTensor& tensor, double b,
                             double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    return MacroOperator(resolution, tensor, b, dt);
}

double MacroOperator::x0_energy(const MacroState& state) const {
    double acc = 0.0;
    for (const double u : state.values) acc += u * u;
    return mass * acc;
}

double MacroOperator::x1_energy(const MacroState& state) const {
    std::vector<double> ku(state.values.size());
    stiffness.multiply(state.values, ku);
    double grad = dot(state.values, ku);
    grad -= b * lambda * x0_energy(state);  // remove the zeroth-order part of K
    return grad + x0_energy(state);
}

namespace {

void check_blowup(std::span<const double> values, double cap) {
    for (const double x : values) {
        if (!std::isfinite(x) || std::abs(x) > cap) {
            throw NumericalError("state exceeded the blowup cap " + std::to_string(cap));
        }
    }
}

// Centered-difference gradient of the interior field, Dirichlet zeros outside.
void interior_gradient(const MacroOperator& op, const MacroState& state, int i, int j, double& gx,
                       double& gy) {
    auto value = [&](int ii, int jj) -> double {
        if (ii < 1 || ii > op.n - 1 || jj < 1 || jj > op.n - 1) return 0.0;
        return state.values[static_cast<std::size_t>(op.dof_index(ii, jj))];
    };
    gx = (value(i + 1, j) - value(i - 1, j)) / (2.0 * op.spacing);
    gy = (value(i, j + 1) - value(i, j - 1)) / (2.0 * op.spacing);
}

}  // namespace

MacroState step_macro(const MacroState& state, const MacroOperator& op, const DriftSpec& drift,
                      std::span<const double> noise1, std::span<const double> noise2, double dt,
                      const MacroStepControls& controls) {
    const int nd = op.dofs();
    std::vector<double> rhs(static_cast<std::size_t>(nd));
    const bool zero_drift = drift.is_zero();
    const Matrix2 m = {{{op.a[0][0] / op.theta, op.a[0][1] / op.theta},
                        {op.a[1][0] / op.theta, op.a[1][1] / op.theta}}};
    for (int j = 1; j <= op.n - 1; ++j) {
        for (int i = 1; i <= op.n - 1; ++i) {
            const int row = op.dof_index(i, j);
            double value = op.mass * state.values[static_cast<std::size_t>(row)];
            if (!zero_drift) {
                double gx = 0.0, gy = 0.0;
                if (drift.needs_gradient()) interior_gradient(op, state, i, j, gx, gy);
                value += dt * op.mass *
                         eval_effective_drift_point(drift, op.theta, m, state.t, i * op.spacing,
                                                    j * op.spacing,
                                                    state.values[static_cast<std::size_t>(row)],
                                                    gx, gy);
            }
            if (!noise1.empty()) value += op.mass * op.theta * noise1[static_cast<std::size_t>(row)];
            if (!noise2.empty()) value += op.mass * op.lambda * noise2[static_cast<std::size_t>(row)];
            rhs[static_cast<std::size_t>(row)] = value;
        }
    }

    std::vector<double> z = state.values;
    CgOptions opts;
    opts.tol = controls.cg_tol;
    opts.max_iterations = controls.cg_max_iterations;
    const CgResult cg = conjugate_gradient(op.system, rhs, z, opts);
    if (cg.indefinite) throw NumericalError("macro system is not positive definite");
    if (!cg.converged && norm2(rhs) > 0.0) {
        throw NumericalError("macro CG stalled at relative residual " +
                             std::to_string(cg.relative_residual));
    }
    check_blowup(z, controls.blowup_cap);

    MacroState next;
    next.t = state.t + dt;
    next.values = std::move(z);
    return next;
}

MacroSimulator::MacroSimulator(MacroParams params, RecordSpec record)
    : params_(std::move(params)),
      record_(std::move(record)),
      op_(params_.resolution, params_.tensor, params_.b, params_.dt),
      noise1_(params_.noise, kBulkNoiseId, {}, {}, true),
      noise2_(params_.noise, kBoundaryNoiseId, {}, {}, true) {
    const int n = op_.n;
    for (int j = 1; j <= n - 1; ++j) {
        for (int i = 1; i <= n - 1; ++i) {
            xs_.push_back(i * op_.spacing);
            ys_.push_back(j * op_.spacing);
        }
    }
    if (params_.noise.q0 == 0.0) params_.noise_enabled = false;
    if (params_.noise_enabled) {
        noise1_ = NoiseEvaluator(params_.noise, kBulkNoiseId, xs_, ys_, true);
        noise2_ = NoiseEvaluator(params_.noise, kBoundaryNoiseId, xs_, ys_, true);
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
        std::vector<double> table(xs_.size());
        for (std::size_t p = 0; p < table.size(); ++p) {
            table[p] = op_.mass * dirichlet_mode(k, l, xs_[p], ys_[p]);
        }
        mode_table_.push_back(std::move(table));
    }
}

MacroState MacroSimulator::initial_state() const {
    MacroState state;
    state.t = 0.0;
    state.values.resize(xs_.size());
    const double scale =
        params_.init_mode == MacroInitMode::ThetaU0 ? op_.theta : 1.0 / op_.theta;
    for (std::size_t p = 0; p < state.values.size(); ++p) {
        state.values[p] = scale * params_.u0(xs_[p], ys_[p]);
    }
    return state;
}

PathRecord MacroSimulator::run_path(std::uint64_t path_id) const {
    PathRecord record;
    record.model = "macro";
    record.epsilon = 0.0;
    record.path_id = path_id;
    record.modes = record_.modes;

    MacroState state = initial_state();
    std::vector<double> w1(state.values.size());
    std::vector<double> w2(state.values.size());

    std::size_t next_sample = 0;
    double prev_sample_time = 0.0;
    double spacetime_sq = 0.0;

    const bool use_w2 = params_.noise_enabled && op_.lambda != 0.0;
    for (std::int64_t step = 1; step <= steps_; ++step) {
        std::span<const double> noise1 = {};
        std::span<const double> noise2 = {};
        if (params_.noise_enabled) {
            const NoiseIncrement inc1 =
                sample_increment(params_.noise, path_id, kBulkNoiseId,
                                 static_cast<std::uint64_t>(step - 1), params_.dt,
                                 params_.master_seed);
            noise1_.evaluate(inc1, w1);
            noise1 = w1;
            if (use_w2) {
                const NoiseIncrement inc2 =
                    sample_increment(params_.noise, path_id, kBoundaryNoiseId,
                                     static_cast<std::uint64_t>(step - 1), params_.dt,
                                     params_.master_seed);
                noise2_.evaluate(inc2, w2);
                noise2 = w2;
            }
        }
        try {
            state = step_macro(state, op_, params_.drift, noise1, noise2, params_.dt,
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
                values.push_back(dot(state.values, mode_table_[mdx]));
            }
            record.mode_values.push_back(std::move(values));
            record.x0_energy.push_back(op_.x0_energy(state));

            spacetime_sq += (t - prev_sample_time) * op_.x0_energy(state);
            prev_sample_time = t;

            if (record_.common_grid > 0) {
                std::vector<double> full(static_cast<std::size_t>(op_.n + 1) * (op_.n + 1), 0.0);
                for (int j = 1; j <= op_.n - 1; ++j) {
                    for (int i = 1; i <= op_.n - 1; ++i) {
                        full[static_cast<std::size_t>(j) * (op_.n + 1) + i] =
                            state.values[static_cast<std::size_t>(op_.dof_index(i, j))];
                    }
                }
                record.coarse_fields.push_back(
                    restrict_to_common_grid(full, op_.n, record_.common_grid));
            }
            ++next_sample;
        }
    }
    record.spacetime_l2 = std::sqrt(spacetime_sq);
    if (record_.record_final_field) {
        record.final_field.assign(static_cast<std::size_t>(op_.n + 1) * (op_.n + 1), 0.0);
        for (int j = 1; j <= op_.n - 1; ++j) {
            for (int i = 1; i <= op_.n - 1; ++i) {
                record.final_field[static_cast<std::size_t>(j) * (op_.n + 1) + i] =
                    state.values[static_cast<std::size_t>(op_.dof_index(i, j))];
            }
        }
    }
    return record;
}

PathRecord simulate_macro_path(const MacroParams& params, const RecordSpec& record,
                               std::uint64_t path_id) {
    return MacroSimulator(params, record).run_path(path_id);
}

}  // namespace perfhom
