#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "perfhom/drift.hpp"
#include "perfhom/field_expr.hpp"
#include "perfhom/geometry.hpp"
#include "perfhom/noise.hpp"
#include "perfhom/path_record.hpp"
#include "perfhom/sparse.hpp"

namespace perfhom {

/// Bulk values on the fluid DOFs plus trace values on the hole-boundary DOFs.
/// The trace is kept unscaled; every epsilon weight lives in the mass matrix
/// and the noise loading.
struct MicroState {
    double t = 0.0;
    std::vector<double> u;  // FluidDOF
    std::vector<double> v;  // BoundaryDOF
};

/// Discrete energy operator of the microscopic system on a fixed grid:
///   stiffness  L = dropped-edge graph Laplacian (+ eps*b*s_b on boundary rows)
///   mass       M = diag(h^2 on fluid rows, eps^2*s_b on boundary rows)
///   system     M + dt*L, solved by CG every step.
/// DOF layout: fluid DOFs first, then boundary DOFs.
struct MicroOperator {
    MicroOperator(const PerforatedGrid& grid, double b, double dt);

    const PerforatedGrid* grid;
    double b = 0.0;
    double dt = 0.0;
    CsrMatrix stiffness;
    std::vector<double> mass;
    CsrMatrix system;
    std::vector<double> boundary_diag;  // eps*b*s_b per boundary DOF

    int fluid_count() const { return grid->fluid_count(); }
    int total_dofs() const { return grid->dof_count(); }

    double x0_energy(const MicroState& state) const;
    /// |z|^2_X1 = z' L0 z + |z|^2_X0 with L0 the pure gradient part.
    double x1_energy(const MicroState& state) const;
};

MicroOperator assemble_micro(const PerforatedGrid& grid, double b, double dt);

struct MicroStepControls {
    double cg_tol = 1e-10;
    int cg_max_iterations = 0;
    double blowup_cap = 1e8;
};

/// One semi-implicit Euler-Maruyama step:
///   (M + dt L) z' = M z + dt N(z) + S
/// with N the drift on fluid rows (scaled h^2, zero on boundary rows) and
/// S the noise loading: h^2 * bulk_noise on fluid rows, eps*s_b * boundary_noise
/// on boundary rows. The noise fields are the g-multiplied increment fields at
/// the fluid / boundary node coordinates. Throws NumericalError on CG failure
/// or blowup.
MicroState step_micro(const MicroState& state, const MicroOperator& op, const DriftSpec& drift,
                      std::span<const double> bulk_noise, std::span<const double> boundary_noise,
                      double dt, const MicroStepControls& controls = {});

struct MicroParams {
    double b = 0.0;
    double dt = 1e-3;
    double final_time = 0.25;
    DriftSpec drift;
    SpectralNoiseSpec noise;
    bool noise_enabled = true;
    FieldExpr u0 = FieldExpr::constant(0.0);
    bool v0_constant = false;  // default: v0 = trace of u0
    double v0_value = 0.0;
    std::uint64_t master_seed = 0;
    MicroStepControls controls;
};

/// Owns the assembled operator, the precomputed noise tables and the
/// functional tables for one (grid, params, record) combination. run_path is
/// const and safe to call from concurrent workers.
class MicroSimulator {
public:
    MicroSimulator(const PerforatedGrid& grid, MicroParams params, RecordSpec record);

    PathRecord run_path(std::uint64_t path_id) const;

    const PerforatedGrid& grid() const { return *grid_; }
    const MicroOperator& op() const { return op_; }
    const MicroParams& params() const { return params_; }
    std::int64_t steps() const { return steps_; }

    MicroState initial_state() const;

private:
    const PerforatedGrid* grid_;
    MicroParams params_;
    RecordSpec record_;
    MicroOperator op_;
    NoiseEvaluator bulk_noise_;
    NoiseEvaluator boundary_noise_;
    std::vector<double> fluid_x_, fluid_y_, boundary_x_, boundary_y_;
    // Functional tables: bulk_weight * e_{k,l} at fluid / boundary nodes.
    std::vector<std::vector<double>> mode_table_fluid_;
    std::vector<std::vector<double>> mode_table_boundary_;
    std::int64_t steps_ = 0;
    std::vector<std::int64_t> sample_steps_;
};

/// Convenience wrapper: assemble and run a single path.
PathRecord simulate_micro_path(const PerforatedGrid& grid, const MicroParams& params,
                               const RecordSpec& record, std::uint64_t path_id);

}  // namespace perfhom
