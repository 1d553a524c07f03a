#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "perfhom/cell_solver.hpp"
#include "perfhom/drift.hpp"
#include "perfhom/field_expr.hpp"
#include "perfhom/noise.hpp"
#include "perfhom/path_record.hpp"
#include "perfhom/sparse.hpp"

namespace perfhom {

/// Homogenized state on the full domain: values at the interior nodes of a
/// uniform n x n grid, homogeneous Dirichlet data on the boundary.
struct MacroState {
    double t = 0.0;
    std::vector<double> values;  // (n-1)^2 interior nodes, row-major
};

/// Discrete effective operator:
///   K = theta^-1 (A*_11 d11 + 2 A*_12 d12 + A*_22 d22, divergence form)
///       + b*lambda * h^2 on the diagonal
/// on the h^2 mass convention, 5-point stencils for the diagonal entries and
/// the 4-corner cross stencil for A*_12. Symmetric for constant A*.
struct MacroOperator {
    MacroOperator(int resolution, const HomogenizedTensor& tensor, double b, double dt);

    int n = 0;  // grid intervals per side
    double spacing = 0.0;
    double theta = 1.0;
    double lambda = 0.0;
    double b = 0.0;
    double dt = 0.0;
    Matrix2 a{};
    CsrMatrix stiffness;  // K
    double mass = 0.0;    // h^2, uniform diagonal
    CsrMatrix system;     // M + dt K

    int dofs() const { return (n - 1) * (n - 1); }
    int dof_index(int i, int j) const { return (j - 1) * (n - 1) + (i - 1); }

    double x0_energy(const MacroState& state) const;
    double x1_energy(const MacroState& state) const;
};

MacroOperator assemble_macro(int resolution, const HomogenizedTensor& tensor, double b, double dt);

struct MacroStepControls {
    double cg_tol = 1e-10;
    int cg_max_iterations = 0;
    double blowup_cap = 1e8;
};

/// One semi-implicit step of
///   dU = [theta^-1 div(A* grad U) - b lambda U + effective drift] dt
///        + theta g1 dW1 + lambda g2 dW2
/// The noise fields are the g-multiplied increment fields at the interior
/// nodes; the theta and lambda loadings are applied here.
MacroState step_macro(const MacroState& state, const MacroOperator& op, const DriftSpec& drift,
                      std::span<const double> noise1, std::span<const double> noise2, double dt,
                      const MacroStepControls& controls = {});

/// Initial condition for the homogenized run. ThetaU0 is the default; the
/// alternative U0/theta is kept for the initial-condition discriminator
/// experiment.
enum class MacroInitMode { ThetaU0, U0OverTheta };

struct MacroParams {
    int resolution = 64;
    HomogenizedTensor tensor = identity_tensor();
    double b = 0.0;
    double dt = 1e-3;
    double final_time = 0.25;
    DriftSpec drift;
    SpectralNoiseSpec noise;
    bool noise_enabled = true;
    FieldExpr u0 = FieldExpr::constant(0.0);
    MacroInitMode init_mode = MacroInitMode::ThetaU0;
    std::uint64_t master_seed = 0;
    MacroStepControls controls;
};

class MacroSimulator {
public:
    MacroSimulator(MacroParams params, RecordSpec record);

    PathRecord run_path(std::uint64_t path_id) const;

    const MacroOperator& op() const { return op_; }
    const MacroParams& params() const { return params_; }
    std::int64_t steps() const { return steps_; }

    MacroState initial_state() const;

private:
    MacroParams params_;
    RecordSpec record_;
    MacroOperator op_;
    NoiseEvaluator noise1_;
    NoiseEvaluator noise2_;
    std::vector<double> xs_, ys_;
    std::vector<std::vector<double>> mode_table_;  // h^2 e_{k,l} at interior nodes
    std::int64_t steps_ = 0;
    std::vector<std::int64_t> sample_steps_;
};

PathRecord simulate_macro_path(const MacroParams& params, const RecordSpec& record,
                               std::uint64_t path_id);

}  // namespace perfhom
