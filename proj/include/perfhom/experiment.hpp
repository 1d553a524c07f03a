#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perfhom/cell_solver.hpp"
#include "perfhom/drift.hpp"
#include "perfhom/macro_solver.hpp"
#include "perfhom/micro_solver.hpp"
#include "perfhom/noise.hpp"
#include "perfhom/path_record.hpp"

namespace perfhom {

/// Monte Carlo epsilon-ladder configuration. The ladder is given as
/// cells-per-side values N (eps = 1/N), strictly increasing so eps strictly
/// decreases.
struct ExperimentPlan {
    std::vector<int> ladder = {4, 8, 16};
    int paths = 500;
    std::vector<std::pair<int, int>> functional_modes = {{1, 1}, {2, 1}, {1, 2}, {2, 2}};
    bool include_l2_functional = true;

    enum class Coupling { SharedNoise, Independent };
    Coupling coupling = Coupling::SharedNoise;

    double final_time = 0.25;
    std::vector<double> sample_times;  // empty: 5 evenly spaced up to T
    std::uint64_t master_seed = 0;
    std::string out_dir = "out";

    CellSpec cell{0.5, 8};
    double b = 1.0;
    double dt = 1e-3;
    DriftSpec drift;
    SpectralNoiseSpec noise;
    FieldExpr u0 = FieldExpr::constant(0.0);
    MacroInitMode init_mode = MacroInitMode::ThetaU0;
    int macro_resolution = 64;  // 0: match the micro grid at every ladder point
    bool reuse_macro = false;   // reuse one macro sample across the ladder
    double cell_tol = 1e-10;
    MicroStepControls controls;
    int threads = 0;  // 0: hardware concurrency

    void validate() const;
    std::vector<double> resolved_sample_times() const;
    std::vector<std::string> functional_ids() const;
};

struct FunctionalStats {
    std::string functional_id;
    double micro_mean = 0.0;
    double micro_std = 0.0;
    double macro_mean = 0.0;
    double macro_std = 0.0;
    double wasserstein = 0.0;
    std::optional<double> pathwise_l2_mean;  // shared-noise coupling only
};

struct LadderPointReport {
    double epsilon = 0.0;
    int cells_per_side = 0;
    int micro_failures = 0;
    int macro_failures = 0;
    std::vector<FunctionalStats> functionals;
    double micro_energy_mean = 0.0;
    double macro_energy_mean = 0.0;
};

struct TrendVerdict {
    std::string functional_id;
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    bool pass = false;
};

struct ComparisonReport {
    std::vector<LadderPointReport> ladder;
    std::vector<TrendVerdict> trends;
    double micro_energy_ratio = 0.0;  // max/min of micro energy means across the ladder
    std::uint64_t master_seed = 0;
    std::string coupling;
};

struct SweepResult {
    ComparisonReport report;
    // Records per ladder point, in (ladder, path) order; macro records carry the
    // matching ladder epsilon in `epsilon` for bookkeeping even though the model
    // itself has none.
    std::vector<std::vector<PathRecord>> micro;
    std::vector<std::vector<PathRecord>> macro;
    HomogenizedTensor tensor;
};

/// Quadrature of a cell-centered common-grid field against the (k,l) Dirichlet
/// mode: sum over cells of field * e_{k,l}(cell center) / n^2. Exact for the
/// discrete modes themselves.
double functional(std::span<const double> cell_field, int coarse_intervals, int k, int l);

/// Exact Wasserstein-1 distance between the empirical measures of two scalar
/// samples (the quantile-function integral; mean absolute difference of the
/// order statistics when the sizes match).
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Least-squares fit of log(distance) against log(epsilon). Passes when the
/// slope exceeds its fitted standard error: distances shrink with epsilon
/// beyond noise.
TrendVerdict trend_check(std::span<const double> epsilons, std::span<const double> distances,
                         std::string functional_id = {});

/// Runs the full micro/macro Monte Carlo ladder and aggregates the comparison
/// report. Individual path failures are recorded and excluded from statistics,
/// never fatal.
SweepResult run_sweep(const ExperimentPlan& plan);

}  // namespace perfhom
