#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace perfhom {

/// What a path simulation records and when.
struct RecordSpec {
    std::vector<double> sample_times;            // ascending, in (0, T]
    std::vector<std::pair<int, int>> modes;      // sine-mode functionals (k,l)
    int common_grid = 0;                         // >0: keep cell-averaged fields there
    bool record_final_field = false;             // keep the final full-grid field
};

/// Time series of functionals and energy diagnostics for one simulated path.
/// Failed paths carry partial records up to the failing step.
struct PathRecord {
    std::string model;  // "micro" or "macro"
    double epsilon = 0.0;
    std::uint64_t path_id = 0;

    std::vector<double> sample_times;
    std::vector<std::pair<int, int>> modes;
    std::vector<std::vector<double>> mode_values;  // [sample][mode]

    std::vector<double> x0_energy;      // |z|^2_X0 at sample times
    double x1_time_integral = 0.0;      // sum over steps of dt * |z|^2_X1
    double spacetime_l2 = 0.0;          // sqrt(sum_k (t_k - t_{k-1}) ||u(t_k)||^2_L2)

    std::vector<std::vector<double>> coarse_fields;  // [sample][nc*nc], optional
    std::vector<double> final_field;                 // full grid, optional

    bool failed = false;
    std::uint64_t fail_step = 0;
    std::string fail_reason;
};

/// The energy diagnostic of a finished path: |z(T)|^2_X0 + integral of |z|^2_X1.
inline double energy_diagnostic(const PathRecord& record) {
    const double x0_final = record.x0_energy.empty() ? 0.0 : record.x0_energy.back();
    return x0_final + record.x1_time_integral;
}

}  // namespace perfhom
