#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "perfhom/drift.hpp"
#include "perfhom/experiment.hpp"
#include "perfhom/macro_solver.hpp"
#include "perfhom/micro_solver.hpp"
#include "perfhom/noise.hpp"

namespace perfhom {

/// Flat, validated view of the configuration file. The file format is
/// line-based `key = value` under `[section]` headers with `#` comments:
///
///   seed = 42                # top level
///   [geometry]
///   rho = 0.5
///   m = 8
///   ladder = 1/4,1/8,1/16    # or: n_eps = 8
///   [time]
///   T = 0.25
///   dt = 1e-3
///   sample_times = 0.05,0.1,0.15,0.2,0.25
///   [physics]
///   b = 1.0
///   [drift]
///   kind = forcing           # forcing|lipschitz|polynomial|monotone|gradient
///   f = const:0              # forcing field
///   c = 0.0                  # lipschitz: c u + d sin u
///   d = 0.0
///   a = const:1              # polynomial coefficient, -a |u|^p u
///   p = 2.0
///   s = 1.0                  # monotone: -s cbrt(u)
///   h1 = u:0.0               # gradient: u:<c> -> c u, sinu:<c> -> c sin u
///   h2 = u:0.0
///   [noise]
///   J = 16
///   gamma = 2.0
///   q0 = 0.1
///   g1 = const:1
///   g2 = const:1
///   [init]
///   u0 = const:0
///   v0 = trace               # or a number for a constant override
///   macro_mode = theta_u0    # or u0_over_theta
///   [experiment]
///   paths = 500
///   coupling = shared        # or independent
///   functionals = 1:1,2:1,1:2,2:2
///   out_dir = out
///   macro_n = 64             # 0 matches the micro grid per ladder point
///   reuse_macro = false
///   threads = 0
///   [solver]
///   cg_tol = 1e-10
///   cg_max_iterations = 0
///   blowup_cap = 1e8
///   cell_tol = 1e-10
///
/// Unknown keys, type errors and range violations are rejected with the line
/// number. Missing keys take the defaults above.
struct Config {
    double rho = 0.5;
    int m = 8;
    std::vector<int> ladder = {4, 8, 16};  // cells per side, eps = 1/N
    int n_eps = 0;                         // single-run override; 0: first ladder entry

    double final_time = 0.25;
    double dt = 1e-3;
    std::vector<double> sample_times;  // empty: 5 evenly spaced

    double b = 1.0;

    std::string drift_kind = "forcing";
    std::string drift_f = "const:0";
    double drift_c = 0.0;
    double drift_d = 0.0;
    std::string drift_a = "const:1";
    double drift_p = 2.0;
    double drift_s = 1.0;
    std::string drift_h1 = "u:0";
    std::string drift_h2 = "u:0";

    int noise_modes = 16;
    double noise_gamma = 2.0;
    double noise_q0 = 0.1;
    std::string noise_g1 = "const:1";
    std::string noise_g2 = "const:1";

    std::string u0 = "const:0";
    std::string v0 = "trace";
    std::string macro_mode = "theta_u0";

    int paths = 500;
    std::string coupling = "shared";
    std::vector<std::pair<int, int>> functionals = {{1, 1}, {2, 1}, {1, 2}, {2, 2}};
    std::string out_dir;  // empty: $PERFHOM_OUT_DIR or "out"
    int macro_n = 64;
    bool reuse_macro = false;
    int threads = 0;

    double cg_tol = 1e-10;
    int cg_max_iterations = 0;
    double blowup_cap = 1e8;
    double cell_tol = 1e-10;

    std::uint64_t seed = 0;

    std::string resolved_out_dir() const;
};

Config parse_config(const std::string& text);
Config load_config_file(const std::string& path);

/// Canonical serialization: every key explicit, floats in shortest round-trip
/// form. parse(serialize(c)) reproduces c.
std::string serialize_config(const Config& config);

DriftSpec drift_from_config(const Config& config);
SpectralNoiseSpec noise_from_config(const Config& config);
ExperimentPlan plan_from_config(const Config& config);
MicroParams micro_params_from_config(const Config& config);
MacroParams macro_params_from_config(const Config& config, const HomogenizedTensor& tensor);
RecordSpec record_from_config(const Config& config);

}  // namespace perfhom
