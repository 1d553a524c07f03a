#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perfhom/config.hpp"
#include "perfhom/errors.hpp"
#include "perfhom/experiment.hpp"
#include "perfhom/output.hpp"

using namespace perfhom;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;  // section.key=value
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("-c,--config", opts.config_path, "configuration file (key = value format)");
    cmd->add_option("--set", opts.overrides,
                    "override any config key as section.key=value (repeatable); "
                    "top-level keys as key=value");
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config)");
    cmd->add_option("--out-dir", opts.out_dir, "output directory (overrides the config)");
}

// Overrides are rewritten into config syntax and appended, so they pass through
// the same validation as the file itself.
Config load_with_overrides(const CommonOptions& opts) {
    std::string text;
    if (!opts.config_path.empty()) text = read_file(opts.config_path);
    std::map<std::string, std::vector<std::string>> by_section;
    for (const std::string& item : opts.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects section.key=value, got '" + item + "'");
        }
        std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        const auto dot = key.find('.');
        std::string section;
        if (dot != std::string::npos) {
            section = key.substr(0, dot);
            key = key.substr(dot + 1);
        }
        by_section[section].push_back(key + " = " + value);
    }
    std::ostringstream os;
    os << text << "\n";
    if (by_section.count("")) {
        for (const auto& line : by_section[""]) os << line << "\n";
    }
    for (const auto& [section, lines] : by_section) {
        if (section.empty()) continue;
        os << "[" << section << "]\n";
        for (const auto& line : lines) os << line << "\n";
    }
    Config config = parse_config(os.str());
    if (opts.seed) config.seed = *opts.seed;
    if (opts.out_dir) config.out_dir = *opts.out_dir;
    return config;
}

struct OutputSet {
    std::string dir;
    std::vector<std::pair<std::string, std::string>> checksums;

    void emit(const std::string& name, const std::string& content) {
        write_file(dir + "/" + name, content);
        checksums.emplace_back(name, fnv1a_hex({content.data(), content.size()}));
    }
};

void finish_manifest(OutputSet& out, const Config& config, const HomogenizedTensor* tensor) {
    out.emit("manifest.json", manifest_json(serialize_config(config), out.checksums, tensor));
}

HomogenizedTensor tensor_for(const Config& config) {
    const CellGrid grid = build_cell_grid({config.rho, config.m});
    return compute_homogenized_tensor(grid, config.cell_tol);
}

SweepResult single_model_result(const Config& config, bool micro,
                                std::optional<std::uint64_t> only_path) {
    // simulate-micro / simulate-macro reuse the sweep bookkeeping with a
    // one-entry ladder and the requested model only.
    ExperimentPlan plan = plan_from_config(config);
    const int cells = config.n_eps > 0 ? config.n_eps : config.ladder.front();
    plan.ladder = {cells};
    plan.validate();

    SweepResult result;
    result.tensor = tensor_for(config);
    RecordSpec record = record_from_config(config);
    record.record_final_field = true;

    // Paths are addressed by id, so a single one can be recomputed in isolation.
    std::vector<std::uint64_t> path_ids;
    if (only_path) {
        path_ids.push_back(*only_path);
    } else {
        for (int p = 0; p < plan.paths; ++p) path_ids.push_back(static_cast<std::uint64_t>(p));
    }
    std::vector<PathRecord> records(path_ids.size());
    if (micro) {
        const PerforatedGrid grid = build_perforated_grid(plan.cell, cells);
        MicroParams params = micro_params_from_config(config);
        const MicroSimulator sim(grid, params, record);
        for (std::size_t p = 0; p < path_ids.size(); ++p) records[p] = sim.run_path(path_ids[p]);
        result.micro.push_back(std::move(records));
    } else {
        MacroParams params = macro_params_from_config(config, result.tensor);
        const MacroSimulator sim(params, record);
        for (std::size_t p = 0; p < path_ids.size(); ++p) {
            records[p] = sim.run_path(path_ids[p]);
            records[p].epsilon = 1.0 / cells;
        }
        result.macro.push_back(std::move(records));
    }
    return result;
}

int run_cell(const CommonOptions& common, const std::string& out_file) {
    const Config config = load_with_overrides(common);
    const CellGrid grid = build_cell_grid({config.rho, config.m});
    const CorrectorField cx = solve_corrector(grid, 0, config.cell_tol);
    const CorrectorField cy = solve_corrector(grid, 1, config.cell_tol);
    const HomogenizedTensor tensor = homogenized_tensor(cx, cy, grid, config.cell_tol);
    const std::string csv = cell_csv(tensor);
    if (out_file.empty()) {
        std::cout << csv;
    } else {
        write_file(out_file, csv);
    }
    const Matrix2 product = corrector_product_matrix(cx, cy, grid);
    std::cerr << "effective tensor (energy form): [" << format_shortest(tensor.a[0][0]) << ", "
              << format_shortest(tensor.a[0][1]) << "; " << format_shortest(tensor.a[1][0]) << ", "
              << format_shortest(tensor.a[1][1]) << "]\n"
              << "zeroth-order corrector product (reference only): ["
              << format_shortest(product[0][0]) << ", " << format_shortest(product[0][1]) << "; "
              << format_shortest(product[1][0]) << ", " << format_shortest(product[1][1]) << "]\n";
    return 0;
}

int run_check_noise(const CommonOptions& common) {
    const Config config = load_with_overrides(common);
    const SpectralNoiseSpec spec = noise_from_config(config);
    for (const int id : {1, 2}) {
        const TraceReport report = check_trace_condition(spec, id);
        std::cout << "noise " << id << ": partial trace sum over J=" << report.modes
                  << " modes = " << format_shortest(report.partial_sum)
                  << (report.convergent ? " (tail converges, gamma > 1)"
                                        : " (tail DIVERGES, gamma <= 1)")
                  << "\n";
    }
    return 0;
}

int run_simulate(const CommonOptions& common, bool micro, const std::string& snapshot,
                 std::optional<std::uint64_t> only_path) {
    const Config config = load_with_overrides(common);
    const SweepResult result = single_model_result(config, micro, only_path);
    const ExperimentPlan plan = [&] {
        ExperimentPlan p = plan_from_config(config);
        p.ladder = {config.n_eps > 0 ? config.n_eps : config.ladder.front()};
        return p;
    }();

    OutputSet out{config.resolved_out_dir(), {}};
    ensure_directory(out.dir);
    out.emit("samples.csv", samples_csv(result, plan));
    out.emit("energy.csv", energy_csv(result));
    if (micro) {
        const PerforatedGrid grid = build_perforated_grid(plan.cell, plan.ladder.front());
        out.emit("grid_summary.csv", grid_summary_csv(grid));
    }

    const auto& block = micro ? result.micro.front() : result.macro.front();
    if (!snapshot.empty() && !block.empty() && !block.front().final_field.empty()) {
        const auto& field = block.front().final_field;
        const int n =
            static_cast<int>(std::lround(std::sqrt(static_cast<double>(field.size())))) - 1;
        const double h = 1.0 / n;
        if (snapshot == "csv") {
            out.emit("field_final.csv", field_csv(field, n, h));
        } else {
            write_field_dump(out.dir + "/field_final.f64", field, n, h, config.final_time);
            const std::string raw = read_file(out.dir + "/field_final.f64");
            out.checksums.emplace_back("field_final.f64", fnv1a_hex({raw.data(), raw.size()}));
        }
    }
    int failures = 0;
    for (const auto& r : block) failures += r.failed ? 1 : 0;
    finish_manifest(out, config, &result.tensor);
    std::cout << (micro ? "micro" : "macro") << " run complete: " << block.size() << " paths, "
              << failures << " failures, outputs in " << out.dir << "\n";
    return failures == 0 ? 0 : 3;
}

int run_sweep_cmd(const CommonOptions& common, bool plot) {
    const Config config = load_with_overrides(common);
    const ExperimentPlan plan = plan_from_config(config);
    const SweepResult result = run_sweep(plan);

    OutputSet out{plan.out_dir, {}};
    ensure_directory(out.dir);
    out.emit("samples.csv", samples_csv(result, plan));
    out.emit("energy.csv", energy_csv(result));
    out.emit("report.json", report_json(result, plan));
    if (plot) out.emit("wasserstein.svg", wasserstein_svg(result.report));
    finish_manifest(out, config, &result.tensor);

    for (const auto& point : result.report.ladder) {
        std::cout << "eps=1/" << point.cells_per_side;
        for (const auto& f : point.functionals) {
            std::cout << "  W1[" << f.functional_id << "]=" << format_shortest(f.wasserstein);
        }
        std::cout << "  failures=" << point.micro_failures + point.macro_failures << "\n";
    }
    for (const auto& t : result.report.trends) {
        std::cout << "trend " << t.functional_id << ": slope=" << format_shortest(t.slope)
                  << " (stderr " << format_shortest(t.stderr_slope) << ") "
                  << (t.pass ? "PASS" : "FAIL") << "\n";
    }
    std::cout << "outputs in " << out.dir << "\n";
    return 0;
}

// Rebuilds per-epsilon Wasserstein distances and the trend from a samples.csv.
int run_compare(const std::string& samples_path, const std::string& out_file,
                const std::string& functional_id) {
    const std::string text = read_file(samples_path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line != "epsilon,model,path_id,functional_id,sample_time,value") {
        throw ConfigError("unexpected samples.csv header in " + samples_path);
    }
    // (epsilon, model, path) -> (latest time, value) for the chosen functional
    std::map<double, std::map<std::string, std::map<std::uint64_t, std::pair<double, double>>>>
        table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) cols.push_back(item);
        if (cols.size() != 6) throw ConfigError("malformed samples row: " + line);
        if (cols[3] != functional_id) continue;
        const double eps = std::stod(cols[0]);
        const std::uint64_t path = std::stoull(cols[2]);
        const double t = std::stod(cols[4]);
        const double value = std::stod(cols[5]);
        auto& slot = table[eps][cols[1]][path];
        if (t >= slot.first) slot = {t, value};
    }
    if (table.empty()) {
        throw ConfigError("no rows for functional '" + functional_id + "' in " + samples_path);
    }

    std::vector<double> epsilons, distances;
    std::ostringstream report;
    report << "{\n  \"functional_id\": \"" << functional_id << "\",\n  \"ladder\": [\n";
    bool first = true;
    for (auto it = table.rbegin(); it != table.rend(); ++it) {  // descending epsilon
        auto& models = it->second;
        if (!models.count("micro") || !models.count("macro")) continue;
        std::vector<double> micro_samples, macro_samples;
        for (const auto& [path, tv] : models["micro"]) micro_samples.push_back(tv.second);
        for (const auto& [path, tv] : models["macro"]) macro_samples.push_back(tv.second);
        const double w = wasserstein1(micro_samples, macro_samples);
        epsilons.push_back(it->first);
        distances.push_back(w);
        report << (first ? "" : ",\n") << "    {\"epsilon\": " << format_shortest(it->first)
               << ", \"wasserstein\": " << format_shortest(w)
               << ", \"micro_paths\": " << micro_samples.size()
               << ", \"macro_paths\": " << macro_samples.size() << "}";
        first = false;
    }
    report << "\n  ]";
    if (epsilons.size() >= 3) {
        const TrendVerdict v = trend_check(epsilons, distances, functional_id);
        report << ",\n  \"trend\": {\"slope\": " << format_shortest(v.slope)
               << ", \"stderr\": " << format_shortest(v.stderr_slope)
               << ", \"pass\": " << (v.pass ? "true" : "false") << "}";
        std::cout << "trend " << functional_id << ": slope=" << format_shortest(v.slope) << " "
                  << (v.pass ? "PASS" : "FAIL") << "\n";
    }
    report << "\n}\n";
    if (out_file.empty()) {
        std::cout << report.str();
    } else {
        write_file(out_file, report.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "perfhom: microscopic simulation and homogenized comparison of stochastic heat flow on "
        "periodically perforated domains with random dynamical hole-boundary conditions"};
    app.require_subcommand(1);
    app.footer(
        "Config keys (see README for details):\n"
        "  seed; [geometry] rho m ladder n_eps; [time] T dt sample_times; [physics] b;\n"
        "  [drift] kind f c d a p s h1 h2; [noise] J gamma q0 g1 g2;\n"
        "  [init] u0 v0 macro_mode; [experiment] paths coupling functionals out_dir\n"
        "  macro_n reuse_macro threads; [solver] cg_tol cg_max_iterations blowup_cap cell_tol\n"
        "Every key can be overridden with --set section.key=value.");

    CommonOptions cell_opts, noise_opts, micro_opts, macro_opts, sweep_opts;
    std::string cell_out, micro_snapshot, macro_snapshot;
    std::optional<std::uint64_t> micro_path_id, macro_path_id;
    bool sweep_plot = false;
    std::string compare_samples, compare_out, compare_functional = "mode_1_1";

    CLI::App* cell = app.add_subcommand("cell", "solve the cell problems and emit the tensor CSV");
    add_common(cell, cell_opts);
    cell->add_option("-o,--out", cell_out, "write the CSV here instead of stdout");

    CLI::App* check = app.add_subcommand("check-noise", "print the trace-class noise report");
    add_common(check, noise_opts);

    CLI::App* micro =
        app.add_subcommand("simulate-micro", "run microscopic paths on the perforated domain");
    add_common(micro, micro_opts);
    micro->add_option("--snapshot", micro_snapshot, "write the final field of path 0: csv or raw")
        ->check(CLI::IsMember({"csv", "raw"}));
    micro->add_option("--path-id", micro_path_id, "recompute a single path by its id");

    CLI::App* macro = app.add_subcommand("simulate-macro", "run homogenized effective paths");
    add_common(macro, macro_opts);
    macro->add_option("--snapshot", macro_snapshot, "write the final field of path 0: csv or raw")
        ->check(CLI::IsMember({"csv", "raw"}));
    macro->add_option("--path-id", macro_path_id, "recompute a single path by its id");

    CLI::App* sweep =
        app.add_subcommand("sweep", "Monte Carlo epsilon ladder with comparison report");
    add_common(sweep, sweep_opts);
    sweep->add_flag("--plot", sweep_plot, "also write a log-log SVG of W1 vs epsilon");

    CLI::App* compare = app.add_subcommand("compare", "recompute distances from a samples.csv");
    compare->add_option("--samples", compare_samples, "samples.csv produced by sweep or simulate")
        ->required();
    compare->add_option("-o,--out", compare_out, "write report JSON here instead of stdout");
    compare->add_option("--functional", compare_functional, "functional id (default mode_1_1)");

    try {
        app.parse(argc, argv);
        if (cell->parsed()) return run_cell(cell_opts, cell_out);
        if (check->parsed()) return run_check_noise(noise_opts);
        if (micro->parsed()) return run_simulate(micro_opts, true, micro_snapshot, micro_path_id);
        if (macro->parsed()) return run_simulate(macro_opts, false, macro_snapshot, macro_path_id);
        if (sweep->parsed()) return run_sweep_cmd(sweep_opts, sweep_plot);
        if (compare->parsed()) return run_compare(compare_samples, compare_out, compare_functional);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
