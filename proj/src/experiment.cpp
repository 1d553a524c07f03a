#include "perfhom/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "perfhom/errors.hpp"

namespace perfhom {

void ExperimentPlan::validate() const {
    if (ladder.empty()) throw ConfigError("ladder must not be empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i] < 1) throw ConfigError("ladder entries must be positive");
        if (i > 0 && ladder[i] <= ladder[i - 1]) {
            throw ConfigError("ladder must be strictly decreasing in epsilon");
        }
    }
    if (paths < 2) throw ConfigError("paths must be at least 2");
    if (!(final_time > 0.0)) throw ConfigError("final time must be positive");
    if (macro_resolution == 0 && reuse_macro) {
        throw ConfigError("reuse_macro needs a fixed macro resolution");
    }
    cell.validate();
    drift.validate();
}

std::vector<double> ExperimentPlan::resolved_sample_times() const {
    if (!sample_times.empty()) return sample_times;
    std::vector<double> times;
    const int count = 5;
    for (int k = 1; k <= count; ++k) times.push_back(final_time * k / count);
    return times;
}

std::vector<std::string> ExperimentPlan::functional_ids() const {
    std::vector<std::string> ids;
    for (const auto& [k, l] : functional_modes) {
        ids.push_back("mode_" + std::to_string(k) + "_" + std::to_string(l));
    }
    if (include_l2_functional) ids.push_back("l2_spacetime");
    return ids;
}

double functional(std::span<const double> cell_field, int coarse_intervals, int k, int l) {
    const std::size_t expected =
        static_cast<std::size_t>(coarse_intervals) * static_cast<std::size_t>(coarse_intervals);
    if (cell_field.size() != expected) {
        throw std::invalid_argument("functional: field length does not match the grid");
    }
    const double h = 1.0 / coarse_intervals;
    double acc = 0.0;
    for (int j = 0; j < coarse_intervals; ++j) {
        for (int i = 0; i < coarse_intervals; ++i) {
            const double x = (i + 0.5) * h;
            const double y = (j + 0.5) * h;
            const double v = cell_field[static_cast<std::size_t>(j) * coarse_intervals + i];
            if (!std::isfinite(v)) throw NumericalError("functional: non-finite field value");
            acc += v * dirichlet_mode(k, l, x, y);
        }
    }
    return acc * h * h;
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("wasserstein1: empty sample set");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() == b.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
        return acc / static_cast<double>(a.size());
    }
    // Quantile integral over the merged breakpoints of the two empirical CDFs.
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double q = 0.0;
    double acc = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double qa = static_cast<double>(ia + 1) / na;
        const double qb = static_cast<double>(ib + 1) / nb;
        const double q_next = std::min(qa, qb);
        acc += (q_next - q) * std::abs(a[ia] - b[ib]);
        q = q_next;
        if (qa <= q_next + 1e-15) ++ia;
        if (qb <= q_next + 1e-15) ++ib;
    }
    return acc;
}

TrendVerdict trend_check(std::span<const double> epsilons, std::span<const double> distances,
                         std::string functional_id) {
    if (epsilons.size() != distances.size() || epsilons.size() < 3) {
        throw std::invalid_argument("trend_check needs at least 3 ladder points");
    }
    const std::size_t n = epsilons.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(distances[i])) throw NumericalError("trend_check: non-finite distance");
        x[i] = std::log(epsilons[i]);
        y[i] = std::log(std::max(distances[i], 1e-300));  // zero distances clamp to the floor
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    TrendVerdict v;
    v.functional_id = std::move(functional_id);
    v.slope = sxy / sxx;
    v.intercept = my - v.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (v.intercept + v.slope * x[i]);
        ss_res += r * r;
    }
    v.residual = std::sqrt(ss_res / static_cast<double>(n));
    v.stderr_slope = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
    v.pass = v.slope > v.stderr_slope;
    return v;
}

namespace {

struct SampleStats {
    double mean = 0.0;
    double stddev = 0.0;
};

SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    if (xs.empty()) return s;
    for (const double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (const double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return s;
}

// Final-time value of a functional from a record; the l2_spacetime functional
// is the path-level scalar.
double final_value(const PathRecord& r, std::size_t functional_index, std::size_t mode_count) {
    if (functional_index < mode_count) return r.mode_values.back()[functional_index];
    return r.spacetime_l2;
}

void run_paths_parallel(int threads, int count, const std::function<void(int)>& task) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

SweepResult run_sweep(const ExperimentPlan& plan) {
    plan.validate();

    SweepResult result;
    const CellGrid cell_grid = build_cell_grid(plan.cell);
    result.tensor = compute_homogenized_tensor(cell_grid, plan.cell_tol);

    RecordSpec record;
    record.sample_times = plan.resolved_sample_times();
    record.modes = plan.functional_modes;

    const std::uint64_t macro_path_offset =
        plan.coupling == ExperimentPlan::Coupling::Independent ? (std::uint64_t(1) << 32) : 0;

    ComparisonReport& report = result.report;
    report.master_seed = plan.master_seed;
    report.coupling =
        plan.coupling == ExperimentPlan::Coupling::SharedNoise ? "shared" : "independent";

    std::vector<PathRecord> reused_macro;

    for (const int cells : plan.ladder) {
        const PerforatedGrid grid = build_perforated_grid(plan.cell, cells);

        MicroParams mp;
        mp.b = plan.b;
        mp.dt = plan.dt;
        mp.final_time = plan.final_time;
        mp.drift = plan.drift;
        mp.noise = plan.noise;
        mp.u0 = plan.u0;
        mp.master_seed = plan.master_seed;
        mp.controls = plan.controls;
        const MicroSimulator micro(grid, mp, record);

        std::vector<PathRecord> micro_records(static_cast<std::size_t>(plan.paths));
        run_paths_parallel(plan.threads, plan.paths, [&](int p) {
            micro_records[static_cast<std::size_t>(p)] =
                micro.run_path(static_cast<std::uint64_t>(p));
        });

        std::vector<PathRecord> macro_records;
        if (plan.reuse_macro && !reused_macro.empty()) {
            macro_records = reused_macro;
        } else {
            MacroParams ap;
            ap.resolution = plan.macro_resolution > 0 ? plan.macro_resolution : grid.n;
            ap.tensor = result.tensor;
            ap.b = plan.b;
            ap.dt = plan.dt;
            ap.final_time = plan.final_time;
            ap.drift = plan.drift;
            ap.noise = plan.noise;
            ap.u0 = plan.u0;
            ap.init_mode = plan.init_mode;
            ap.master_seed = plan.master_seed;
            ap.controls.cg_tol = plan.controls.cg_tol;
            ap.controls.cg_max_iterations = plan.controls.cg_max_iterations;
            ap.controls.blowup_cap = plan.controls.blowup_cap;
            const MacroSimulator macro(ap, record);
            macro_records.resize(static_cast<std::size_t>(plan.paths));
            run_paths_parallel(plan.threads, plan.paths, [&](int p) {
                macro_records[static_cast<std::size_t>(p)] =
                    macro.run_path(static_cast<std::uint64_t>(p) + macro_path_offset);
            });
            for (auto& r : macro_records) r.epsilon = grid.epsilon;
            if (plan.reuse_macro) reused_macro = macro_records;
        }

        LadderPointReport point;
        point.epsilon = grid.epsilon;
        point.cells_per_side = cells;
        for (const auto& r : micro_records) point.micro_failures += r.failed ? 1 : 0;
        for (const auto& r : macro_records) point.macro_failures += r.failed ? 1 : 0;

        const auto ids = plan.functional_ids();
        const std::size_t mode_count = plan.functional_modes.size();
        for (std::size_t f = 0; f < ids.size(); ++f) {
            FunctionalStats stats;
            stats.functional_id = ids[f];
            std::vector<double> ms, as;
            for (const auto& r : micro_records) {
                if (!r.failed) ms.push_back(final_value(r, f, mode_count));
            }
            for (const auto& r : macro_records) {
                if (!r.failed) as.push_back(final_value(r, f, mode_count));
            }
            if (ms.empty() || as.empty()) {
                throw NumericalError("all paths failed at epsilon=" + std::to_string(grid.epsilon));
            }
            const SampleStats m_stats = sample_stats(ms);
            const SampleStats a_stats = sample_stats(as);
            stats.micro_mean = m_stats.mean;
            stats.micro_std = m_stats.stddev;
            stats.macro_mean = a_stats.mean;
            stats.macro_std = a_stats.stddev;
            stats.wasserstein = wasserstein1(ms, as);

            if (plan.coupling == ExperimentPlan::Coupling::SharedNoise && f < mode_count) {
                double acc = 0.0;
                int used = 0;
                for (int p = 0; p < plan.paths; ++p) {
                    const auto& mr = micro_records[static_cast<std::size_t>(p)];
                    const auto& ar = macro_records[static_cast<std::size_t>(p)];
                    if (mr.failed || ar.failed) continue;
                    double sq = 0.0;
                    double prev = 0.0;
                    for (std::size_t s = 0; s < mr.sample_times.size(); ++s) {
                        const double d = mr.mode_values[s][f] - ar.mode_values[s][f];
                        sq += (mr.sample_times[s] - prev) * d * d;
                        prev = mr.sample_times[s];
                    }
                    acc += std::sqrt(sq);
                    ++used;
                }
                if (used > 0) stats.pathwise_l2_mean = acc / used;
            }
            point.functionals.push_back(std::move(stats));
        }

        double micro_energy = 0.0, macro_energy = 0.0;
        int mc = 0, ac = 0;
        for (const auto& r : micro_records) {
            if (!r.failed) {
                micro_energy += energy_diagnostic(r);
                ++mc;
            }
        }
        for (const auto& r : macro_records) {
            if (!r.failed) {
                macro_energy += energy_diagnostic(r);
                ++ac;
            }
        }
        point.micro_energy_mean = mc > 0 ? micro_energy / mc : 0.0;
        point.macro_energy_mean = ac > 0 ? macro_energy / ac : 0.0;

        report.ladder.push_back(std::move(point));
        result.micro.push_back(std::move(micro_records));
        result.macro.push_back(std::move(macro_records));
    }

    if (report.ladder.size() >= 3) {
        std::vector<double> eps;
        for (const auto& point : report.ladder) eps.push_back(point.epsilon);
        const auto ids = plan.functional_ids();
        for (std::size_t f = 0; f < ids.size(); ++f) {
            std::vector<double> dist;
            for (const auto& point : report.ladder) dist.push_back(point.functionals[f].wasserstein);
            report.trends.push_back(trend_check(eps, dist, ids[f]));
        }
    }

    double emin = 0.0, emax = 0.0;
    for (std::size_t i = 0; i < report.ladder.size(); ++i) {
        const double e = report.ladder[i].micro_energy_mean;
        if (i == 0) emin = emax = e;
        emin = std::min(emin, e);
        emax = std::max(emax, e);
    }
    report.micro_energy_ratio = emin > 0.0 ? emax / emin : 0.0;
    return result;
}

}  // namespace perfhom
