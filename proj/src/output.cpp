#include "perfhom/output.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "perfhom/errors.hpp"
#include "perfhom/rng.hpp"

namespace perfhom {

using nlohmann::json;

std::string format_shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fnv1a_hex(std::span<const char> bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string samples_csv(const SweepResult& result, const ExperimentPlan& plan) {
    std::ostringstream os;
    os << "epsilon,model,path_id,functional_id,sample_time,value\n";
    const auto ids = plan.functional_ids();
    const std::size_t mode_count = plan.functional_modes.size();
    auto emit = [&](const std::vector<std::vector<PathRecord>>& blocks) {
        for (const auto& block : blocks) {
            for (const auto& r : block) {
                if (r.failed) continue;
                for (std::size_t s = 0; s < r.sample_times.size(); ++s) {
                    for (std::size_t f = 0; f < mode_count; ++f) {
                        os << format_shortest(r.epsilon) << ',' << r.model << ',' << r.path_id
                           << ',' << ids[f] << ',' << format_shortest(r.sample_times[s]) << ','
                           << format_shortest(r.mode_values[s][f]) << '\n';
                    }
                }
                if (plan.include_l2_functional && !r.sample_times.empty()) {
                    os << format_shortest(r.epsilon) << ',' << r.model << ',' << r.path_id << ','
                       << "l2_spacetime" << ',' << format_shortest(r.sample_times.back()) << ','
                       << format_shortest(r.spacetime_l2) << '\n';
                }
            }
        }
    };
    emit(result.micro);
    emit(result.macro);
    return os.str();
}

std::string energy_csv(const SweepResult& result) {
    std::ostringstream os;
    os << "epsilon,model,path_id,x0_final,x1_integral,diagnostic,failed\n";
    auto emit = [&](const std::vector<std::vector<PathRecord>>& blocks) {
        for (const auto& block : blocks) {
            for (const auto& r : block) {
                const double x0 = r.x0_energy.empty() ? 0.0 : r.x0_energy.back();
                os << format_shortest(r.epsilon) << ',' << r.model << ',' << r.path_id << ','
                   << format_shortest(x0) << ',' << format_shortest(r.x1_time_integral) << ','
                   << format_shortest(energy_diagnostic(r)) << ',' << (r.failed ? 1 : 0) << '\n';
            }
        }
    };
    emit(result.micro);
    emit(result.macro);
    return os.str();
}

namespace {

json tensor_json(const HomogenizedTensor& t) {
    json j;
    j["a"] = {{t.a[0][0], t.a[0][1]}, {t.a[1][0], t.a[1][1]}};
    j["theta"] = t.theta;
    j["lambda"] = t.lambda;
    j["rho"] = t.rho;
    j["m"] = t.m;
    j["tol"] = t.tol;
    j["iterations"] = {t.iterations[0], t.iterations[1]};
    j["residuals"] = {t.residuals[0], t.residuals[1]};
    const auto eig = t.eigenvalues();
    j["eigenvalues"] = {eig[0], eig[1]};
    return j;
}

}  // namespace

std::string report_json(const SweepResult& result, const ExperimentPlan& plan) {
    json j;
    j["coupling"] = result.report.coupling;
    j["master_seed"] = result.report.master_seed;
    j["tensor"] = tensor_json(result.tensor);
    j["micro_energy_ratio"] = result.report.micro_energy_ratio;
    j["paths"] = plan.paths;
    json ladder = json::array();
    for (const auto& point : result.report.ladder) {
        json p;
        p["epsilon"] = point.epsilon;
        p["cells_per_side"] = point.cells_per_side;
        p["micro_failures"] = point.micro_failures;
        p["macro_failures"] = point.macro_failures;
        p["micro_energy_mean"] = point.micro_energy_mean;
        p["macro_energy_mean"] = point.macro_energy_mean;
        json fs = json::array();
        for (const auto& f : point.functionals) {
            json e;
            e["functional_id"] = f.functional_id;
            e["micro_mean"] = f.micro_mean;
            e["micro_std"] = f.micro_std;
            e["macro_mean"] = f.macro_mean;
            e["macro_std"] = f.macro_std;
            e["wasserstein"] = f.wasserstein;
            if (f.pathwise_l2_mean) {
                e["pathwise_l2_mean"] = *f.pathwise_l2_mean;
            } else {
                e["pathwise_l2_mean"] = nullptr;
            }
            fs.push_back(e);
        }
        p["functionals"] = fs;
        ladder.push_back(p);
    }
    j["ladder"] = ladder;
    json trends = json::array();
    for (const auto& t : result.report.trends) {
        json e;
        e["functional_id"] = t.functional_id;
        e["slope"] = t.slope;
        e["stderr"] = t.stderr_slope;
        e["intercept"] = t.intercept;
        e["residual"] = t.residual;
        e["pass"] = t.pass;
        trends.push_back(e);
    }
    j["trends"] = trends;
    return j.dump(2) + "\n";
}

std::string cell_csv(const HomogenizedTensor& t) {
    std::ostringstream os;
    os << "rho,m,theta,lambda,a11,a12,a21,a22,residual1,residual2,iters1,iters2\n";
    os << format_shortest(t.rho) << ',' << t.m << ',' << format_shortest(t.theta) << ','
       << format_shortest(t.lambda) << ',' << format_shortest(t.a[0][0]) << ','
       << format_shortest(t.a[0][1]) << ',' << format_shortest(t.a[1][0]) << ','
       << format_shortest(t.a[1][1]) << ',' << format_shortest(t.residuals[0]) << ','
       << format_shortest(t.residuals[1]) << ',' << t.iterations[0] << ',' << t.iterations[1]
       << '\n';
    return os.str();
}

std::string wasserstein_svg(const ComparisonReport& report) {
    const int width = 640, height = 480, margin = 60;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    bool first = true;
    for (const auto& point : report.ladder) {
        for (const auto& f : point.functionals) {
            const double x = std::log10(point.epsilon);
            const double y = std::log10(std::max(f.wasserstein, 1e-300));
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (first || xmax == xmin) {
        os << "<text x=\"20\" y=\"40\">no data</text>\n</svg>\n";
        return os.str();
    }
    if (ymax == ymin) ymax = ymin + 1.0;

    auto px = [&](double x) {
        return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
    };
    auto py = [&](double y) {
        return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
    };

    os << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
       << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
       << height - margin << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 15
       << "\" text-anchor=\"middle\">log10 epsilon</text>\n";
    os << "<text x=\"15\" y=\"" << height / 2 << "\" transform=\"rotate(-90 15 " << height / 2
       << ")\" text-anchor=\"middle\">log10 W1</text>\n";

    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    if (!report.ladder.empty()) {
        const std::size_t nf = report.ladder.front().functionals.size();
        for (std::size_t f = 0; f < nf; ++f) {
            const char* color = colors[f % 6];
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
            for (const auto& point : report.ladder) {
                const double x = std::log10(point.epsilon);
                const double y = std::log10(std::max(point.functionals[f].wasserstein, 1e-300));
                os << px(x) << ',' << py(y) << ' ';
            }
            os << "\"/>\n";
            os << "<text x=\"" << width - margin + 5 << "\" y=\"" << margin + 16 * (f + 1)
               << "\" fill=\"" << color << "\" font-size=\"12\">"
               << report.ladder.front().functionals[f].functional_id << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string manifest_json(const std::string& resolved_config,
                          const std::vector<std::pair<std::string, std::string>>& file_checksums,
                          const HomogenizedTensor* tensor) {
    json j;
    j["artifact"] = artifact_version();
    j["rng_algorithm"] = rng_algorithm_id();
    j["config"] = resolved_config;
    if (tensor) j["tensor"] = tensor_json(*tensor);
    json files = json::object();
    for (const auto& [name, sum] : file_checksums) files[name] = sum;
    j["checksums"] = files;
    return j.dump(2) + "\n";
}

void write_field_dump(const std::string& path, std::span<const double> field, int intervals,
                      double spacing, double time) {
    static_assert(sizeof(double) == 8);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write field dump: " + path);
    // Little-endian float64; byte order asserted at build time for the targets
    // this artifact supports.
    out.write(reinterpret_cast<const char*>(field.data()),
              static_cast<std::streamsize>(field.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path);
    std::ostringstream meta;
    const int side = intervals + 1;
    meta << "nx " << side << "\nny " << side << "\nspacing " << format_shortest(spacing)
         << "\ntime " << format_shortest(time) << "\nformat float64-le row-major\n";
    write_file(path + ".meta", meta.str());
}

std::string field_csv(std::span<const double> field, int intervals, double spacing) {
    std::ostringstream os;
    os << "x,y,value\n";
    const int side = intervals + 1;
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            os << format_shortest(i * spacing) << ',' << format_shortest(j * spacing) << ','
               << format_shortest(field[static_cast<std::size_t>(j) * side + i]) << '\n';
        }
    }
    return os.str();
}

}  // namespace perfhom
