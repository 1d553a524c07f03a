#include "perfhom/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "perfhom/errors.hpp"

namespace perfhom {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) fail(line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(line, "expected a number, got '" + s + "'");
    }
}

long long to_int(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) fail(line, "trailing characters in integer '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(line, "expected an integer, got '" + s + "'");
    }
}

bool to_bool(const std::string& s, int line) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(line, "expected a boolean, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

std::vector<int> parse_ladder(const std::string& s, int line) {
    std::vector<int> out;
    for (const auto& item : split(s, ',')) {
        if (item.rfind("1/", 0) != 0) {
            fail(line, "ladder entries are epsilon values written 1/<N>, got '" + item + "'");
        }
        const long long n = to_int(item.substr(2), line);
        if (n < 1) fail(line, "ladder entry must have a positive denominator");
        out.push_back(static_cast<int>(n));
    }
    if (out.empty()) fail(line, "ladder must not be empty");
    return out;
}

std::vector<std::pair<int, int>> parse_modes(const std::string& s, int line) {
    std::vector<std::pair<int, int>> out;
    for (const auto& item : split(s, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) fail(line, "functional modes are k:l pairs, got '" + item + "'");
        const long long k = to_int(item.substr(0, colon), line);
        const long long l = to_int(item.substr(colon + 1), line);
        if (k < 1 || l < 1) fail(line, "mode indices must be positive");
        out.emplace_back(static_cast<int>(k), static_cast<int>(l));
    }
    if (out.empty()) fail(line, "functional list must not be empty");
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void check_field_expr(const std::string& s, int line) {
    try {
        FieldExpr::parse(s);
    } catch (const ConfigError& e) {
        fail(line, e.what());
    }
}

void check_h_term(const std::string& s, int line) {
    const auto colon = s.find(':');
    if (colon == std::string::npos || (s.substr(0, colon) != "u" && s.substr(0, colon) != "sinu")) {
        fail(line, "gradient drift components are u:<c> or sinu:<c>, got '" + s + "'");
    }
    to_double(s.substr(colon + 1), line);
}

DriftSpec::HTerm parse_h_term(const std::string& s) {
    DriftSpec::HTerm term;
    const auto colon = s.find(':');
    term.form = s.substr(0, colon) == "u" ? DriftSpec::HForm::LinearU : DriftSpec::HForm::SinU;
    term.coefficient = std::stod(s.substr(colon + 1));
    return term;
}

}  // namespace

std::string Config::resolved_out_dir() const {
    if (!out_dir.empty()) return out_dir;
    if (const char* env = std::getenv("PERFHOM_OUT_DIR")) return env;
    return "out";
}

Config parse_config(const std::string& text) {
    Config config;
    using Setter = std::function<void(Config&, const std::string&, int)>;
    const std::map<std::string, Setter> keys = {
        {".seed",
         [](Config& c, const std::string& v, int ln) {
             const long long s = to_int(v, ln);
             if (s < 0) fail(ln, "seed must be nonnegative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"geometry.rho",
         [](Config& c, const std::string& v, int ln) {
             c.rho = to_double(v, ln);
             if (!(c.rho >= 0.0) || c.rho >= 1.0) fail(ln, "rho must lie in [0,1)");
         }},
        {"geometry.m",
         [](Config& c, const std::string& v, int ln) {
             c.m = static_cast<int>(to_int(v, ln));
             if (c.m < 1) fail(ln, "m must be positive");
         }},
        {"geometry.ladder",
         [](Config& c, const std::string& v, int ln) { c.ladder = parse_ladder(v, ln); }},
        {"geometry.n_eps",
         [](Config& c, const std::string& v, int ln) {
             c.n_eps = static_cast<int>(to_int(v, ln));
             if (c.n_eps < 1) fail(ln, "n_eps must be positive");
         }},
        {"time.T",
         [](Config& c, const std::string& v, int ln) {
             c.final_time = to_double(v, ln);
             if (!(c.final_time > 0.0)) fail(ln, "T must be positive");
         }},
        {"time.dt",
         [](Config& c, const std::string& v, int ln) {
             c.dt = to_double(v, ln);
             if (!(c.dt > 0.0)) fail(ln, "dt must be positive");
         }},
        {"time.sample_times",
         [](Config& c, const std::string& v, int ln) {
             c.sample_times.clear();
             for (const auto& item : split(v, ',')) {
                 const double t = to_double(item, ln);
                 if (!(t > 0.0)) fail(ln, "sample times must be positive");
                 if (!c.sample_times.empty() && t <= c.sample_times.back()) {
                     fail(ln, "sample times must be strictly increasing");
                 }
                 c.sample_times.push_back(t);
             }
         }},
        {"physics.b", [](Config& c, const std::string& v, int ln) { c.b = to_double(v, ln); }},
        {"drift.kind",
         [](Config& c, const std::string& v, int ln) {
             if (v != "forcing" && v != "lipschitz" && v != "polynomial" && v != "monotone" &&
                 v != "gradient") {
                 fail(ln, "drift kind must be forcing|lipschitz|polynomial|monotone|gradient");
             }
             c.drift_kind = v;
         }},
        {"drift.f",
         [](Config& c, const std::string& v, int ln) {
             check_field_expr(v, ln);
             c.drift_f = v;
         }},
        {"drift.c", [](Config& c, const std::string& v, int ln) { c.drift_c = to_double(v, ln); }},
        {"drift.d", [](Config& c, const std::string& v, int ln) { c.drift_d = to_double(v, ln); }},
        {"drift.a",
         [](Config& c, const std::string& v, int ln) {
             check_field_expr(v, ln);
             c.drift_a = v;
         }},
        {"drift.p",
         [](Config& c, const std::string& v, int ln) {
             c.drift_p = to_double(v, ln);
             if (!(c.drift_p > 0.0)) fail(ln, "p must be positive");
         }},
        {"drift.s",
         [](Config& c, const std::string& v, int ln) {
             c.drift_s = to_double(v, ln);
             if (c.drift_s < 0.0) fail(ln, "s must be nonnegative");
         }},
        {"drift.h1",
         [](Config& c, const std::string& v, int ln) {
             check_h_term(v, ln);
             c.drift_h1 = v;
         }},
        {"drift.h2",
         [](Config& c, const std::string& v, int ln) {
             check_h_term(v, ln);
             c.drift_h2 = v;
         }},
        {"noise.J",
         [](Config& c, const std::string& v, int ln) {
             c.noise_modes = static_cast<int>(to_int(v, ln));
             if (c.noise_modes < 1) fail(ln, "J must be positive");
         }},
        {"noise.gamma",
         [](Config& c, const std::string& v, int ln) { c.noise_gamma = to_double(v, ln); }},
        {"noise.q0",
         [](Config& c, const std::string& v, int ln) {
             c.noise_q0 = to_double(v, ln);
             if (c.noise_q0 < 0.0) fail(ln, "q0 must be nonnegative");
         }},
        {"noise.g1",
         [](Config& c, const std::string& v, int ln) {
             check_field_expr(v, ln);
             c.noise_g1 = v;
         }},
        {"noise.g2",
         [](Config& c, const std::string& v, int ln) {
             check_field_expr(v, ln);
             c.noise_g2 = v;
         }},
        {"init.u0",
         [](Config& c, const std::string& v, int ln) {
             check_field_expr(v, ln);
             c.u0 = v;
         }},
        {"init.v0",
         [](Config& c, const std::string& v, int ln) {
             if (v != "trace") to_double(v, ln);
             c.v0 = v;
         }},
        {"init.macro_mode",
         [](Config& c, const std::string& v, int ln) {
             if (v != "theta_u0" && v != "u0_over_theta") {
                 fail(ln, "macro_mode must be theta_u0 or u0_over_theta");
             }
             c.macro_mode = v;
         }},
        {"experiment.paths",
         [](Config& c, const std::string& v, int ln) {
             c.paths = static_cast<int>(to_int(v, ln));
             if (c.paths < 1) fail(ln, "paths must be positive");
         }},
        {"experiment.coupling",
         [](Config& c, const std::string& v, int ln) {
             if (v != "shared" && v != "independent") {
                 fail(ln, "coupling must be shared or independent");
             }
             c.coupling = v;
         }},
        {"experiment.functionals",
         [](Config& c, const std::string& v, int ln) { c.functionals = parse_modes(v, ln); }},
        {"experiment.out_dir",
         [](Config& c, const std::string& v, int) { c.out_dir = v; }},
        {"experiment.macro_n",
         [](Config& c, const std::string& v, int ln) {
             c.macro_n = static_cast<int>(to_int(v, ln));
             if (c.macro_n < 0) fail(ln, "macro_n must be nonnegative (0 matches micro)");
         }},
        {"experiment.reuse_macro",
         [](Config& c, const std::string& v, int ln) { c.reuse_macro = to_bool(v, ln); }},
        {"experiment.threads",
         [](Config& c, const std::string& v, int ln) {
             c.threads = static_cast<int>(to_int(v, ln));
             if (c.threads < 0) fail(ln, "threads must be nonnegative");
         }},
        {"solver.cg_tol",
         [](Config& c, const std::string& v, int ln) {
             c.cg_tol = to_double(v, ln);
             if (!(c.cg_tol > 0.0)) fail(ln, "cg_tol must be positive");
         }},
        {"solver.cg_max_iterations",
         [](Config& c, const std::string& v, int ln) {
             c.cg_max_iterations = static_cast<int>(to_int(v, ln));
             if (c.cg_max_iterations < 0) fail(ln, "cg_max_iterations must be nonnegative");
         }},
        {"solver.blowup_cap",
         [](Config& c, const std::string& v, int ln) {
             c.blowup_cap = to_double(v, ln);
             if (!(c.blowup_cap > 0.0)) fail(ln, "blowup_cap must be positive");
         }},
        {"solver.cell_tol",
         [](Config& c, const std::string& v, int ln) {
             c.cell_tol = to_double(v, ln);
             if (!(c.cell_tol > 0.0)) fail(ln, "cell_tol must be positive");
         }},
    };

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header '" + raw + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "geometry" && section != "time" && section != "physics" &&
                section != "drift" && section != "noise" && section != "init" &&
                section != "experiment" && section != "solver") {
                fail(line_no, "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value, got '" + raw + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        const std::string full = section + "." + key;
        const auto it = keys.find(full);
        if (it == keys.end()) {
            fail(line_no, "unknown key '" + key + "'" +
                              (section.empty() ? std::string(" at top level")
                                               : " in section [" + section + "]"));
        }
        it->second(config, value, line_no);
    }
    return config;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const Config& config) {
    std::ostringstream os;
    os << "seed = " << config.seed << "\n\n";
    os << "[geometry]\n";
    os << "rho = " << format_double(config.rho) << "\n";
    os << "m = " << config.m << "\n";
    os << "ladder = ";
    for (std::size_t i = 0; i < config.ladder.size(); ++i) {
        os << (i ? "," : "") << "1/" << config.ladder[i];
    }
    os << "\n";
    if (config.n_eps > 0) os << "n_eps = " << config.n_eps << "\n";
    os << "\n[time]\n";
    os << "T = " << format_double(config.final_time) << "\n";
    os << "dt = " << format_double(config.dt) << "\n";
    if (!config.sample_times.empty()) {
        os << "sample_times = ";
        for (std::size_t i = 0; i < config.sample_times.size(); ++i) {
            os << (i ? "," : "") << format_double(config.sample_times[i]);
        }
        os << "\n";
    }
    os << "\n[physics]\n";
    os << "b = " << format_double(config.b) << "\n";
    os << "\n[drift]\n";
    os << "kind = " << config.drift_kind << "\n";
    os << "f = " << config.drift_f << "\n";
    os << "c = " << format_double(config.drift_c) << "\n";
    os << "d = " << format_double(config.drift_d) << "\n";
    os << "a = " << config.drift_a << "\n";
    os << "p = " << format_double(config.drift_p) << "\n";
    os << "s = " << format_double(config.drift_s) << "\n";
    os << "h1 = " << config.drift_h1 << "\n";
    os << "h2 = " << config.drift_h2 << "\n";
    os << "\n[noise]\n";
    os << "J = " << config.noise_modes << "\n";
    os << "gamma = " << format_double(config.noise_gamma) << "\n";
    os << "q0 = " << format_double(config.noise_q0) << "\n";
    os << "g1 = " << config.noise_g1 << "\n";
    os << "g2 = " << config.noise_g2 << "\n";
    os << "\n[init]\n";
    os << "u0 = " << config.u0 << "\n";
    os << "v0 = " << config.v0 << "\n";
    os << "macro_mode = " << config.macro_mode << "\n";
    os << "\n[experiment]\n";
    os << "paths = " << config.paths << "\n";
    os << "coupling = " << config.coupling << "\n";
    os << "functionals = ";
    for (std::size_t i = 0; i < config.functionals.size(); ++i) {
        os << (i ? "," : "") << config.functionals[i].first << ":" << config.functionals[i].second;
    }
    os << "\n";
    if (!config.out_dir.empty()) os << "out_dir = " << config.out_dir << "\n";
    os << "macro_n = " << config.macro_n << "\n";
    os << "reuse_macro = " << (config.reuse_macro ? "true" : "false") << "\n";
    os << "threads = " << config.threads << "\n";
    os << "\n[solver]\n";
    os << "cg_tol = " << format_double(config.cg_tol) << "\n";
    os << "cg_max_iterations = " << config.cg_max_iterations << "\n";
    os << "blowup_cap = " << format_double(config.blowup_cap) << "\n";
    os << "cell_tol = " << format_double(config.cell_tol) << "\n";
    return os.str();
}

DriftSpec drift_from_config(const Config& config) {
    DriftSpec spec;
    if (config.drift_kind == "forcing") {
        spec.kind = DriftSpec::Kind::Forcing;
        spec.forcing = FieldExpr::parse(config.drift_f);
    } else if (config.drift_kind == "lipschitz") {
        spec.kind = DriftSpec::Kind::Lipschitz;
        spec.lipschitz_c = config.drift_c;
        spec.lipschitz_d = config.drift_d;
    } else if (config.drift_kind == "polynomial") {
        spec.kind = DriftSpec::Kind::Polynomial;
        spec.poly_a = FieldExpr::parse(config.drift_a);
        spec.poly_p = config.drift_p;
    } else if (config.drift_kind == "monotone") {
        spec.kind = DriftSpec::Kind::MonotoneSublinear;
        spec.monotone_s = config.drift_s;
    } else {
        spec.kind = DriftSpec::Kind::Gradient;
        spec.h1 = parse_h_term(config.drift_h1);
        spec.h2 = parse_h_term(config.drift_h2);
    }
    spec.validate();
    return spec;
}

SpectralNoiseSpec noise_from_config(const Config& config) {
    SpectralNoiseSpec spec;
    spec.modes = config.noise_modes;
    spec.gamma = config.noise_gamma;
    spec.q0 = config.noise_q0;
    spec.g1 = FieldExpr::parse(config.noise_g1);
    spec.g2 = FieldExpr::parse(config.noise_g2);
    return spec;
}

ExperimentPlan plan_from_config(const Config& config) {
    ExperimentPlan plan;
    plan.ladder = config.ladder;
    plan.paths = config.paths;
    plan.functional_modes = config.functionals;
    plan.coupling = config.coupling == "shared" ? ExperimentPlan::Coupling::SharedNoise
                                                : ExperimentPlan::Coupling::Independent;
    plan.final_time = config.final_time;
    plan.sample_times = config.sample_times;
    plan.master_seed = config.seed;
    plan.out_dir = config.resolved_out_dir();
    plan.cell = CellSpec{config.rho, config.m};
    plan.b = config.b;
    plan.dt = config.dt;
    plan.drift = drift_from_config(config);
    plan.noise = noise_from_config(config);
    plan.u0 = FieldExpr::parse(config.u0);
    plan.init_mode = config.macro_mode == "theta_u0" ? MacroInitMode::ThetaU0
                                                     : MacroInitMode::U0OverTheta;
    plan.macro_resolution = config.macro_n;
    plan.reuse_macro = config.reuse_macro;
    plan.cell_tol = config.cell_tol;
    plan.controls.cg_tol = config.cg_tol;
    plan.controls.cg_max_iterations = config.cg_max_iterations;
    plan.controls.blowup_cap = config.blowup_cap;
    plan.threads = config.threads;
    return plan;
}

MicroParams micro_params_from_config(const Config& config) {
    MicroParams params;
    params.b = config.b;
    params.dt = config.dt;
    params.final_time = config.final_time;
    params.drift = drift_from_config(config);
    params.noise = noise_from_config(config);
    params.u0 = FieldExpr::parse(config.u0);
    if (config.v0 != "trace") {
        params.v0_constant = true;
        params.v0_value = std::stod(config.v0);
    }
    params.master_seed = config.seed;
    params.controls.cg_tol = config.cg_tol;
    params.controls.cg_max_iterations = config.cg_max_iterations;
    params.controls.blowup_cap = config.blowup_cap;
    return params;
}

MacroParams macro_params_from_config(const Config& config, const HomogenizedTensor& tensor) {
    MacroParams params;
    params.resolution = config.macro_n > 0 ? config.macro_n : config.m * (config.n_eps > 0 ? config.n_eps : config.ladder.front());
    params.tensor = tensor;
    params.b = config.b;
    params.dt = config.dt;
    params.final_time = config.final_time;
    params.drift = drift_from_config(config);
    params.noise = noise_from_config(config);
    params.u0 = FieldExpr::parse(config.u0);
    params.init_mode = config.macro_mode == "theta_u0" ? MacroInitMode::ThetaU0
                                                       : MacroInitMode::U0OverTheta;
    params.master_seed = config.seed;
    params.controls.cg_tol = config.cg_tol;
    params.controls.cg_max_iterations = config.cg_max_iterations;
    params.controls.blowup_cap = config.blowup_cap;
    return params;
}

RecordSpec record_from_config(const Config& config) {
    RecordSpec record;
    if (config.sample_times.empty()) {
        for (int k = 1; k <= 5; ++k) record.sample_times.push_back(config.final_time * k / 5);
    } else {
        record.sample_times = config.sample_times;
    }
    record.modes = config.functionals;
    return record;
}

}  // namespace perfhom
