#include "perfhom/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "perfhom/rng.hpp"

namespace perfhom {

std::vector<std::pair<int, int>> SpectralNoiseSpec::mode_indices() const {
    // Candidates up to k,l <= K cover the J smallest eigenvalues as long as
    // K*K >= J, since the modes with k,l <= ceil(sqrt(J)) already number J.
    const int K = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(modes)))) + 1;
    std::vector<std::pair<int, int>> candidates;
    candidates.reserve(static_cast<std::size_t>(K) * K);
    for (int k = 1; k <= K; ++k) {
        for (int l = 1; l <= K; ++l) candidates.emplace_back(k, l);
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        const int ea = a.first * a.first + a.second * a.second;
        const int eb = b.first * b.first + b.second * b.second;
        if (ea != eb) return ea < eb;
        return a < b;
    });
    candidates.resize(static_cast<std::size_t>(modes));
    return candidates;
}

double SpectralNoiseSpec::covariance(int rank) const {
    return q0 * std::pow(static_cast<double>(rank), -gamma);
}

double dirichlet_mode(int k, int l, double x, double y) {
    return 2.0 * std::sin(k * M_PI * x) * std::sin(l * M_PI * y);
}

NoiseIncrement sample_increment(const SpectralNoiseSpec& spec, std::uint64_t path_id,
                                int noise_id, std::uint64_t step_index, double dt,
                                std::uint64_t master_seed) {
    if (dt < 0.0) throw std::invalid_argument("sample_increment: dt must be nonnegative");
    NoiseIncrement inc;
    inc.dt = dt;
    inc.noise_id = noise_id;
    inc.dbeta.resize(static_cast<std::size_t>(spec.modes));
    GaussianStream stream(
        derive_stream_key(master_seed, path_id, static_cast<std::uint64_t>(noise_id), step_index));
    const double scale = std::sqrt(dt);
    for (double& b : inc.dbeta) b = scale * stream.next();
    return inc;
}

std::vector<double> evaluate_noise_field(const NoiseIncrement& inc, const SpectralNoiseSpec& spec,
                                         std::span<const double> xs, std::span<const double> ys,
                                         bool apply_multiplier) {
    const NoiseEvaluator eval(spec, inc.noise_id, xs, ys, apply_multiplier);
    std::vector<double> out(xs.size(), 0.0);
    eval.evaluate(inc, out);
    return out;
}

NoiseEvaluator::NoiseEvaluator(const SpectralNoiseSpec& spec, int noise_id,
                               std::span<const double> xs, std::span<const double> ys,
                               bool apply_multiplier) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("NoiseEvaluator: coordinate spans differ in length");
    }
    points_ = xs.size();
    modes_ = spec.modes;
    table_.assign(static_cast<std::size_t>(modes_) * points_, 0.0);
    const auto modes = spec.mode_indices();
    const FieldExpr& g = spec.multiplier(noise_id);
    for (int j = 0; j < modes_; ++j) {
        const double amp = std::sqrt(spec.covariance(j + 1));
        double* row = table_.data() + static_cast<std::size_t>(j) * points_;
        for (std::size_t p = 0; p < points_; ++p) {
            double v = amp * dirichlet_mode(modes[static_cast<std::size_t>(j)].first,
                                            modes[static_cast<std::size_t>(j)].second, xs[p], ys[p]);
            if (apply_multiplier) v *= g(xs[p], ys[p]);
            row[p] = v;
        }
    }
}

void NoiseEvaluator::evaluate(const NoiseIncrement& inc, std::span<double> out) const {
    if (out.size() != points_ || inc.dbeta.size() != static_cast<std::size_t>(modes_)) {
        throw std::invalid_argument("NoiseEvaluator: shape mismatch");
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < modes_; ++j) {
        const double b = inc.dbeta[static_cast<std::size_t>(j)];
        if (b == 0.0) continue;
        const double* row = table_.data() + static_cast<std::size_t>(j) * points_;
        for (std::size_t p = 0; p < points_; ++p) out[p] += row[p] * b;
    }
}

TraceReport check_trace_condition(const SpectralNoiseSpec& spec, int noise_id,
                                  int quadrature_intervals) {
    TraceReport report;
    report.modes = spec.modes;
    report.gamma = spec.gamma;
    report.convergent = spec.gamma > 1.0;

    const int n = quadrature_intervals;
    const double h = 1.0 / n;
    const FieldExpr& g = spec.multiplier(noise_id);
    const auto modes = spec.mode_indices();
    double total = 0.0;
    for (int j = 0; j < spec.modes; ++j) {
        double norm_sq = 0.0;
        for (int jy = 1; jy < n; ++jy) {
            for (int jx = 1; jx < n; ++jx) {
                const double x = jx * h;
                const double y = jy * h;
                const double v = g(x, y) * dirichlet_mode(modes[static_cast<std::size_t>(j)].first,
                                                          modes[static_cast<std::size_t>(j)].second,
                                                          x, y);
                norm_sq += v * v;
            }
        }
        total += spec.covariance(j + 1) * norm_sq * h * h;
    }
    report.partial_sum = total;
    return report;
}

}  // namespace perfhom
