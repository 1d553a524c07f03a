#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "perfhom/noise.hpp"
#include "perfhom/rng.hpp"

using namespace perfhom;

TEST_CASE("dirichlet mode values") {
    CHECK(dirichlet_mode(1, 1, 0.5, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(dirichlet_mode(3, 2, 0.0, 0.7) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(dirichlet_mode(3, 2, 0.7, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("discrete orthonormality of the sine basis") {
    const int n = 64;
    const double h = 1.0 / n;
    double cross = 0.0, self = 0.0;
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const double x = i * h, y = j * h;
            cross += dirichlet_mode(1, 1, x, y) * dirichlet_mode(2, 1, x, y) * h * h;
            self += dirichlet_mode(1, 1, x, y) * dirichlet_mode(1, 1, x, y) * h * h;
        }
    }
    CHECK(std::abs(cross) < 1e-12);
    CHECK(self == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mode ordering is by eigenvalue with lexicographic ties") {
    SpectralNoiseSpec spec;
    spec.modes = 8;
    const auto modes = spec.mode_indices();
    REQUIRE(modes.size() == 8);
    CHECK(modes[0] == std::make_pair(1, 1));
    CHECK(modes[1] == std::make_pair(1, 2));  // eigenvalue 5, before (2,1)
    CHECK(modes[2] == std::make_pair(2, 1));
    CHECK(modes[3] == std::make_pair(2, 2));
    for (std::size_t i = 1; i < modes.size(); ++i) {
        const int ep = modes[i - 1].first * modes[i - 1].first + modes[i - 1].second * modes[i - 1].second;
        const int ec = modes[i].first * modes[i].first + modes[i].second * modes[i].second;
        CHECK(ep <= ec);
    }
}

TEST_CASE("zero dt gives the zero increment") {
    SpectralNoiseSpec spec;
    const NoiseIncrement inc = sample_increment(spec, 3, 1, 7, 0.0, 99);
    for (const double b : inc.dbeta) CHECK(b == 0.0);
}

TEST_CASE("increments are reproducible bit for bit") {
    SpectralNoiseSpec spec;
    const NoiseIncrement a = sample_increment(spec, 11, 2, 400, 1e-3, 1234);
    const NoiseIncrement b = sample_increment(spec, 11, 2, 400, 1e-3, 1234);
    REQUIRE(a.dbeta.size() == b.dbeta.size());
    for (std::size_t i = 0; i < a.dbeta.size(); ++i) CHECK(a.dbeta[i] == b.dbeta[i]);
    const NoiseIncrement c = sample_increment(spec, 12, 2, 400, 1e-3, 1234);
    bool all_equal = true;
    for (std::size_t i = 0; i < a.dbeta.size(); ++i) all_equal &= a.dbeta[i] == c.dbeta[i];
    CHECK(!all_equal);
}

TEST_CASE("increment variance matches dt") {
    SpectralNoiseSpec spec;
    spec.modes = 1;
    const double dt = 0.01;
    const int samples = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < samples; ++s) {
        const NoiseIncrement inc = sample_increment(spec, 0, 1, static_cast<std::uint64_t>(s), dt, 5);
        sum += inc.dbeta[0];
        sum_sq += inc.dbeta[0] * inc.dbeta[0];
    }
    const double mean = sum / samples;
    const double var = sum_sq / samples - mean * mean;
    const double se = dt * std::sqrt(2.0 / (samples - 1));
    CHECK(std::abs(var - dt) < 3.0 * se);
}

TEST_CASE("streams of the two noises are uncorrelated") {
    SpectralNoiseSpec spec;
    spec.modes = 1;
    const int steps = 10000;
    double s1 = 0.0, s2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
    for (int s = 0; s < steps; ++s) {
        const double a = sample_increment(spec, 0, 1, static_cast<std::uint64_t>(s), 1.0, 17).dbeta[0];
        const double b = sample_increment(spec, 0, 2, static_cast<std::uint64_t>(s), 1.0, 17).dbeta[0];
        s1 += a;
        s2 += b;
        s11 += a * a;
        s22 += b * b;
        s12 += a * b;
    }
    const double corr = (s12 / steps - s1 / steps * s2 / steps) /
                        std::sqrt((s11 / steps - s1 / steps * s1 / steps) *
                                  (s22 / steps - s2 / steps * s2 / steps));
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(steps)));
}

TEST_CASE("single-mode field reproduces the mode exactly") {
    SpectralNoiseSpec spec;
    spec.modes = 1;
    spec.q0 = 1.0;
    NoiseIncrement inc;
    inc.noise_id = 1;
    inc.dt = 1.0;
    inc.dbeta = {1.0};
    const std::vector<double> xs = {0.5, 0.25, 0.1};
    const std::vector<double> ys = {0.5, 0.75, 0.9};
    const std::vector<double> field = evaluate_noise_field(inc, spec, xs, ys, false);
    for (std::size_t p = 0; p < xs.size(); ++p) {
        CHECK(field[p] == doctest::Approx(dirichlet_mode(1, 1, xs[p], ys[p])).epsilon(1e-15));
    }
}

TEST_CASE("zero increment gives the zero field") {
    SpectralNoiseSpec spec;
    NoiseIncrement inc;
    inc.noise_id = 2;
    inc.dbeta.assign(static_cast<std::size_t>(spec.modes), 0.0);
    const std::vector<double> xs = {0.3};
    const std::vector<double> ys = {0.6};
    CHECK(evaluate_noise_field(inc, spec, xs, ys, true)[0] == 0.0);
}

TEST_CASE("Parseval on the grid") {
    SpectralNoiseSpec spec;
    spec.modes = 16;
    spec.q0 = 0.1;
    const NoiseIncrement inc = sample_increment(spec, 4, 1, 9, 0.01, 31);
    const int n = 128;
    const double h = 1.0 / n;
    std::vector<double> xs, ys;
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            xs.push_back(i * h);
            ys.push_back(j * h);
        }
    }
    const std::vector<double> field = evaluate_noise_field(inc, spec, xs, ys, false);
    double norm_sq = 0.0;
    for (const double v : field) norm_sq += v * v * h * h;
    double expected = 0.0;
    for (int j = 0; j < spec.modes; ++j) {
        expected += spec.covariance(j + 1) * inc.dbeta[static_cast<std::size_t>(j)] *
                    inc.dbeta[static_cast<std::size_t>(j)];
    }
    CHECK(norm_sq == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("trace report for the convergent catalog case") {
    SpectralNoiseSpec spec;
    spec.modes = 100;
    spec.gamma = 2.0;
    spec.q0 = 1.0;
    const TraceReport report = check_trace_condition(spec, 1);
    double partial = 0.0;
    for (int j = 1; j <= 100; ++j) partial += 1.0 / (static_cast<double>(j) * j);
    CHECK(report.convergent);
    CHECK(report.partial_sum == doctest::Approx(partial).epsilon(1e-9));
    CHECK(report.partial_sum < M_PI * M_PI / 6.0);
}

TEST_CASE("trace report edge cases") {
    SpectralNoiseSpec zero;
    zero.q0 = 0.0;
    CHECK(check_trace_condition(zero, 2).partial_sum == 0.0);

    SpectralNoiseSpec divergent;
    divergent.gamma = 0.5;
    const TraceReport report = check_trace_condition(divergent, 1);
    CHECK(!report.convergent);
}

TEST_CASE("evaluator matches the free function with multipliers") {
    SpectralNoiseSpec spec;
    spec.g2 = FieldExpr::sines(0.5);
    const NoiseIncrement inc = sample_increment(spec, 1, 2, 2, 0.25, 77);
    const std::vector<double> xs = {0.2, 0.4, 0.9};
    const std::vector<double> ys = {0.1, 0.5, 0.3};
    const NoiseEvaluator eval(spec, 2, xs, ys, true);
    std::vector<double> out(xs.size());
    eval.evaluate(inc, out);
    const std::vector<double> direct = evaluate_noise_field(inc, spec, xs, ys, true);
    for (std::size_t p = 0; p < xs.size(); ++p) {
        CHECK(out[p] == doctest::Approx(direct[p]).epsilon(1e-15));
    }
}
