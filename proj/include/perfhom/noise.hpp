#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "perfhom/field_expr.hpp"

namespace perfhom {

/// Truncated Q-Wiener specification in the Dirichlet sine basis of the unit
/// square: J retained eigenpairs ordered by increasing eigenvalue (ties broken
/// lexicographically in (k,l)), diagonal covariance q_j = q0 * j^-gamma, and
/// bounded multiplier fields g1 (bulk noise) and g2 (boundary noise).
struct SpectralNoiseSpec {
    int modes = 16;      // J
    double gamma = 2.0;  // > 1 gives a trace-class covariance
    double q0 = 0.1;
    FieldExpr g1 = FieldExpr::constant(1.0);
    FieldExpr g2 = FieldExpr::constant(1.0);

    /// Ordered (k,l) pairs of the retained modes.
    std::vector<std::pair<int, int>> mode_indices() const;

    /// q_j for the 1-based mode rank j.
    double covariance(int rank) const;

    const FieldExpr& multiplier(int noise_id) const { return noise_id == 1 ? g1 : g2; }
};

/// One step's worth of independent N(0, dt) mode increments for one noise.
struct NoiseIncrement {
    std::vector<double> dbeta;
    double dt = 0.0;
    int noise_id = 1;  // 1: bulk W1, 2: boundary W2
};

/// e_{k,l}(x) = 2 sin(k pi x1) sin(l pi x2), the L2(D)-orthonormal Dirichlet
/// eigenfunctions of -Laplace on the unit square.
double dirichlet_mode(int k, int l, double x, double y);

/// Draws the increment addressed by (master_seed, path_id, noise_id, step_index).
/// Pure function of its arguments; distinct addresses give independent streams.
NoiseIncrement sample_increment(const SpectralNoiseSpec& spec, std::uint64_t path_id,
                                int noise_id, std::uint64_t step_index, double dt,
                                std::uint64_t master_seed);

/// field(x) = sum_j sqrt(q_j) e_j(x) dbeta_j, multiplied pointwise by the g
/// field of the increment's noise when apply_multiplier is set.
std::vector<double> evaluate_noise_field(const NoiseIncrement& inc, const SpectralNoiseSpec& spec,
                                         std::span<const double> xs, std::span<const double> ys,
                                         bool apply_multiplier);

/// Precomputed mode table for repeated evaluation on a fixed point set; this is
/// what the time steppers use. Accumulates sqrt(q_j) e_j(x) (times g if asked)
/// once, so a step costs J fused multiply-adds per point.
class NoiseEvaluator {
public:
    NoiseEvaluator(const SpectralNoiseSpec& spec, int noise_id, std::span<const double> xs,
                   std::span<const double> ys, bool apply_multiplier);

    /// out[p] = sum_j table[j][p] * dbeta[j]
    void evaluate(const NoiseIncrement& inc, std::span<double> out) const;

    std::size_t point_count() const { return points_; }

private:
    std::size_t points_ = 0;
    int modes_ = 0;
    std::vector<double> table_;  // modes_ x points_, row-major
};

struct TraceReport {
    double partial_sum = 0.0;  // sum_{j<=J} q_j ||g e_j||^2 by grid quadrature
    bool convergent = false;   // gamma > 1
    int modes = 0;
    double gamma = 0.0;
};

/// Trace-class diagnostic for the chosen noise. Divergent tails are reported,
/// not thrown.
TraceReport check_trace_condition(const SpectralNoiseSpec& spec, int noise_id,
                                  int quadrature_intervals = 128);

}  // namespace perfhom
