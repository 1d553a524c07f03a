#pragma once

#include <array>
#include <span>
#include <vector>

#include "perfhom/cell_solver.hpp"
#include "perfhom/field_expr.hpp"

namespace perfhom {

/// Drift catalog for the bulk equation. Signs are part of the catalog: the
/// polynomial and monotone entries are dissipative as written, pairing
/// negatively with the state.
///
///   Forcing            f(x)                      state-independent
///   Lipschitz          c u + d sin(u)            Lipschitz constant |c| + |d|
///   Polynomial         -a(x) |u|^p u             0 < a_lo <= a(x), p > 0
///   MonotoneSublinear  -s cbrt(u)                monotone, sublinear, not Lipschitz at 0
///   Gradient           h(x,u) . grad u           h_i = c u or c sin(u)
struct DriftSpec {
    enum class Kind { Forcing, Lipschitz, Polynomial, MonotoneSublinear, Gradient };
    enum class HForm { LinearU, SinU };

    struct HTerm {
        HForm form = HForm::LinearU;
        double coefficient = 0.0;

        double operator()(double u) const;
    };

    Kind kind = Kind::Forcing;
    FieldExpr forcing = FieldExpr::constant(0.0);
    double lipschitz_c = 0.0;
    double lipschitz_d = 0.0;
    FieldExpr poly_a = FieldExpr::constant(1.0);
    double poly_p = 2.0;
    double monotone_s = 1.0;
    HTerm h1;
    HTerm h2;

    bool needs_gradient() const { return kind == Kind::Gradient; }
    bool is_zero() const { return kind == Kind::Forcing && forcing.is_zero(); }

    void validate() const;  // throws ConfigError on out-of-range parameters
};

/// Pointwise drift value. Gradient components are ignored unless the variant
/// needs them.
double eval_drift_point(const DriftSpec& spec, double t, double x, double y, double u,
                        double grad_x, double grad_y);

/// Vectorized evaluation with input checking: throws std::invalid_argument when
/// the Gradient variant is missing its gradient and NumericalError on
/// non-finite inputs.
std::vector<double> eval_drift(const DriftSpec& spec, double t, std::span<const double> xs,
                               std::span<const double> ys, std::span<const double> u,
                               std::span<const double> grad_x = {},
                               std::span<const double> grad_y = {});

/// Effective drift of the homogenized equation: theta * f(t,x,U) for the
/// state-only variants, h(t,x,U) . (M grad U) with M = A*/theta for the
/// gradient variant.
double eval_effective_drift_point(const DriftSpec& spec, double theta, const Matrix2& m, double t,
                                  double x, double y, double u, double grad_x, double grad_y);

std::vector<double> eval_effective_drift(const DriftSpec& spec, double theta, const Matrix2& m,
                                         double t, std::span<const double> xs,
                                         std::span<const double> ys, std::span<const double> u,
                                         std::span<const double> grad_x = {},
                                         std::span<const double> grad_y = {});

/// Independent quadrature route for the gradient-case effective drift: the
/// cell average of h . theta^-1 [grad U + sum_i (d_i U) grad phi_i] accumulated
/// edge by edge over the fluid part of the cell. Agreement with
/// h . (theta^-1 A* grad U) is the identity the closed form rests on.
double cell_average_fstar_oracle(const std::array<double, 2>& h_values,
                                 const std::array<double, 2>& grad_u, const CorrectorField& cx,
                                 const CorrectorField& cy, const CellGrid& grid, double theta);

}  // namespace perfhom
