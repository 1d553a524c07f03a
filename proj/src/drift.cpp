#include "perfhom/drift.hpp"

#include <cmath>
#include <stdexcept>

#include "perfhom/errors.hpp"

namespace perfhom {

double DriftSpec::HTerm::operator()(double u) const {
    return form == HForm::LinearU ? coefficient * u : coefficient * std::sin(u);
}

void DriftSpec::validate() const {
    switch (kind) {
        case Kind::Polynomial: {
            if (!(poly_p > 0.0)) throw ConfigError("polynomial drift requires p > 0");
            // Sampled positivity bound for the coefficient field.
            double lo = poly_a(0.0, 0.0);
            for (int j = 0; j <= 16; ++j) {
                for (int i = 0; i <= 16; ++i) lo = std::min(lo, poly_a(i / 16.0, j / 16.0));
            }
            if (!(lo > 0.0)) {
                throw ConfigError("polynomial drift coefficient a(x) must be positive on D");
            }
            break;
        }
        case Kind::MonotoneSublinear:
            if (monotone_s < 0.0) throw ConfigError("monotone drift requires s >= 0");
            break;
        default: break;
    }
}

namespace {

double state_drift(const DriftSpec& spec, double x, double y, double u) {
    switch (spec.kind) {
        case DriftSpec::Kind::Forcing: return spec.forcing(x, y);
        case DriftSpec::Kind::Lipschitz:
            return spec.lipschitz_c * u + spec.lipschitz_d * std::sin(u);
        case DriftSpec::Kind::Polynomial: {
            const double a = spec.poly_a(x, y);
            const double mag =
                spec.poly_p == 2.0 ? u * u : std::pow(std::abs(u), spec.poly_p);
            return -a * mag * u;
        }
        case DriftSpec::Kind::MonotoneSublinear: return -spec.monotone_s * std::cbrt(u);
        case DriftSpec::Kind::Gradient: break;
    }
    return 0.0;
}

void require_finite(std::span<const double> v, const char* what) {
    for (const double x : v) {
        if (!std::isfinite(x)) throw NumericalError(std::string("non-finite ") + what);
    }
}

}  // namespace

double eval_drift_point(const DriftSpec& spec, double /*t*/, double x, double y, double u,
                        double grad_x, double grad_y) {
    if (spec.kind == DriftSpec::Kind::Gradient) {
        return spec.h1(u) * grad_x + spec.h2(u) * grad_y;
    }
    return state_drift(spec, x, y, u);
}

std::vector<double> eval_drift(const DriftSpec& spec, double t, std::span<const double> xs,
                               std::span<const double> ys, std::span<const double> u,
                               std::span<const double> grad_x, std::span<const double> grad_y) {
    if (spec.needs_gradient() && (grad_x.size() != u.size() || grad_y.size() != u.size())) {
        throw std::invalid_argument("gradient drift needs grad_u of matching length");
    }
    require_finite(u, "state");
    if (spec.needs_gradient()) {
        require_finite(grad_x, "gradient");
        require_finite(grad_y, "gradient");
    }
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = eval_drift_point(spec, t, xs[i], ys[i], u[i],
                                  spec.needs_gradient() ? grad_x[i] : 0.0,
                                  spec.needs_gradient() ? grad_y[i] : 0.0);
    }
    return out;
}

double eval_effective_drift_point(const DriftSpec& spec, double theta, const Matrix2& m, double t,
                                  double x, double y, double u, double grad_x, double grad_y) {
    if (spec.kind == DriftSpec::Kind::Gradient) {
        const double mx = m[0][0] * grad_x + m[0][1] * grad_y;
        const double my = m[1][0] * grad_x + m[1][1] * grad_y;
        return spec.h1(u) * mx + spec.h2(u) * my;
    }
    return theta * eval_drift_point(spec, t, x, y, u, 0.0, 0.0);
}

std::vector<double> eval_effective_drift(const DriftSpec& spec, double theta, const Matrix2& m,
                                         double t, std::span<const double> xs,
                                         std::span<const double> ys, std::span<const double> u,
                                         std::span<const double> grad_x,
                                         std::span<const double> grad_y) {
    if (spec.needs_gradient() && (grad_x.size() != u.size() || grad_y.size() != u.size())) {
        throw std::invalid_argument("gradient drift needs grad_u of matching length");
    }
    require_finite(u, "state");
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = eval_effective_drift_point(spec, theta, m, t, xs[i], ys[i], u[i],
                                            spec.needs_gradient() ? grad_x[i] : 0.0,
                                            spec.needs_gradient() ? grad_y[i] : 0.0);
    }
    return out;
}

double cell_average_fstar_oracle(const std::array<double, 2>& h_values,
                                 const std::array<double, 2>& grad_u, const CorrectorField& cx,
                                 const CorrectorField& cy, const CellGrid& grid, double theta) {
    const double hc = grid.spacing;
    const std::array<const std::vector<double>*, 2> phi = {&cx.phi, &cy.phi};
    std::array<double, 2> integral = {0.0, 0.0};
    for_each_cell_edge(grid, [&](int na, int nb, int dir) {
        // Component `dir` of grad U + sum_i (d_i U) grad phi_i on this edge.
        double v = grad_u[static_cast<std::size_t>(dir)];
        for (int i = 0; i < 2; ++i) {
            const double dphi = (*phi[i])[static_cast<std::size_t>(nb)] -
                                (*phi[i])[static_cast<std::size_t>(na)];
            v += grad_u[static_cast<std::size_t>(i)] * dphi / hc;
        }
        integral[static_cast<std::size_t>(dir)] += hc * hc * v;
    });
    return (h_values[0] * integral[0] + h_values[1] * integral[1]) / theta;
}

}  // namespace perfhom
