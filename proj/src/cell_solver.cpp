#include "perfhom/cell_solver.hpp"

#include <cmath>
#include <tuple>

#include "perfhom/errors.hpp"
#include "perfhom/sparse.hpp"

namespace perfhom {

std::array<double, 2> HomogenizedTensor::eigenvalues() const {
    const double tr = a[0][0] + a[1][1];
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return {tr / 2.0 - disc, tr / 2.0 + disc};
}

CorrectorField solve_corrector(const CellGrid& grid, int direction, double tol) {
    if (direction != 0 && direction != 1) {
        throw std::invalid_argument("corrector direction must be 0 or 1");
    }
    if (!(tol > 0.0)) throw std::invalid_argument("corrector tolerance must be positive");

    const int m = grid.m;
    const double h = grid.spacing;
    const std::size_t node_count = static_cast<std::size_t>(m) * m;

    // Unknowns: every node outside the hole interior.
    std::vector<int> dof(node_count, -1);
    std::vector<int> nodes;
    for (std::size_t k = 0; k < node_count; ++k) {
        if (grid.node_class[k] != NodeClass::HoleInterior) {
            dof[k] = static_cast<int>(nodes.size());
            nodes.push_back(static_cast<int>(k));
        }
    }
    const int n = static_cast<int>(nodes.size());

    std::vector<std::tuple<int, int, double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n) * 5);
    std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
    for_each_cell_edge(grid, [&](int na, int nb, int dir) {
        const int a = dof[static_cast<std::size_t>(na)];
        const int b = dof[static_cast<std::size_t>(nb)];
        triplets.emplace_back(a, a, 1.0);
        triplets.emplace_back(b, b, 1.0);
        triplets.emplace_back(a, b, -1.0);
        triplets.emplace_back(b, a, -1.0);
        if (dir == direction) {
            rhs[static_cast<std::size_t>(a)] += h;
            rhs[static_cast<std::size_t>(b)] -= h;
        }
    });
    const CsrMatrix laplacian = CsrMatrix::from_triplets(n, std::move(triplets));

    std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
    CgOptions opts;
    opts.tol = tol;
    const CgResult cg = conjugate_gradient_meanfree(laplacian, rhs, phi, opts);
    if (cg.indefinite) {
        throw NumericalError("cell problem produced an indefinite system; geometry bug");
    }
    const bool trivial = norm2(rhs) == 0.0;
    if (!trivial && !cg.converged) {
        throw NumericalError("corrector CG did not converge: relative residual " +
                             std::to_string(cg.relative_residual) + " after " +
                             std::to_string(cg.iterations) + " iterations");
    }

    // Fix the representative: arithmetic mean zero over fluid nodes.
    double mean = 0.0;
    for (std::size_t k = 0; k < node_count; ++k) {
        if (grid.node_class[k] == NodeClass::Fluid) mean += phi[static_cast<std::size_t>(dof[k])];
    }
    mean /= grid.fluid_count;

    CorrectorField field;
    field.direction = direction;
    field.phi.assign(node_count, 0.0);
    for (std::size_t k = 0; k < node_count; ++k) {
        if (dof[k] >= 0) field.phi[k] = phi[static_cast<std::size_t>(dof[k])] - mean;
    }
    field.residual = cg.relative_residual;
    field.iterations = cg.iterations;
    return field;
}

HomogenizedTensor homogenized_tensor(const CorrectorField& cx, const CorrectorField& cy,
                                     const CellGrid& grid, double tol) {
    if (cx.direction != 0 || cy.direction != 1) {
        throw std::invalid_argument("homogenized_tensor expects correctors for x then y");
    }
    const double h = grid.spacing;
    const std::array<const std::vector<double>*, 2> phi = {&cx.phi, &cy.phi};

    Matrix2 a{};
    for_each_cell_edge(grid, [&](int na, int nb, int dir) {
        double g[2];
        for (int i = 0; i < 2; ++i) {
            const double dphi = (*phi[i])[static_cast<std::size_t>(nb)] -
                                (*phi[i])[static_cast<std::size_t>(na)];
            g[i] = (dir == i ? h : 0.0) + dphi;
        }
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) a[i][j] += g[i] * g[j];
        }
    });

    HomogenizedTensor tensor;
    tensor.a = a;
    tensor.theta = grid.theta;
    tensor.lambda = grid.lambda;
    tensor.rho = grid.spec.hole_fraction;
    tensor.m = grid.m;
    tensor.tol = tol;
    tensor.iterations = {cx.iterations, cy.iterations};
    tensor.residuals = {cx.residual, cy.residual};

    if (tensor.eigenvalues()[0] <= 0.0) {
        throw NumericalError("homogenized tensor is not positive definite");
    }
    return tensor;
}

HomogenizedTensor compute_homogenized_tensor(const CellGrid& grid, double tol) {
    const CorrectorField cx = solve_corrector(grid, 0, tol);
    const CorrectorField cy = solve_corrector(grid, 1, tol);
    return homogenized_tensor(cx, cy, grid, tol);
}

Matrix2 effective_gradient_matrix(const HomogenizedTensor& tensor) {
    Matrix2 m{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) m[i][j] = tensor.a[i][j] / tensor.theta;
    }
    return m;
}

Matrix2 corrector_product_matrix(const CorrectorField& cx, const CorrectorField& cy,
                                 const CellGrid& grid) {
    Matrix2 p{};
    const int m = grid.m;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const std::size_t k = static_cast<std::size_t>(grid.index(i, j));
            const double w = grid.material_weight[k];
            if (w == 0.0) continue;
            const double wx = i * grid.spacing + cx.phi[k];
            const double wy = j * grid.spacing + cy.phi[k];
            p[0][0] += w * wx * wx;
            p[0][1] += w * wx * wy;
            p[1][0] += w * wy * wx;
            p[1][1] += w * wy * wy;
        }
    }
    return p;
}

HomogenizedTensor identity_tensor() {
    HomogenizedTensor t;
    t.a = {{{1.0, 0.0}, {0.0, 1.0}}};
    t.theta = 1.0;
    t.lambda = 0.0;
    t.rho = 0.0;
    t.m = 0;
    return t;
}

}  // namespace perfhom
