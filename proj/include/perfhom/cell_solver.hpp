#pragma once

#include <array>
#include <span>
#include <vector>

#include "perfhom/geometry.hpp"

namespace perfhom {

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Periodic fluctuation phi_i = w_i - y_i of the cell corrector in direction i,
/// as values on the cell grid (zero at hole-interior nodes), with arithmetic
/// mean zero over the fluid nodes.
struct CorrectorField {
    int direction = 0;  // 0: x, 1: y
    std::vector<double> phi;
    double residual = 0.0;
    int iterations = 0;
};

/// Effective diffusion matrix assembled from corrector gradient energies,
/// together with the cell constants and solve provenance.
struct HomogenizedTensor {
    Matrix2 a{};      // A*, symmetric positive definite
    double theta = 1.0;
    double lambda = 0.0;

    double rho = 0.0;
    int m = 0;
    double tol = 0.0;
    std::array<int, 2> iterations{};
    std::array<double, 2> residuals{};

    std::array<double, 2> eigenvalues() const;
    double coercivity() const { return eigenvalues()[0]; }
};

/// Visits every kept edge of the periodic cell grid. An edge is kept when
/// neither endpoint lies in the hole interior; dropping the others is the
/// natural Neumann condition on the hole boundary. The callback receives
/// (node_a, node_b, direction) with node_b the +direction neighbor of node_a
/// (periodic wraparound).
template <class F>
void for_each_cell_edge(const CellGrid& grid, F&& f) {
    const int m = grid.m;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            if (grid.at(i, j) == NodeClass::HoleInterior) continue;
            if (grid.at(i + 1, j) != NodeClass::HoleInterior) {
                f(grid.index(i, j), grid.index(i + 1, j), 0);
            }
            if (grid.at(i, j + 1) != NodeClass::HoleInterior) {
                f(grid.index(i, j), grid.index(i, j + 1), 1);
            }
        }
    }
}

/// Solves the periodic cell problem for the corrector fluctuation in the given
/// direction by conjugate gradients on the singular-consistent dropped-edge
/// Laplacian, to the given relative residual.
CorrectorField solve_corrector(const CellGrid& grid, int direction, double tol = 1e-10);

/// A*_ij = (1/|Y|) sum over kept edges of (e_i + grad phi_i) . (e_j + grad phi_j)
/// in the edge-based energy form.
HomogenizedTensor homogenized_tensor(const CorrectorField& cx, const CorrectorField& cy,
                                     const CellGrid& grid, double tol);

/// Both corrector solves plus assembly.
HomogenizedTensor compute_homogenized_tensor(const CellGrid& grid, double tol = 1e-10);

/// M = A* / theta, the matrix applied to grad U by the effective
/// gradient-drift average.
Matrix2 effective_gradient_matrix(const HomogenizedTensor& tensor);

/// Zeroth-order product form (1/|Y|) int_{Y*} w_i w_j dy with w_i = y_i + phi_i,
/// by material quadrature. Reported for reference next to the energy form; not
/// used by any solver.
Matrix2 corrector_product_matrix(const CorrectorField& cx, const CorrectorField& cy,
                                 const CellGrid& grid);

HomogenizedTensor identity_tensor();

}  // namespace perfhom
