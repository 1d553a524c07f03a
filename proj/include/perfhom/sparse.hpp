#pragma once

#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

namespace perfhom {

/// Compressed sparse row matrix, square, assembled from (row,col,value) triplets.
/// Duplicate triplets are summed. Column indices within a row are sorted, so
/// assembly order does not change the stored matrix or any product computed from it.
class CsrMatrix {
public:
    CsrMatrix() = default;

    static CsrMatrix from_triplets(int n, std::vector<std::tuple<int, int, double>> triplets);

    int rows() const { return n_; }
    std::size_t nonzeros() const { return values_.size(); }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;

    double coeff(int row, int col) const;

    /// max_{i,j} |A_ij - A_ji|, by direct lookup.
    double asymmetry() const;

    std::span<const std::int64_t> row_offsets() const { return row_offsets_; }
    std::span<const int> cols() const { return cols_; }
    std::span<const double> values() const { return values_; }

private:
    int n_ = 0;
    std::vector<std::int64_t> row_offsets_;
    std::vector<int> cols_;
    std::vector<double> values_;
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    bool indefinite = false;  // a p'Ap <= 0 was encountered
};

struct CgOptions {
    double tol = 1e-10;      // relative to ||b||
    int max_iterations = 0;  // 0: 10 * n
    bool jacobi = true;      // diagonal preconditioning
};

/// Preconditioned conjugate gradients for SPD systems. `x` holds the initial
/// guess on entry (warm starts) and the solution on exit.
CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b,
                            std::span<double> x, const CgOptions& opts = {});

/// CG for the singular-consistent SPD system arising from pure-Neumann/periodic
/// operators whose null space is spanned by the constant vector. The residual is
/// kept orthogonal to the null space by mean subtraction every iteration; the
/// caller picks the representative afterwards.
CgResult conjugate_gradient_meanfree(const CsrMatrix& a, std::span<const double> b,
                                     std::span<double> x, const CgOptions& opts = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace perfhom
