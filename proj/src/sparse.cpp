#include "perfhom/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "perfhom/errors.hpp"

namespace perfhom {

CsrMatrix CsrMatrix::from_triplets(int n, std::vector<std::tuple<int, int, double>> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    CsrMatrix m;
    m.n_ = n;
    m.row_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    m.cols_.reserve(triplets.size());
    m.values_.reserve(triplets.size());
    std::size_t k = 0;
    for (int row = 0; row < n; ++row) {
        while (k < triplets.size() && std::get<0>(triplets[k]) == row) {
            const int col = std::get<1>(triplets[k]);
            double v = 0.0;
            while (k < triplets.size() && std::get<0>(triplets[k]) == row &&
                   std::get<1>(triplets[k]) == col) {
                v += std::get<2>(triplets[k]);
                ++k;
            }
            m.cols_.push_back(col);
            m.values_.push_back(v);
        }
        m.row_offsets_[static_cast<std::size_t>(row) + 1] =
            static_cast<std::int64_t>(m.cols_.size());
    }
    return m;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (int row = 0; row < n_; ++row) {
        double acc = 0.0;
        for (std::int64_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) {
            acc += values_[static_cast<std::size_t>(k)] * x[cols_[static_cast<std::size_t>(k)]];
        }
        y[row] = acc;
    }
}

double CsrMatrix::coeff(int row, int col) const {
    for (std::int64_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) {
        if (cols_[static_cast<std::size_t>(k)] == col) return values_[static_cast<std::size_t>(k)];
    }
    return 0.0;
}

double CsrMatrix::asymmetry() const {
    double worst = 0.0;
    for (int row = 0; row < n_; ++row) {
        for (std::int64_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) {
            const int col = cols_[static_cast<std::size_t>(k)];
            worst = std::max(worst,
                             std::abs(values_[static_cast<std::size_t>(k)] - coeff(col, row)));
        }
    }
    return worst;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

void subtract_mean(std::span<double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

CgResult cg_impl(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                 const CgOptions& opts, bool meanfree) {
    const int n = a.rows();
    CgResult result;
    if (n == 0) {
        result.converged = true;
        return result;
    }

    std::vector<double> diag(static_cast<std::size_t>(n), 1.0);
    if (opts.jacobi) {
        for (int i = 0; i < n; ++i) {
            const double d = a.coeff(i, i);
            diag[static_cast<std::size_t>(i)] = d > 0.0 ? 1.0 / d : 1.0;
        }
    }

    std::vector<double> r(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n));
    std::vector<double> p(static_cast<std::size_t>(n));
    std::vector<double> ap(static_cast<std::size_t>(n));

    const double b_norm = norm2(b);
    if (b_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        result.converged = true;
        return result;
    }

    a.multiply(x, r);
    for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = b[i] - r[static_cast<std::size_t>(i)];
    if (meanfree) subtract_mean(r);

    auto apply_precond = [&]() {
        for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = diag[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
    };
    apply_precond();
    p = z;
    double rz = dot(r, z);

    const int max_it = opts.max_iterations > 0 ? opts.max_iterations : 10 * n;
    const double target = opts.tol * b_norm;

    double r_norm = norm2(r);
    if (r_norm <= target) {
        result.converged = true;
        result.relative_residual = r_norm / b_norm;
        return result;
    }

    for (int it = 0; it < max_it; ++it) {
        a.multiply(p, ap);
        const double pap = dot(p, ap);
        if (pap <= 0.0) {
            result.indefinite = true;
            result.iterations = it;
            result.relative_residual = norm2(r) / b_norm;
            return result;
        }
        const double alpha = rz / pap;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[static_cast<std::size_t>(i)];
            r[static_cast<std::size_t>(i)] -= alpha * ap[static_cast<std::size_t>(i)];
        }
        if (meanfree) subtract_mean(r);
        r_norm = norm2(r);
        result.iterations = it + 1;
        if (r_norm <= target) {
            result.converged = true;
            break;
        }
        apply_precond();
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * p[static_cast<std::size_t>(i)];
    }
    result.relative_residual = r_norm / b_norm;
    return result;
}

}  // namespace

CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                            const CgOptions& opts) {
    return cg_impl(a, b, x, opts, false);
}

CgResult conjugate_gradient_meanfree(const CsrMatrix& a, std::span<const double> b,
                                     std::span<double> x, const CgOptions& opts) {
    return cg_impl(a, b, x, opts, true);
}

}  // namespace perfhom
