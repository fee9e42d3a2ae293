#pragma once

// Returns, covariance and correlation matrices: data model, sample
// estimators, rescaled Frobenius norms and a deterministic symmetric
// eigendecomposition.

#include <bahc/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace bahc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Role names for dense symmetric n x n matrices. They document intent at API
// boundaries; the invariants are enforced by the functions producing them.
using SymmetricMatrix = Matrix;
using CovarianceMatrix = Matrix;
using CorrelationMatrix = Matrix;

/// n objects (rows) by t features (columns) of finite observations.
class ReturnsMatrix {
public:
    explicit ReturnsMatrix(Matrix data, std::vector<std::string> labels = {})
        : data_(std::move(data)), labels_(std::move(labels)) {
        if (data_.rows() < 2 || data_.cols() < 2) {
            throw DataError("returns matrix needs at least 2 objects and 2 features, got " +
                            std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
        }
        if (!data_.allFinite()) {
            throw DataError("returns matrix contains missing or non-finite values");
        }
        if (labels_.empty()) {
            labels_.reserve(static_cast<std::size_t>(data_.rows()));
            for (Index i = 0; i < data_.rows(); ++i) {
                labels_.push_back(std::to_string(i));
            }
        } else if (static_cast<Index>(labels_.size()) != data_.rows()) {
            throw DataError("label count does not match the number of rows");
        }
    }

    [[nodiscard]] const Matrix& data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] Index objects() const noexcept { return data_.rows(); }
    [[nodiscard]] Index features() const noexcept { return data_.cols(); }

private:
    Matrix data_;
    std::vector<std::string> labels_;
};

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
struct EigenDecomposition {
    Vector eigenvalues;
    Matrix eigenvectors;

    [[nodiscard]] Index size() const noexcept { return eigenvalues.size(); }
    [[nodiscard]] Matrix reconstruct() const {
        return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
    }
};

namespace detail {

/// Copies the lower triangle onto the upper one so that m(i,j) == m(j,i) bitwise.
inline void mirror_lower(Matrix& m) {
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < j; ++i) {
            m(i, j) = m(j, i);
        }
    }
}

inline bool row_is_constant(const Matrix& data, Index row) {
    const auto r = data.row(row);
    return r.maxCoeff() == r.minCoeff();
}

/// Population (divisor t) covariance of the rows of `data`, demeaned per row.
inline Matrix covariance_of(const Matrix& data) {
    const Vector mean = data.rowwise().mean();
    const Matrix centered = data.colwise() - mean;
    Matrix cov = Matrix::Zero(data.rows(), data.rows());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / static_cast<double>(data.cols()));
    mirror_lower(cov);
    return cov;
}

/// Correlation from a covariance whose diagonal is known to be positive.
inline Matrix normalize_by_diagonal(const Matrix& cov) {
    const Vector inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
    Matrix corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    for (Index j = 0; j < corr.cols(); ++j) {
        for (Index i = j + 1; i < corr.rows(); ++i) {
            corr(i, j) = std::clamp(corr(i, j), -1.0, 1.0);
        }
        corr(j, j) = 1.0;
    }
    mirror_lower(corr);
    return corr;
}

inline Matrix correlation_of(const Matrix& data) {
    for (Index i = 0; i < data.rows(); ++i) {
        if (row_is_constant(data, i)) {
            throw ZeroVarianceError(static_cast<std::size_t>(i));
        }
    }
    const Matrix cov = covariance_of(data);
    for (Index i = 0; i < cov.rows(); ++i) {
        if (!(cov(i, i) > 0.0)) {
            throw ZeroVarianceError(static_cast<std::size_t>(i));
        }
    }
    return normalize_by_diagonal(cov);
}

}  // namespace detail

/// Sample covariance with divisor t, not t - 1. The estimator is biased by a
/// factor (t - 1)/t; the filters below are built on this convention.
inline CovarianceMatrix sample_covariance(const ReturnsMatrix& returns) {
    return detail::covariance_of(returns.data());
}

/// Pearson correlation; throws ZeroVarianceError naming the first constant row.
inline CorrelationMatrix sample_correlation(const ReturnsMatrix& returns) {
    return detail::correlation_of(returns.data());
}

/// c_ij / sqrt(c_ii c_jj) with an exactly unit diagonal.
inline CorrelationMatrix renormalize_correlation(const SymmetricMatrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        if (!(m(i, i) > 0.0)) {
            throw NonpositiveDiagonalError(static_cast<std::size_t>(i));
        }
    }
    const Vector inv_sd = m.diagonal().cwiseSqrt().cwiseInverse();
    Matrix out = inv_sd.asDiagonal() * m * inv_sd.asDiagonal();
    out.diagonal().setOnes();
    detail::mirror_lower(out);
    return out;
}

/// Tolerance for PSD checks, scaled by the mean diagonal entry.
inline double psd_tolerance(const SymmetricMatrix& m, double relative = 1e-10) {
    return relative * std::abs(m.trace()) / static_cast<double>(std::max<Index>(m.rows(), 1));
}

/// Descending eigenvalues and orthonormal eigenvectors. Each eigenvector is
/// oriented so that its largest-magnitude component (first one on ties) is
/// positive, which makes the output a deterministic function of the input.
inline EigenDecomposition eigendecompose(const SymmetricMatrix& m) {
    if (m.rows() != m.cols()) {
        throw DataError("eigendecompose expects a square matrix");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver did not converge (n=" + std::to_string(m.rows()) +
                             ", frobenius norm " + std::to_string(m.norm()) +
                             ", finite=" + (m.allFinite() ? "yes" : "no") + ")");
    }
    const Index n = m.rows();
    EigenDecomposition out{Vector(n), Matrix(n, n)};
    // Eigen returns ascending order.
    for (Index k = 0; k < n; ++k) {
        const Index src = n - 1 - k;
        out.eigenvalues(k) = solver.eigenvalues()(src);
        auto column = out.eigenvectors.col(k);
        column = solver.eigenvectors().col(src);
        Index pivot = 0;
        for (Index i = 1; i < n; ++i) {
            if (std::abs(column(i)) > std::abs(column(pivot))) {
                pivot = i;
            }
        }
        if (column(pivot) < 0.0) {
            column = -column;
        }
    }
    return out;
}

inline double min_eigenvalue(const SymmetricMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver did not converge");
    }
    return solver.eigenvalues()(0);
}

/// sqrt(sum_ij x_ij^2 / n^2), diagonal included.
inline double frobenius_cov(const SymmetricMatrix& x) {
    const auto n = static_cast<double>(x.rows());
    return std::sqrt(x.squaredNorm() / (n * n));
}

/// sqrt(sum_{i>j} 2 x_ij^2 / (n (n - 1))), diagonal ignored.
inline double frobenius_corr(const SymmetricMatrix& x) {
    const Index n = x.rows();
    if (n < 2) {
        throw DataError("frobenius_corr needs n >= 2");
    }
    double sum = 0.0;
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            sum += x(i, j) * x(i, j);
        }
    }
    const auto nd = static_cast<double>(n);
    return std::sqrt(2.0 * sum / (nd * (nd - 1.0)));
}

}  // namespace bahc
