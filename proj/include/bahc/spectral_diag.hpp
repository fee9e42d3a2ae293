#pragma once

// Oracle estimator in a fixed eigenbasis, eigenvalue residues and the
// eigenvector-stability distance.

#include <bahc/error.hpp>
#include <bahc/matrix_core.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace bahc {

struct OracleResult {
    Vector oracle_eigenvalues;  // z_i = u_i' M_out u_i
    SymmetricMatrix oracle_matrix;  // U diag(z) U'
    EigenDecomposition basis;
};

/// Best approximation of `out_of_sample` of the form U diag(z) U' with U the
/// given in-sample eigenvectors.
inline OracleResult oracle(const EigenDecomposition& in_sample, const SymmetricMatrix& out_of_sample) {
    const Matrix& u = in_sample.eigenvectors;
    if (u.rows() != out_of_sample.rows() || out_of_sample.rows() != out_of_sample.cols()) {
        throw DataError("oracle: basis and out-of-sample matrix dimensions differ");
    }
    OracleResult out;
    out.oracle_eigenvalues = (u.transpose() * out_of_sample * u).diagonal();
    out.oracle_matrix = u * out.oracle_eigenvalues.asDiagonal() * u.transpose();
    detail::mirror_lower(out.oracle_matrix);
    out.basis = in_sample;
    return out;
}

struct Residues {
    double high = 0.0;
    std::optional<double> low;  // empty when an eigenvalue is not positive
};

namespace detail {

inline std::vector<double> sorted_descending(const Vector& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

}  // namespace detail

/// eps_hi = sqrt(mean (lambda_i - z_i)^2), eps_low = sqrt(mean (1/lambda_i - 1/z_i)^2),
/// both sequences paired by descending rank. eps_low is left empty if any
/// value is not strictly positive.
inline Residues residues(const Vector& eigenvalues, const Vector& oracle_eigenvalues) {
    if (eigenvalues.size() != oracle_eigenvalues.size() || eigenvalues.size() == 0) {
        throw DataError("residues: eigenvalue sequences must be non-empty and of equal length");
    }
    const auto lambda = detail::sorted_descending(eigenvalues);
    const auto z = detail::sorted_descending(oracle_eigenvalues);
    const auto n = static_cast<double>(lambda.size());
    double high = 0.0;
    double low = 0.0;
    bool positive = true;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        high += (lambda[i] - z[i]) * (lambda[i] - z[i]);
        if (lambda[i] <= 0.0 || z[i] <= 0.0) {
            positive = false;
        } else {
            const double gap = 1.0 / lambda[i] - 1.0 / z[i];
            low += gap * gap;
        }
    }
    Residues out;
    out.high = std::sqrt(high / n);
    if (positive) {
        out.low = std::sqrt(low / n);
    }
    return out;
}

/// Throwing variant of eps_low for callers that need an error.
inline double residue_low(const Vector& eigenvalues, const Vector& oracle_eigenvalues) {
    const auto r = residues(eigenvalues, oracle_eigenvalues);
    if (!r.low) {
        const auto lambda = detail::sorted_descending(eigenvalues);
        const auto z = detail::sorted_descending(oracle_eigenvalues);
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            if (lambda[i] <= 0.0 || z[i] <= 0.0) {
                throw NonpositiveEigenvalueError(i);
            }
        }
    }
    return *r.low;
}

enum class MatrixMode { Covariance, Correlation };

/// Rescaled Frobenius distance between M_out and its Oracle estimator in the
/// method's eigenbasis: frobenius_cov for covariances, frobenius_corr
/// (diagonal excluded) for correlations.
inline double eigenvector_stability(const EigenDecomposition& method_basis, const SymmetricMatrix& out_of_sample,
                                    MatrixMode mode) {
    const Matrix diff = out_of_sample - oracle(method_basis, out_of_sample).oracle_matrix;
    return mode == MatrixMode::Covariance ? frobenius_cov(diff) : frobenius_corr(diff);
}

}  // namespace bahc
