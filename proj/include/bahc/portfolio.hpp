#pragma once

// Global minimum-variance portfolios (long-short and long-only) and their
// realized risk under a test-period covariance.

#include <bahc/error.hpp>
#include <bahc/matrix_core.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace bahc {

/// Portfolio weights summing to one.
using PortfolioWeights = Vector;

/// w = S^-1 1 / (1' S^-1 1). Throws SingularCovarianceError when the smallest
/// eigenvalue is at or below n * eps * largest eigenvalue.
inline PortfolioWeights min_variance_long_short(const CovarianceMatrix& cov) {
    const Index n = cov.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> spectrum(cov, Eigen::EigenvaluesOnly);
    if (spectrum.info() != Eigen::Success) {
        throw NumericalError("eigensolver failed while checking covariance conditioning");
    }
    const double lo = spectrum.eigenvalues()(0);
    const double hi = spectrum.eigenvalues()(n - 1);
    if (!(hi > 0.0) || lo <= static_cast<double>(n) * std::numeric_limits<double>::epsilon() * hi) {
        throw SingularCovarianceError(lo, hi);
    }
    const Eigen::LDLT<Matrix> factor(cov);
    const Vector x = factor.solve(Vector::Ones(n));
    return x / x.sum();
}

/// Euclidean projection onto {w : w >= 0, sum w = 1}.
inline Vector project_to_simplex(const Vector& v) {
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double shift = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cumulative += sorted[k];
        const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0) {
            shift = candidate;
        }
    }
    return (v.array() - shift).cwiseMax(0.0).matrix();
}

/// Largest KKT violation of w for min w'Sw s.t. sum w = 1, w >= 0, relative to
/// the largest variance in S (a bound on every gradient component). `active_threshold` decides which weights
/// count as strictly positive.
inline double kkt_residual(const CovarianceMatrix& cov, const Vector& w, double active_threshold = 1e-12) {
    const Vector g = cov * w;
    double multiplier = 0.0;
    Index active = 0;
    for (Index i = 0; i < w.size(); ++i) {
        if (w(i) > active_threshold) {
            multiplier += g(i);
            ++active;
        }
    }
    if (active == 0) {
        return std::numeric_limits<double>::infinity();
    }
    multiplier /= static_cast<double>(active);
    double worst = 0.0;
    for (Index i = 0; i < w.size(); ++i) {
        const double gap = w(i) > active_threshold ? std::abs(g(i) - multiplier) : std::max(0.0, multiplier - g(i));
        worst = std::max(worst, gap);
    }
    const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return worst / scale;
}

struct LongOnlySolution {
    PortfolioWeights weights;
    std::size_t iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
};

/// Primal active-set method on the simplex. The working set holds weights
/// pinned at zero; each iteration solves the equality-constrained problem on
/// the free weights, then either steps toward it (pinning the first weight to
/// hit zero) or, when already there, releases the pinned weight with the most
/// negative multiplier. Warm-started from the simplex projection of the
/// long-short solution (uniform weights when that does not exist).
inline LongOnlySolution solve_long_only(const CovarianceMatrix& cov, std::size_t max_iterations = 0) {
    const Index n = cov.rows();
    if (n == 0 || cov.cols() != n) {
        throw DataError("long-only solver expects a non-empty square covariance");
    }
    if (max_iterations == 0) {
        max_iterations = 10 * static_cast<std::size_t>(n);
    }
    Vector w;
    try {
        w = project_to_simplex(min_variance_long_short(cov));
    } catch (const SingularCovarianceError&) {
        w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    }
    std::vector<bool> pinned(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        pinned[static_cast<std::size_t>(i)] = w(i) <= 0.0;
        if (w(i) <= 0.0) {
            w(i) = 0.0;
        }
    }
    const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double multiplier_tol = 1e-13 * scale;

    LongOnlySolution out;
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        out.iterations = iter + 1;
        std::vector<Index> free;
        for (Index i = 0; i < n; ++i) {
            if (!pinned[static_cast<std::size_t>(i)]) {
                free.push_back(i);
            }
        }
        const auto k = static_cast<Index>(free.size());
        Matrix sub(k, k);
        for (Index a = 0; a < k; ++a) {
            for (Index b = 0; b < k; ++b) {
                sub(a, b) = cov(free[a], free[b]);
            }
        }
        Vector target;
        const Eigen::LLT<Matrix> chol(sub);
        if (chol.info() == Eigen::Success) {
            const Vector x = chol.solve(Vector::Ones(k));
            target = x / x.sum();
        }
        if (target.size() != k || !target.allFinite()) {
            // Singular block: minimum-norm solution of the bordered KKT system.
            Matrix kkt = Matrix::Zero(k + 1, k + 1);
            kkt.topLeftCorner(k, k) = sub;
            kkt.col(k).head(k).setOnes();
            kkt.row(k).head(k).setOnes();
            Vector rhs = Vector::Zero(k + 1);
            rhs(k) = 1.0;
            target = kkt.completeOrthogonalDecomposition().solve(rhs).head(k);
        }

        Vector step = Vector::Zero(n);
        for (Index a = 0; a < k; ++a) {
            step(free[a]) = target(a) - w(free[a]);
        }

        if (step.cwiseAbs().maxCoeff() <= 1e-14) {
            const Vector g = cov * w;
            double multiplier = 0.0;
            for (Index i : free) {
                multiplier += g(i);
            }
            multiplier /= static_cast<double>(k);
            Index release = -1;
            double most_negative = -multiplier_tol;
            for (Index i = 0; i < n; ++i) {
                if (pinned[static_cast<std::size_t>(i)] && g(i) - multiplier < most_negative) {
                    most_negative = g(i) - multiplier;
                    release = i;
                }
            }
            if (release < 0) {
                out.converged = true;
                break;
            }
            pinned[static_cast<std::size_t>(release)] = false;
            continue;
        }

        double alpha = 1.0;
        Index blocking = -1;
        for (Index i : free) {
            if (step(i) < 0.0) {
                const double ratio = -w(i) / step(i);
                if (ratio < alpha) {
                    alpha = ratio;
                    blocking = i;
                }
            }
        }
        w += alpha * step;
        if (blocking >= 0) {
            w(blocking) = 0.0;
            pinned[static_cast<std::size_t>(blocking)] = true;
        }
    }

    w = w.cwiseMax(0.0);
    w /= w.sum();
    out.weights = w;
    out.kkt_residual = kkt_residual(cov, w);
    return out;
}

/// Long-only minimum-variance weights; throws NumericalError carrying the KKT
/// residual of the best iterate when the iteration cap is reached.
inline PortfolioWeights min_variance_long_only(const CovarianceMatrix& cov) {
    LongOnlySolution solution = solve_long_only(cov);
    if (!solution.converged) {
        throw NumericalError("long-only solver hit its iteration cap after " + std::to_string(solution.iterations) +
                             " iterations (KKT residual " + std::to_string(solution.kkt_residual) + ")");
    }
    return solution.weights;
}

inline double portfolio_variance(const PortfolioWeights& w, const CovarianceMatrix& cov) { return w.dot(cov * w); }

/// sqrt(w' S_out w).
inline double realized_risk(const PortfolioWeights& w, const CovarianceMatrix& cov_out) {
    if (w.size() != cov_out.rows()) {
        throw DataError("weight vector and covariance dimensions differ");
    }
    return std::sqrt(std::max(portfolio_variance(w, cov_out), 0.0));
}

/// CSV with header "asset_id,weight".
inline void write_weights_csv(std::ostream& out, const PortfolioWeights& w, const std::vector<std::string>& labels) {
    out << "asset_id,weight\n";
    char buffer[64];
    for (Index i = 0; i < w.size(); ++i) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", w(i));
        out << (static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)] : std::to_string(i))
            << ',' << buffer << '\n';
    }
}

}  // namespace bahc
