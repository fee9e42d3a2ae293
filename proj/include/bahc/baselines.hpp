#pragma once

// Comparison filters: raw sample, single-dendrogram HCAL, linear shrinkage to
// the scaled identity, and cross-validated eigenvalue shrinkage. apply_filter
// gives the experiment harness one entry point for all of them and BAHC.

#include <bahc/bahc_filter.hpp>
#include <bahc/error.hpp>
#include <bahc/hierclust.hpp>
#include <bahc/matrix_core.hpp>
#include <bahc/rng.hpp>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace bahc {

struct ShrinkageEstimate {
    CovarianceMatrix covariance;
    double intensity = 0.0;
};

/// Linear shrinkage of the sample covariance S toward mu I, mu = trace(S)/n:
///   d2 = ||S - mu I||^2 / n
///   b2 = min(d2, sum_h ||x_h x_h' - S||^2 / (n t^2))
///   Sigma = (b2/d2) mu I + (1 - b2/d2) S
/// with x_h the demeaned observation vectors. Intensity is 0 when S already
/// equals mu I.
inline ShrinkageEstimate lw_shrink(const ReturnsMatrix& returns) {
    const Matrix& data = returns.data();
    const Index n = data.rows();
    const Index t = data.cols();
    const Vector mean = data.rowwise().mean();
    const Matrix centered = data.colwise() - mean;
    const Matrix sample = detail::covariance_of(data);
    const double nd = static_cast<double>(n);
    const double td = static_cast<double>(t);

    const double mu = sample.trace() / nd;
    Matrix offset = sample;
    offset.diagonal().array() -= mu;
    const double d2 = offset.squaredNorm() / nd;

    // sum_h ||x x' - S||^2 = sum_h (|x|^4 - 2 x'Sx) + t ||S||^2
    double spread = 0.0;
    const double sample_sq = sample.squaredNorm();
    for (Index h = 0; h < t; ++h) {
        const auto x = centered.col(h);
        const double sq = x.squaredNorm();
        spread += sq * sq - 2.0 * x.dot(sample * x) + sample_sq;
    }
    const double b2_bar = std::max(spread, 0.0) / (nd * td * td);

    ShrinkageEstimate out;
    out.intensity = d2 > 0.0 ? std::clamp(std::min(b2_bar, d2) / d2, 0.0, 1.0) : 0.0;
    out.covariance = (1.0 - out.intensity) * sample;
    out.covariance.diagonal().array() += out.intensity * mu;
    detail::mirror_lower(out.covariance);
    return out;
}

inline constexpr std::size_t kDefaultFolds = 10;

struct CvShrinkageEstimate {
    CovarianceMatrix covariance;
    Vector eigenvalues;  // cross-validated, paired with basis columns
    Matrix basis;        // full-sample eigenvectors
};

/// Contiguous folds over a seeded permutation of the columns.
inline std::vector<std::vector<Index>> make_folds(Index t, std::size_t folds, std::uint64_t seed) {
    std::vector<Index> order(static_cast<std::size_t>(t));
    std::iota(order.begin(), order.end(), Index{0});
    SplitMix64 rng(hash_words({seed, 0x63765f666f6c6473ULL}));
    rng.shuffle(std::span<Index>(order));
    std::vector<std::vector<Index>> out(folds);
    const auto total = static_cast<std::size_t>(t);
    for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t begin = k * total / folds;
        const std::size_t end = (k + 1) * total / folds;
        out[k].assign(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

/// Keeps the full-sample eigenvectors U and replaces each eigenvalue by the
/// fold average of u_i' S_test u_i, where u_i is the i-th eigenvector of the
/// training covariance. Data are demeaned once with the full-sample mean so
/// that single-column test folds remain meaningful.
inline CvShrinkageEstimate cv_eigenvalue_shrink(const ReturnsMatrix& returns, std::size_t folds = kDefaultFolds,
                                                std::uint64_t seed = 0) {
    const Matrix& data = returns.data();
    const Index n = data.rows();
    const Index t = data.cols();
    if (folds < 2 || static_cast<Index>(folds) > t) {
        throw DataError("cross-validation needs 2 <= folds <= t (folds=" + std::to_string(folds) +
                        ", t=" + std::to_string(t) + ")");
    }
    const Vector mean = data.rowwise().mean();
    const Matrix centered = data.colwise() - mean;
    auto scatter = [&](const std::vector<Index>& columns) {
        Matrix s = Matrix::Zero(n, n);
        for (Index h : columns) {
            s.selfadjointView<Eigen::Lower>().rankUpdate(centered.col(h), 1.0);
        }
        s /= static_cast<double>(columns.size());
        detail::mirror_lower(s);
        return s;
    };

    std::vector<Index> all(static_cast<std::size_t>(t));
    std::iota(all.begin(), all.end(), Index{0});
    const EigenDecomposition full = eigendecompose(scatter(all));

    const auto partition = make_folds(t, folds, seed);
    Vector z = Vector::Zero(n);
    std::vector<bool> held_out(static_cast<std::size_t>(t));
    for (const auto& test : partition) {
        std::fill(held_out.begin(), held_out.end(), false);
        for (Index h : test) {
            held_out[static_cast<std::size_t>(h)] = true;
        }
        std::vector<Index> train;
        train.reserve(all.size() - test.size());
        for (Index h : all) {
            if (!held_out[static_cast<std::size_t>(h)]) {
                train.push_back(h);
            }
        }
        const Matrix u_train = eigendecompose(scatter(train)).eigenvectors;
        const Matrix s_test = scatter(test);
        z += (u_train.transpose() * s_test * u_train).diagonal();
    }
    z /= static_cast<double>(folds);
    const double floor = 1e-12 * z.mean();
    for (Index i = 0; i < n; ++i) {
        z(i) = std::max(z(i), floor);
    }

    CvShrinkageEstimate out{Matrix(), z, full.eigenvectors};
    out.covariance = full.eigenvectors * z.asDiagonal() * full.eigenvectors.transpose();
    detail::mirror_lower(out.covariance);
    return out;
}

enum class FilterKind { Sample, HCAL, BAHC, LW, CV };

struct FilterMethod {
    FilterKind kind = FilterKind::Sample;
    std::size_t bootstraps = kDefaultBootstraps;  // BAHC
    std::uint64_t seed = 0;                      // BAHC draws, CV fold shuffle
    std::size_t folds = kDefaultFolds;           // CV

    [[nodiscard]] std::string label() const {
        switch (kind) {
            case FilterKind::Sample: return "Sample";
            case FilterKind::HCAL: return "HCAL";
            case FilterKind::BAHC: return "BAHC";
            case FilterKind::LW: return "LW";
            case FilterKind::CV: return "CV";
        }
        return "?";
    }

    void validate() const {
        if (kind == FilterKind::BAHC && bootstraps == 0) {
            throw ConfigError("BAHC needs at least one bootstrap");
        }
        if (kind == FilterKind::CV && folds < 2) {
            throw ConfigError("CV needs at least two folds");
        }
    }
};

inline FilterKind parse_filter_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "sample") return FilterKind::Sample;
    if (lower == "hcal") return FilterKind::HCAL;
    if (lower == "bahc") return FilterKind::BAHC;
    if (lower == "lw") return FilterKind::LW;
    if (lower == "cv") return FilterKind::CV;
    throw ConfigError("unknown filter method '" + std::string(name) + "' (expected sample, hcal, bahc, lw or cv)");
}

struct FilteredEstimate {
    CovarianceMatrix covariance;
    CorrelationMatrix correlation;
};

/// Covariance estimate of the method plus its correlation counterpart. LW and
/// CV correlations are their covariances renormalized to a unit diagonal.
inline FilteredEstimate apply_filter(const FilterMethod& method, const ReturnsMatrix& returns, std::size_t threads = 1) {
    method.validate();
    switch (method.kind) {
        case FilterKind::Sample:
            return {sample_covariance(returns), sample_correlation(returns)};
        case FilterKind::HCAL: {
            const Matrix cov = sample_covariance(returns);
            FilteredEstimate out;
            out.correlation = hcal_filter(sample_correlation(returns));
            const Vector sd = cov.diagonal().cwiseSqrt();
            out.covariance = sd.asDiagonal() * out.correlation * sd.asDiagonal();
            out.covariance.diagonal() = cov.diagonal();
            detail::mirror_lower(out.covariance);
            return out;
        }
        case FilterKind::BAHC: {
            auto estimate = bahc_estimate(returns, BootstrapSpec{method.bootstraps, method.seed}, threads);
            return {std::move(estimate.covariance), std::move(estimate.correlation)};
        }
        case FilterKind::LW: {
            auto shrunk = lw_shrink(returns);
            return {shrunk.covariance, renormalize_correlation(shrunk.covariance)};
        }
        case FilterKind::CV: {
            auto cv = cv_eigenvalue_shrink(returns, method.folds, method.seed);
            return {cv.covariance, renormalize_correlation(cv.covariance)};
        }
    }
    throw ConfigError("unhandled filter method");
}

}  // namespace bahc
