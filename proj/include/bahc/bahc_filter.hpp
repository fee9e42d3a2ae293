#pragma once

// Feature-wise bootstrap and the bootstrap-averaged hierarchical filters for
// correlation and covariance matrices.

#include <bahc/error.hpp>
#include <bahc/hierclust.hpp>
#include <bahc/matrix_core.hpp>
#include <bahc/parallel.hpp>
#include <bahc/rng.hpp>

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace bahc {

inline constexpr std::size_t kDefaultBootstraps = 100;
inline constexpr std::size_t kMaxBootstrapRetries = 100;

struct BootstrapSpec {
    std::size_t m = kDefaultBootstraps;
    std::uint64_t seed = 0;
};

/// Column indices drawn uniformly with replacement from [0, t). The draw for
/// bootstrap b depends only on (seed, b, attempt, t); attempt > 0 is used when
/// an earlier draw had to be rejected.
struct SeededResampler {
    std::uint64_t seed = 0;

    std::vector<Index> operator()(std::size_t bootstrap, std::size_t attempt, Index t) const {
        SplitMix64 rng(hash_words({seed, bootstrap, attempt}));
        std::vector<Index> columns(static_cast<std::size_t>(t));
        for (auto& c : columns) {
            c = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(t)));
        }
        return columns;
    }
};

/// Returns the columns unchanged; lets tests pin a bootstrap to the original data.
struct IdentityResampler {
    std::vector<Index> operator()(std::size_t, std::size_t, Index t) const {
        std::vector<Index> columns(static_cast<std::size_t>(t));
        for (Index h = 0; h < t; ++h) {
            columns[static_cast<std::size_t>(h)] = h;
        }
        return columns;
    }
};

template <typename R>
concept Resampler = requires(const R& r, std::size_t b, std::size_t attempt, Index t) {
    { r(b, attempt, t) } -> std::convertible_to<std::vector<Index>>;
};

inline Matrix gather_columns(const Matrix& data, const std::vector<Index>& columns) {
    Matrix out(data.rows(), static_cast<Index>(columns.size()));
    for (std::size_t h = 0; h < columns.size(); ++h) {
        out.col(static_cast<Index>(h)) = data.col(columns[h]);
    }
    return out;
}

/// Bootstrap copy b: every row is resampled with the same column index vector.
inline Matrix bootstrap_columns(const Matrix& data, const BootstrapSpec& spec, std::size_t b) {
    return gather_columns(data, SeededResampler{spec.seed}(b, 0, data.cols()));
}

inline Matrix bootstrap_columns(const ReturnsMatrix& returns, const BootstrapSpec& spec, std::size_t b) {
    return bootstrap_columns(returns.data(), spec, b);
}

/// Running sum that adds equal-sized partial sums pairwise. The result depends
/// only on the order in which terms are added.
class PairwiseAccumulator {
public:
    void add(Matrix term) {
        stack_.push_back({0, std::move(term)});
        while (stack_.size() >= 2 && stack_[stack_.size() - 1].level == stack_[stack_.size() - 2].level) {
            Entry top = std::move(stack_.back());
            stack_.pop_back();
            stack_.back().sum += top.sum;
            ++stack_.back().level;
        }
        ++count_;
    }

    [[nodiscard]] std::size_t count() const noexcept { return count_; }

    [[nodiscard]] Matrix total() const {
        Matrix sum = stack_.front().sum;
        for (std::size_t k = 1; k < stack_.size(); ++k) {
            sum += stack_[k].sum;
        }
        return sum;
    }

private:
    struct Entry {
        int level;
        Matrix sum;
    };
    std::vector<Entry> stack_;
    std::size_t count_ = 0;
};

struct BootstrapDraw {
    Matrix filtered_correlation;
    Matrix filtered_covariance;
    std::size_t attempts = 1;
};

/// HCAL-filtered correlation and covariance of one bootstrap copy, redrawing
/// the copy while any of its rows is constant.
template <Resampler R>
BootstrapDraw filtered_bootstrap(const Matrix& data, const R& resampler, std::size_t b) {
    for (std::size_t attempt = 0; attempt <= kMaxBootstrapRetries; ++attempt) {
        const Matrix copy = gather_columns(data, resampler(b, attempt, data.cols()));
        bool degenerate = false;
        for (Index i = 0; i < copy.rows() && !degenerate; ++i) {
            degenerate = detail::row_is_constant(copy, i);
        }
        if (degenerate) {
            continue;
        }
        const Matrix cov = detail::covariance_of(copy);
        if (!(cov.diagonal().array() > 0.0).all()) {
            continue;
        }
        BootstrapDraw draw;
        draw.filtered_correlation = hcal_filter(detail::normalize_by_diagonal(cov));
        const Vector sd = cov.diagonal().cwiseSqrt();
        draw.filtered_covariance = sd.asDiagonal() * draw.filtered_correlation * sd.asDiagonal();
        draw.filtered_covariance.diagonal() = cov.diagonal();
        detail::mirror_lower(draw.filtered_covariance);
        draw.attempts = attempt + 1;
        return draw;
    }
    throw DegenerateBootstrapError(b);
}

struct BahcEstimate {
    CorrelationMatrix correlation;
    CovarianceMatrix covariance;
};

/// Averages the filtered matrices of m bootstrap copies. Correlation and
/// covariance come from the same draws. Bootstraps are evaluated in batches
/// of `threads` and summed in index order, so the result does not depend on
/// the thread count.
template <Resampler R>
BahcEstimate bahc_estimate(const Matrix& data, std::size_t m, const R& resampler, std::size_t threads = 1) {
    if (m == 0) {
        throw ConfigError("number of bootstraps must be at least 1");
    }
    PairwiseAccumulator corr_sum;
    PairwiseAccumulator cov_sum;
    const std::size_t batch = std::max<std::size_t>(threads, 1);
    std::vector<BootstrapDraw> draws(batch);
    for (std::size_t start = 0; start < m; start += batch) {
        const std::size_t size = std::min(batch, m - start);
        parallel_for(size, threads, [&](std::size_t k) { draws[k] = filtered_bootstrap(data, resampler, start + k); });
        for (std::size_t k = 0; k < size; ++k) {
            corr_sum.add(std::move(draws[k].filtered_correlation));
            cov_sum.add(std::move(draws[k].filtered_covariance));
        }
    }
    const double scale = 1.0 / static_cast<double>(m);
    BahcEstimate out{corr_sum.total() * scale, cov_sum.total() * scale};
    out.correlation.diagonal().setOnes();
    return out;
}

inline BahcEstimate bahc_estimate(const ReturnsMatrix& returns, const BootstrapSpec& spec, std::size_t threads = 1) {
    return bahc_estimate(returns.data(), spec.m, SeededResampler{spec.seed}, threads);
}

inline CorrelationMatrix bahc_correlation(const ReturnsMatrix& returns, const BootstrapSpec& spec) {
    return bahc_estimate(returns, spec).correlation;
}

inline CovarianceMatrix bahc_covariance(const ReturnsMatrix& returns, const BootstrapSpec& spec) {
    return bahc_estimate(returns, spec).covariance;
}

}  // namespace bahc
