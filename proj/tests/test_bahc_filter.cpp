#include "oracles.hpp"

#include <bahc/bahc_filter.hpp>

#include <gtest/gtest.h>

#include <random>

using bahc::Matrix;

namespace {

Matrix two_block_truth(int n, double within, double across) {
    Matrix c = Matrix::Constant(n, n, across);
    const int half = n / 2;
    c.topLeftCorner(half, half).setConstant(within);
    c.bottomRightCorner(n - half, n - half).setConstant(within);
    c.diagonal().setOnes();
    return c;
}

Matrix sample_from(const Matrix& corr, int t, std::mt19937_64& rng) {
    const Eigen::LLT<Matrix> llt(corr);
    return llt.matrixL() * oracle::random_gaussian(rng, static_cast<int>(corr.rows()), t);
}

/// Resampler returning a constant copy for the first few attempts.
struct ConstantFirst {
    std::size_t bad_attempts;
    std::vector<bahc::Index> operator()(std::size_t, std::size_t attempt, bahc::Index t) const {
        if (attempt < bad_attempts) {
            return std::vector<bahc::Index>(static_cast<std::size_t>(t), 0);
        }
        return bahc::IdentityResampler{}(0, 0, t);
    }
};

}  // namespace

TEST(Bootstrap, SingleFeatureCopyIsTheOriginal) {
    Matrix x(3, 1);
    x << 1.5, -2.0, 0.25;
    const Matrix copy = bahc::bootstrap_columns(x, bahc::BootstrapSpec{1, 9}, 0);
    EXPECT_TRUE(copy == x);
}

TEST(Bootstrap, SharedColumnsAcrossRows) {
    // Row 1 is row 0 plus 100, so the copies must keep that relation.
    std::mt19937_64 rng(31);
    Matrix x = oracle::random_gaussian(rng, 2, 25);
    x.row(1) = x.row(0).array() + 100.0;
    const Matrix copy = bahc::bootstrap_columns(x, bahc::BootstrapSpec{1, 5}, 3);
    EXPECT_TRUE((copy.row(1).array() - copy.row(0).array() == 100.0).all());
}

TEST(Bootstrap, DeterministicPerSeedAndIndex) {
    std::mt19937_64 rng(32);
    const Matrix x = oracle::random_gaussian(rng, 4, 30);
    const bahc::BootstrapSpec spec{10, 77};
    EXPECT_TRUE(bahc::bootstrap_columns(x, spec, 4) == bahc::bootstrap_columns(x, spec, 4));
    EXPECT_FALSE(bahc::bootstrap_columns(x, spec, 4) == bahc::bootstrap_columns(x, spec, 5));
    EXPECT_FALSE(bahc::bootstrap_columns(x, spec, 4) == bahc::bootstrap_columns(x, bahc::BootstrapSpec{10, 78}, 4));
}

TEST(Bootstrap, ColumnDrawsAreUniform) {
    constexpr int t = 10;
    constexpr int draws = 10000;
    std::vector<std::size_t> counts(t, 0);
    const bahc::SeededResampler resampler{123};
    for (int b = 0; b < draws / t; ++b) {
        for (auto c : resampler(static_cast<std::size_t>(b), 0, t)) {
            ++counts[static_cast<std::size_t>(c)];
        }
    }
    // 9 degrees of freedom, 0.001 upper quantile.
    EXPECT_LT(oracle::chi_square_statistic(counts), 27.88);
}

TEST(Bahc, IdentityResamplerGivesHcalOfSample) {
    std::mt19937_64 rng(33);
    const Matrix x = oracle::random_gaussian(rng, 7, 40);
    const auto est = bahc::bahc_estimate(x, 1, bahc::IdentityResampler{});
    const Matrix expected = bahc::hcal_filter(oracle::correlation(x));
    EXPECT_LT((est.correlation - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((est.covariance.diagonal() - oracle::covariance(x).diagonal()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bahc, ConvergesToTwoBlockTruth) {
    std::mt19937_64 rng(34);
    const Matrix truth = two_block_truth(8, 0.6, 0.1);
    const bahc::ReturnsMatrix r(sample_from(truth, 4000, rng));
    const Matrix est = bahc::bahc_correlation(r, bahc::BootstrapSpec{100, 1});
    EXPECT_LT((est - truth).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Bahc, UnitDiagonalSymmetricPsd) {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 10; ++trial) {
        const bahc::ReturnsMatrix r(oracle::random_gaussian(rng, 15, 10 + 5 * trial));
        const auto est = bahc::bahc_estimate(r, bahc::BootstrapSpec{20, static_cast<std::uint64_t>(trial)});
        EXPECT_TRUE((est.correlation.diagonal().array() == 1.0).all());
        EXPECT_TRUE(est.correlation == est.correlation.transpose());
        EXPECT_TRUE(est.covariance == est.covariance.transpose());
        EXPECT_GE(bahc::min_eigenvalue(est.correlation), -bahc::psd_tolerance(est.correlation));
        EXPECT_GE(bahc::min_eigenvalue(est.covariance), -bahc::psd_tolerance(est.covariance));
        EXPECT_LE(est.correlation.cwiseAbs().maxCoeff(), 1.0);
    }
}

TEST(Bahc, CovarianceDiagonalIsMeanBootstrapVariance) {
    std::mt19937_64 rng(36);
    const Matrix x = oracle::random_gaussian(rng, 5, 20);
    const bahc::SeededResampler resampler{8};
    constexpr std::size_t m = 13;
    bahc::Vector expected = bahc::Vector::Zero(5);
    for (std::size_t b = 0; b < m; ++b) {
        expected += oracle::covariance(bahc::gather_columns(x, resampler(b, 0, 20))).diagonal();
    }
    expected /= static_cast<double>(m);
    const auto est = bahc::bahc_estimate(x, m, resampler);
    EXPECT_LT((est.covariance.diagonal() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bahc, CovarianceCopyIsScaledCorrelation) {
    std::mt19937_64 rng(37);
    const Matrix x = oracle::random_gaussian(rng, 6, 30);
    const auto draw = bahc::filtered_bootstrap(x, bahc::SeededResampler{2}, 0);
    const bahc::Vector var = draw.filtered_covariance.diagonal();
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (i != j) {
                EXPECT_NEAR(draw.filtered_covariance(i, j), draw.filtered_correlation(i, j) * std::sqrt(var(i) * var(j)),
                            1e-14);
            }
        }
    }
}

TEST(Bahc, IndependentOfThreadCount) {
    std::mt19937_64 rng(38);
    const bahc::ReturnsMatrix r(oracle::random_gaussian(rng, 20, 30));
    const bahc::BootstrapSpec spec{25, 4};
    const auto one = bahc::bahc_estimate(r, spec, 1);
    for (std::size_t threads : {2U, 3U, 8U}) {
        const auto many = bahc::bahc_estimate(r, spec, threads);
        EXPECT_TRUE(one.correlation == many.correlation) << threads;
        EXPECT_TRUE(one.covariance == many.covariance) << threads;
    }
}

TEST(Bahc, RedrawsConstantCopies) {
    std::mt19937_64 rng(39);
    const Matrix x = oracle::random_gaussian(rng, 3, 8);
    const auto draw = bahc::filtered_bootstrap(x, ConstantFirst{3}, 0);
    EXPECT_EQ(draw.attempts, 4U);
    EXPECT_LT((draw.filtered_correlation - bahc::hcal_filter(oracle::correlation(x))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bahc, GivesUpOnPersistentlyDegenerateData) {
    Matrix x(2, 5);
    x << 1, 2, 3, 4, 5, 7, 7, 7, 7, 7;
    EXPECT_THROW(bahc::bahc_estimate(x, 3, bahc::SeededResampler{1}), bahc::DegenerateBootstrapError);
    EXPECT_THROW(bahc::filtered_bootstrap(x, ConstantFirst{1000}, 0), bahc::DegenerateBootstrapError);
    EXPECT_THROW(bahc::bahc_estimate(x, 0, bahc::SeededResampler{1}), bahc::ConfigError);
}

TEST(Bahc, BootstrapVarianceShrinksWithM) {
    // Elementwise spread of the estimate across seeds falls roughly as 1/m.
    std::mt19937_64 rng(40);
    const Matrix x = oracle::random_gaussian(rng, 6, 20);
    auto spread = [&](std::size_t m) {
        constexpr int seeds = 60;
        Matrix mean = Matrix::Zero(6, 6);
        Matrix sq = Matrix::Zero(6, 6);
        for (int s = 0; s < seeds; ++s) {
            const Matrix c = bahc::bahc_estimate(x, m, bahc::SeededResampler{static_cast<std::uint64_t>(s)}).correlation;
            mean += c;
            sq += c.cwiseProduct(c);
        }
        mean /= seeds;
        return (sq / seeds - mean.cwiseProduct(mean)).sum();
    };
    const double ratio = spread(5) / spread(40);
    EXPECT_GT(ratio, 4.0);
    EXPECT_LT(ratio, 16.0);
}
