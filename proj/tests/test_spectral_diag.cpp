#include "oracles.hpp"

#include <bahc/spectral_diag.hpp>

#include <gtest/gtest.h>

#include <random>

using bahc::EigenDecomposition;
using bahc::Matrix;
using bahc::Vector;

namespace {

EigenDecomposition basis_of(const Matrix& u) { return EigenDecomposition{Vector::Zero(u.cols()), u}; }

Vector random_positive(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> dist(0.1, 5.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = dist(rng);
    }
    return v;
}

}  // namespace

TEST(Oracle, SameMatrixReproducesIt) {
    std::mt19937_64 rng(61);
    const Matrix m = oracle::random_spd(rng, 7);
    const auto decomp = bahc::eigendecompose(m);
    const auto result = bahc::oracle(decomp, m);
    EXPECT_LT((result.oracle_matrix - m).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((result.oracle_eigenvalues - decomp.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Oracle, ExactWhenBasisDiagonalizesTarget) {
    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix u = oracle::random_orthogonal(rng, 6);
        const Matrix target = u * random_positive(rng, 6).asDiagonal() * u.transpose();
        EXPECT_LT((bahc::oracle(basis_of(u), target).oracle_matrix - target).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Oracle, QuadraticFormLoop) {
    std::mt19937_64 rng(63);
    const Matrix u = oracle::random_orthogonal(rng, 5);
    const Matrix target = oracle::random_spd(rng, 5);
    const auto result = bahc::oracle(basis_of(u), target);
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(result.oracle_eigenvalues(i), oracle::quadratic_form(u.col(i), target), 1e-12);
    }
    EXPECT_LT((result.oracle_matrix - u * result.oracle_eigenvalues.asDiagonal() * u.transpose()).cwiseAbs().maxCoeff(),
              1e-10);
}

TEST(Oracle, BeatsEveryOtherDiagonal) {
    std::mt19937_64 rng(64);
    std::normal_distribution<double> perturb(0.0, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix u = oracle::random_orthogonal(rng, 8);
        const Matrix target = oracle::random_spd(rng, 8);
        const auto result = bahc::oracle(basis_of(u), target);
        const double best = (target - result.oracle_matrix).norm();
        for (int k = 0; k < 100; ++k) {
            Vector d = result.oracle_eigenvalues;
            for (int i = 0; i < 8; ++i) {
                d(i) += perturb(rng);
            }
            EXPECT_GE((target - u * d.asDiagonal() * u.transpose()).norm(), best - 1e-12);
        }
    }
}

TEST(Oracle, InvariantToSignsAndColumnOrder) {
    std::mt19937_64 rng(65);
    const Matrix u = oracle::random_orthogonal(rng, 5);
    const Matrix target = oracle::random_spd(rng, 5);
    Matrix shuffled(5, 5);
    const int order[] = {3, 0, 4, 1, 2};
    for (int k = 0; k < 5; ++k) {
        shuffled.col(k) = (k % 2 ? -1.0 : 1.0) * u.col(order[k]);
    }
    const auto a = bahc::oracle(basis_of(u), target);
    const auto b = bahc::oracle(basis_of(shuffled), target);
    EXPECT_LT((a.oracle_matrix - b.oracle_matrix).cwiseAbs().maxCoeff(), 1e-12);
    for (int k = 0; k < 5; ++k) {
        EXPECT_NEAR(b.oracle_eigenvalues(k), a.oracle_eigenvalues(order[k]), 1e-12);
    }
}

TEST(Oracle, RejectsMismatchedDimensions) {
    EXPECT_THROW(bahc::oracle(basis_of(Matrix::Identity(3, 3)), Matrix::Identity(4, 4)), bahc::DataError);
}

TEST(Residues, ByHand) {
    const auto equal = bahc::residues(Vector{{3.0, 1.0}}, Vector{{3.0, 1.0}});
    EXPECT_EQ(equal.high, 0.0);
    EXPECT_EQ(equal.low.value(), 0.0);

    const auto r = bahc::residues(Vector{{2.0, 1.0}}, Vector{{1.0, 1.0}});
    EXPECT_NEAR(r.high, std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(r.low.value(), std::sqrt(1.0 / 8.0), 1e-15);
}

TEST(Residues, PairByDescendingRank) {
    const auto a = bahc::residues(Vector{{1.0, 2.0}}, Vector{{1.0, 1.0}});
    EXPECT_NEAR(a.high, std::sqrt(0.5), 1e-15);
    const auto b = bahc::residues(Vector{{4.0, 1.0, 2.0}}, Vector{{2.0, 4.0, 1.0}});
    EXPECT_EQ(b.high, 0.0);
}

TEST(Residues, MatchLoopAndAreSymmetric) {
    std::mt19937_64 rng(66);
    for (int trial = 0; trial < 10; ++trial) {
        Vector lambda = random_positive(rng, 10);
        Vector z = random_positive(rng, 10);
        const auto r = bahc::residues(lambda, z);
        std::sort(lambda.data(), lambda.data() + 10, std::greater<>());
        std::sort(z.data(), z.data() + 10, std::greater<>());
        double hi = 0.0;
        double lo = 0.0;
        for (int i = 0; i < 10; ++i) {
            hi += std::pow(lambda(i) - z(i), 2) / 10.0;
            lo += std::pow(1.0 / lambda(i) - 1.0 / z(i), 2) / 10.0;
        }
        EXPECT_NEAR(r.high, std::sqrt(hi), 1e-12);
        EXPECT_NEAR(r.low.value(), std::sqrt(lo), 1e-12);
        const auto swapped = bahc::residues(z, lambda);
        EXPECT_EQ(swapped.high, r.high);
        EXPECT_EQ(swapped.low, r.low);
    }
}

TEST(Residues, NonpositiveValues) {
    const Vector lambda{{2.0, 1.0, 0.0}};
    const Vector z{{1.0, 1.0, 1.0}};
    const auto r = bahc::residues(lambda, z);
    EXPECT_FALSE(r.low.has_value());
    EXPECT_NEAR(r.high, std::sqrt(2.0 / 3.0), 1e-15);
    try {
        bahc::residue_low(lambda, z);
        FAIL() << "expected NonpositiveEigenvalueError";
    } catch (const bahc::NonpositiveEigenvalueError& e) {
        EXPECT_EQ(e.rank(), 2U);
    }
    EXPECT_THROW(bahc::residues(Vector{{1.0}}, Vector{{1.0, 2.0}}), bahc::DataError);
}

TEST(Stability, ZeroForOwnBasis) {
    std::mt19937_64 rng(67);
    const Matrix m = oracle::random_spd(rng, 9);
    const auto decomp = bahc::eigendecompose(m);
    EXPECT_LT(bahc::eigenvector_stability(decomp, m, bahc::MatrixMode::Covariance), 1e-9);
    EXPECT_LT(bahc::eigenvector_stability(decomp, m, bahc::MatrixMode::Correlation), 1e-9);
}

TEST(Stability, IdentityBasis) {
    Matrix diag = Matrix::Zero(3, 3);
    diag.diagonal() << 3.0, 2.0, 1.0;
    const auto identity = basis_of(Matrix::Identity(3, 3));
    EXPECT_EQ(bahc::eigenvector_stability(identity, diag, bahc::MatrixMode::Covariance), 0.0);

    Matrix c = Matrix::Identity(3, 3);
    c(0, 1) = c(1, 0) = 0.3;
    // Oracle keeps the diagonal, so only the off-diagonal pair remains.
    EXPECT_NEAR(bahc::eigenvector_stability(identity, c, bahc::MatrixMode::Covariance),
                std::sqrt(2 * 0.09 / 9.0), 1e-15);
    EXPECT_NEAR(bahc::eigenvector_stability(identity, c, bahc::MatrixMode::Correlation),
                std::sqrt(2 * 0.09 / 6.0), 1e-15);
}

TEST(Stability, PositiveForForeignBasis) {
    std::mt19937_64 rng(68);
    const Matrix u = oracle::random_orthogonal(rng, 6);
    const Matrix target = oracle::random_spd(rng, 6);
    EXPECT_GT(bahc::eigenvector_stability(basis_of(u), target, bahc::MatrixMode::Covariance), 1e-3);
}
