#pragma once

// Reference implementations used only by the test suites. They follow the
// textbook definitions directly and share no code paths with include/bahc.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat random_gaussian(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> normal;
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = normal(rng);
        }
    }
    return m;
}

/// Two-pass covariance with divisor t.
inline Mat covariance(const Mat& r) {
    const int n = static_cast<int>(r.rows());
    const int t = static_cast<int>(r.cols());
    std::vector<double> mean(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int h = 0; h < t; ++h) {
            mean[i] += r(i, h);
        }
        mean[i] /= t;
    }
    Mat s(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int h = 0; h < t; ++h) {
                acc += (r(i, h) - mean[i]) * (r(j, h) - mean[j]);
            }
            s(i, j) = acc / t;
        }
    }
    return s;
}

inline Mat correlation(const Mat& r) {
    Mat s = covariance(r);
    Mat c(s.rows(), s.cols());
    for (int i = 0; i < s.rows(); ++i) {
        for (int j = 0; j < s.cols(); ++j) {
            c(i, j) = s(i, j) / std::sqrt(s(i, i) * s(j, j));
        }
    }
    return c;
}

/// Random valid correlation matrix: correlation of a Gaussian sample.
inline Mat random_correlation(std::mt19937_64& rng, int n, int t) { return correlation(random_gaussian(rng, n, t)); }

/// Random symmetric distance matrix with zero diagonal and entries in (0, 2).
inline Mat random_distance(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.01, 2.0);
    Mat d = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            d(i, j) = d(j, i) = u(rng);
        }
    }
    return d;
}

struct NaiveMerge {
    std::size_t left;
    std::size_t right;
    double height;
    std::size_t size;
};

/// Average linkage recomputing every inter-cluster average from the raw
/// distances at every step. Ties go to the smallest (min id, max id).
inline std::vector<NaiveMerge> naive_average_linkage(const Mat& d) {
    const std::size_t n = static_cast<std::size_t>(d.rows());
    std::vector<std::pair<std::size_t, std::vector<int>>> clusters;
    for (std::size_t i = 0; i < n; ++i) {
        clusters.push_back({i, {static_cast<int>(i)}});
    }
    std::vector<NaiveMerge> merges;
    std::size_t next_id = n;
    while (clusters.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_lo = 0;
        std::size_t best_hi = 0;
        std::size_t bp = 0;
        std::size_t bq = 0;
        for (std::size_t p = 0; p < clusters.size(); ++p) {
            for (std::size_t q = p + 1; q < clusters.size(); ++q) {
                double sum = 0.0;
                for (int i : clusters[p].second) {
                    for (int j : clusters[q].second) {
                        sum += d(i, j);
                    }
                }
                const double rho =
                    sum / static_cast<double>(clusters[p].second.size() * clusters[q].second.size());
                const std::size_t lo = std::min(clusters[p].first, clusters[q].first);
                const std::size_t hi = std::max(clusters[p].first, clusters[q].first);
                if (rho < best || (rho == best && std::make_pair(lo, hi) < std::make_pair(best_lo, best_hi))) {
                    best = rho;
                    best_lo = lo;
                    best_hi = hi;
                    bp = p;
                    bq = q;
                }
            }
        }
        std::vector<int> joined = clusters[bp].second;
        joined.insert(joined.end(), clusters[bq].second.begin(), clusters[bq].second.end());
        merges.push_back({best_lo, best_hi, best, joined.size()});
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bq));
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bp));
        clusters.push_back({next_id++, std::move(joined)});
    }
    return merges;
}

/// Cophenetic distance by walking both leaves up the parent chain.
inline double cophenetic_by_path(const std::vector<NaiveMerge>& merges, std::size_t leaves, std::size_t a,
                                 std::size_t b) {
    if (a == b) {
        return 0.0;
    }
    std::vector<std::size_t> parent(leaves + merges.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t k = 0; k < merges.size(); ++k) {
        parent[merges[k].left] = leaves + k;
        parent[merges[k].right] = leaves + k;
    }
    std::vector<std::size_t> ancestors;
    for (std::size_t x = a; x != std::numeric_limits<std::size_t>::max(); x = parent[x]) {
        ancestors.push_back(x);
    }
    for (std::size_t y = b; y != std::numeric_limits<std::size_t>::max(); y = parent[y]) {
        if (std::find(ancestors.begin(), ancestors.end(), y) != ancestors.end()) {
            return merges[y - leaves].height;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Cyclic Jacobi eigenvalue iteration; eigenvalues descending, vectors as columns.
inline std::pair<Vec, Mat> jacobi_eigen(Mat a) {
    const int n = static_cast<int>(a.rows());
    Mat v = Mat::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        if (off < 1e-30) {
            break;
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
    Vec values(n);
    Mat vectors(n, n);
    for (int k = 0; k < n; ++k) {
        values(k) = a(order[k], order[k]);
        vectors.col(k) = v.col(order[k]);
    }
    return {values, vectors};
}

/// Gaussian elimination with partial pivoting.
inline Vec gauss_solve(Mat a, Vec b) {
    const int n = static_cast<int>(a.rows());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) {
                pivot = r;
            }
        }
        a.row(col).swap(a.row(pivot));
        std::swap(b(col), b(pivot));
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (int k = col; k < n; ++k) {
                a(r, k) -= f * a(col, k);
            }
            b(r) -= f * b(col);
        }
    }
    Vec x(n);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b(r);
        for (int k = r + 1; k < n; ++k) {
            acc -= a(r, k) * x(k);
        }
        x(r) = acc / a(r, r);
    }
    return x;
}

inline double quadratic_form(const Vec& w, const Mat& s) {
    double acc = 0.0;
    for (int i = 0; i < w.size(); ++i) {
        for (int j = 0; j < w.size(); ++j) {
            acc += w(i) * s(i, j) * w(j);
        }
    }
    return acc;
}

/// Minimum of w'Sw over the simplex grid with the given step (n <= 4).
inline double simplex_grid_minimum(const Mat& s, double step) {
    const int n = static_cast<int>(s.rows());
    const int units = static_cast<int>(std::lround(1.0 / step));
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> parts(n, 0);
    // enumerate compositions of `units` into n nonnegative parts
    auto recurse = [&](auto&& self, int index, int remaining) -> void {
        if (index == n - 1) {
            parts[index] = remaining;
            Vec w(n);
            for (int i = 0; i < n; ++i) {
                w(i) = parts[i] * step;
            }
            best = std::min(best, quadratic_form(w, s));
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            parts[index] = k;
            self(self, index + 1, remaining - k);
        }
    };
    recurse(recurse, 0, units);
    return best;
}

/// Random symmetric positive-definite matrix with a spread of eigenvalues.
inline Mat random_spd(std::mt19937_64& rng, int n) {
    Mat a = random_gaussian(rng, n, n + 3);
    Mat s = a * a.transpose() / static_cast<double>(n + 3);
    s.diagonal().array() += 0.05;
    return s;
}

/// Random orthogonal matrix (QR of a Gaussian matrix).
inline Mat random_orthogonal(std::mt19937_64& rng, int n) {
    Eigen::HouseholderQR<Mat> qr(random_gaussian(rng, n, n));
    return qr.householderQ() * Mat::Identity(n, n);
}

/// Pearson chi-square statistic against a uniform expectation.
inline double chi_square_statistic(const std::vector<std::size_t>& counts) {
    double total = 0.0;
    for (auto c : counts) {
        total += static_cast<double>(c);
    }
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
    }
    return stat;
}

}  // namespace oracle
