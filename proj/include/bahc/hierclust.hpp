#pragma once

// Average-linkage agglomerative clustering on d = 1 - c and the filtered
// correlation matrix obtained by replacing every between-cluster block by its
// average correlation.

#include <bahc/error.hpp>
#include <bahc/matrix_core.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace bahc {

using DistanceMatrix = Matrix;

/// One agglomeration step. Leaves are 0..n-1; the k-th merge creates id n+k.
/// `left` < `right` always holds.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t id = 0;
    std::size_t size = 0;

    friend bool operator==(const Merge&, const Merge&) = default;
};

class Dendrogram {
public:
    Dendrogram() = default;

    Dendrogram(std::size_t leaves, std::vector<Merge> merges) : leaves_(leaves), merges_(std::move(merges)) {
        validate();
    }

    [[nodiscard]] std::size_t leaves() const noexcept { return leaves_; }
    [[nodiscard]] const std::vector<Merge>& merges() const noexcept { return merges_; }

    /// Leaf members of every cluster id, leaves first then merges in order.
    [[nodiscard]] std::vector<std::vector<std::size_t>> members() const {
        std::vector<std::vector<std::size_t>> out(leaves_ + merges_.size());
        for (std::size_t i = 0; i < leaves_; ++i) {
            out[i] = {i};
        }
        for (const Merge& m : merges_) {
            auto& joined = out[m.id];
            joined = out[m.left];
            joined.insert(joined.end(), out[m.right].begin(), out[m.right].end());
            std::sort(joined.begin(), joined.end());
        }
        return out;
    }

    friend bool operator==(const Dendrogram&, const Dendrogram&) = default;

private:
    void validate() const {
        if (leaves_ == 0) {
            throw DataError("dendrogram needs at least one leaf");
        }
        if (merges_.size() + 1 != leaves_) {
            throw DataError("dendrogram on " + std::to_string(leaves_) + " leaves needs " +
                            std::to_string(leaves_ - 1) + " merges");
        }
        std::vector<bool> used(2 * leaves_ - 1, false);
        std::vector<std::size_t> size(2 * leaves_ - 1, 1);
        for (std::size_t k = 0; k < merges_.size(); ++k) {
            const Merge& m = merges_[k];
            if (m.id != leaves_ + k || m.left >= m.right || m.right >= m.id || used[m.left] || used[m.right]) {
                throw DataError("malformed merge record at step " + std::to_string(k));
            }
            used[m.left] = used[m.right] = true;
            size[m.id] = size[m.left] + size[m.right];
            if (size[m.id] != m.size) {
                throw DataError("merge record at step " + std::to_string(k) + " has wrong member count");
            }
        }
    }

    std::size_t leaves_ = 0;
    std::vector<Merge> merges_;
};

/// d_ij = 1 - c_ij with an exactly zero diagonal.
inline DistanceMatrix correlation_to_distance(const CorrelationMatrix& c) {
    DistanceMatrix d = Matrix::Ones(c.rows(), c.cols()) - c;
    d.diagonal().setZero();
    detail::mirror_lower(d);
    return d;
}

namespace detail {

/// Strict total order on candidate merges: distance, then (low id, high id).
struct MergeKey {
    double distance;
    std::size_t low;
    std::size_t high;

    static MergeKey of(double distance, std::size_t a, std::size_t b) noexcept {
        return {distance, std::min(a, b), std::max(a, b)};
    }
    bool operator<(const MergeKey& o) const noexcept {
        return std::tie(distance, low, high) < std::tie(o.distance, o.low, o.high);
    }
};

}  // namespace detail

/// Average-linkage (UPGMA) clustering. Inter-cluster distances are maintained
/// with the Lance-Williams update (n_p rho_pr + n_q rho_qr) / (n_p + n_q); the
/// minimal pair is found through per-cluster nearest-neighbour caches, which
/// gives the same merge sequence as a full rescan. Ties on the distance go to
/// the lexicographically smallest (min id, max id) pair.
inline Dendrogram average_linkage(const DistanceMatrix& distances) {
    const Index n = distances.rows();
    if (n < 1 || distances.cols() != n) {
        throw DataError("average_linkage expects a non-empty square distance matrix");
    }
    const auto leaves = static_cast<std::size_t>(n);
    Matrix d = distances;
    std::vector<std::size_t> cluster_id(leaves);
    std::vector<std::size_t> cluster_size(leaves, 1);
    std::vector<bool> active(leaves, true);
    std::vector<Index> nearest(leaves, -1);
    std::vector<detail::MergeKey> nearest_key(leaves);
    for (std::size_t i = 0; i < leaves; ++i) {
        cluster_id[i] = i;
    }

    auto rescan = [&](Index slot) {
        nearest[slot] = -1;
        for (Index other = 0; other < n; ++other) {
            if (other == slot || !active[other]) {
                continue;
            }
            const auto key = detail::MergeKey::of(d(slot, other), cluster_id[slot], cluster_id[other]);
            if (nearest[slot] < 0 || key < nearest_key[slot]) {
                nearest[slot] = other;
                nearest_key[slot] = key;
            }
        }
    };

    for (Index i = 0; i < n; ++i) {
        rescan(i);
    }

    std::vector<Merge> merges;
    merges.reserve(leaves - 1);
    for (std::size_t step = 0; step + 1 < leaves; ++step) {
        Index p = -1;
        for (Index i = 0; i < n; ++i) {
            if (active[i] && nearest[i] >= 0 && (p < 0 || nearest_key[i] < nearest_key[p])) {
                p = i;
            }
        }
        Index q = nearest[p];
        if (q < p) {
            std::swap(p, q);
        }
        const double np = static_cast<double>(cluster_size[p]);
        const double nq = static_cast<double>(cluster_size[q]);
        const std::size_t new_id = leaves + step;
        merges.push_back(Merge{std::min(cluster_id[p], cluster_id[q]), std::max(cluster_id[p], cluster_id[q]),
                               d(p, q), new_id, cluster_size[p] + cluster_size[q]});

        // The merged cluster lives in slot p; slot q is retired.
        for (Index k = 0; k < n; ++k) {
            if (active[k] && k != p && k != q) {
                const double updated = (np * d(p, k) + nq * d(q, k)) / (np + nq);
                d(p, k) = updated;
                d(k, p) = updated;
            }
        }
        active[q] = false;
        nearest[q] = -1;
        cluster_id[p] = new_id;
        cluster_size[p] += cluster_size[q];

        for (Index k = 0; k < n; ++k) {
            if (!active[k] || k == p) {
                continue;
            }
            if (nearest[k] == p || nearest[k] == q) {
                rescan(k);
            } else {
                const auto key = detail::MergeKey::of(d(k, p), cluster_id[k], new_id);
                if (key < nearest_key[k]) {
                    nearest[k] = p;
                    nearest_key[k] = key;
                }
            }
        }
        rescan(p);
    }
    return Dendrogram(leaves, std::move(merges));
}

/// Height of the merge at which leaves i and j first share a cluster.
inline DistanceMatrix cophenetic_matrix(const Dendrogram& dendrogram) {
    const auto n = static_cast<Index>(dendrogram.leaves());
    DistanceMatrix out = Matrix::Zero(n, n);
    const auto members = dendrogram.members();
    for (const Merge& m : dendrogram.merges()) {
        for (std::size_t a : members[m.left]) {
            for (std::size_t b : members[m.right]) {
                out(static_cast<Index>(a), static_cast<Index>(b)) = m.height;
                out(static_cast<Index>(b), static_cast<Index>(a)) = m.height;
            }
        }
    }
    return out;
}

struct HcalResult {
    CorrelationMatrix filtered;
    Dendrogram dendrogram;
};

/// Clusters C with average linkage on 1 - C, then sets c_ij = 1 - rho_pq for
/// every pair (i, j) first joined by the merge of clusters p and q.
inline HcalResult hcal(const CorrelationMatrix& c) {
    HcalResult out{Matrix::Identity(c.rows(), c.cols()), average_linkage(correlation_to_distance(c))};
    const auto members = out.dendrogram.members();
    for (const Merge& m : out.dendrogram.merges()) {
        const double value = 1.0 - m.height;
        for (std::size_t a : members[m.left]) {
            for (std::size_t b : members[m.right]) {
                out.filtered(static_cast<Index>(a), static_cast<Index>(b)) = value;
                out.filtered(static_cast<Index>(b), static_cast<Index>(a)) = value;
            }
        }
    }
    return out;
}

inline CorrelationMatrix hcal_filter(const CorrelationMatrix& c) { return hcal(c).filtered; }

namespace detail {

inline std::vector<double> strict_lower(const Matrix& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.rows() * (m.rows() - 1) / 2));
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = j + 1; i < m.rows(); ++i) {
            out.push_back(m(i, j));
        }
    }
    return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto count = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= count;
    my /= count;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw DataError("cophenetic matrix is constant; correlation undefined");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace detail

/// Pearson correlation between the strict lower triangles of the two
/// cophenetic matrices.
inline double cophenetic_correlation(const Dendrogram& a, const Dendrogram& b) {
    if (a.leaves() != b.leaves()) {
        throw DataError("dendrograms have different leaf counts");
    }
    if (a.leaves() < 3) {
        throw DataError("cophenetic correlation needs at least 3 leaves");
    }
    return detail::pearson(detail::strict_lower(cophenetic_matrix(a)), detail::strict_lower(cophenetic_matrix(b)));
}

/// Linkage table: one merge per line, "left right height count".
inline void write_linkage_table(std::ostream& out, const Dendrogram& dendrogram) {
    char buffer[64];
    for (const Merge& m : dendrogram.merges()) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", m.height);
        out << m.left << ' ' << m.right << ' ' << buffer << ' ' << m.size << '\n';
    }
}

inline Dendrogram read_linkage_table(std::istream& in) {
    std::vector<Merge> merges;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        Merge m;
        if (!(fields >> m.left >> m.right >> m.height >> m.size)) {
            throw DataError("malformed linkage line: " + line);
        }
        merges.push_back(m);
    }
    const std::size_t leaves = merges.size() + 1;
    for (std::size_t k = 0; k < merges.size(); ++k) {
        merges[k].id = leaves + k;
    }
    return Dendrogram(leaves, std::move(merges));
}

}  // namespace bahc
