#ifndef DREAMS_METRICS_HPP
#define DREAMS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dreams/affinity.hpp"
#include "dreams/core.hpp"
#include "dreams/rng.hpp"

namespace dreams {

/// Mean fraction of each point's k nearest neighbors in X that are also among its k nearest in Y.
template <typename DerivedX, typename DerivedY>
double knn_recall(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y, Index k = 10) {
    if (X.rows() != Y.rows())
        throw ShapeError("knn_recall: X and Y differ in row count");
    const Index n = X.rows();
    if (k < 1 || k >= n)
        throw ConfigError("knn_recall: k must satisfy 1 <= k < n");
    const auto high = knn_exact(X, k);
    const auto low = knn_exact(Y, k);
    std::vector<Index> a(static_cast<std::size_t>(k)), b(static_cast<std::size_t>(k)), common;
    std::size_t hits = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < k; ++c) {
            a[static_cast<std::size_t>(c)] = high.indices(i, c);
            b[static_cast<std::size_t>(c)] = low.indices(i, c);
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        common.clear();
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        hits += common.size();
    }
    return static_cast<double>(hits) / (static_cast<double>(n) * static_cast<double>(k));
}

/// 1-based ranks with ties assigned their average rank.
inline std::vector<double> mid_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]])
            ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j); // mean of ranks i+1 .. j
        for (std::size_t t = i; t < j; ++t)
            ranks[order[t]] = rank;
        i = j;
    }
    return ranks;
}

/// Pearson correlation; throws DegenerateInputError when either input is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ShapeError("pearson: inputs differ in length");
    if (a.size() < 2)
        throw ShapeError("pearson: need at least two values");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0) || !(sbb > 0))
        throw DegenerateInputError("correlation undefined for constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Spearman rank correlation: Pearson correlation of mid-ranks.
inline double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ShapeError("spearman: inputs differ in length");
    if (a.size() < 2)
        throw ShapeError("spearman: need at least two values");
    const auto ra = mid_ranks(a);
    const auto rb = mid_ranks(b);
    return pearson(ra, rb);
}

struct CpdResult {
    double value = 0;
    /// Number of points actually sampled.
    Index sample = 0;
    /// The requested sample exceeded n and was clamped.
    bool clamped = false;
};

/**
 * Correlation of pairwise distances: Spearman correlation between the
 * Euclidean distances of all pairs among `sample` points drawn without
 * replacement, measured in X and in Y.
 */
template <typename DerivedX, typename DerivedY>
CpdResult cpd_detailed(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y, Index sample,
                       Rng& rng) {
    if (X.rows() != Y.rows())
        throw ShapeError("cpd: X and Y differ in row count");
    if (sample < 2)
        throw ConfigError("cpd: sample must be at least 2");
    const Index n = X.rows();
    CpdResult out;
    out.clamped = sample > n;
    out.sample = std::min(sample, n);
    const auto idx = sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(out.sample), rng);
    const std::size_t s = idx.size();
    std::vector<double> dx, dy;
    dx.reserve(s * (s - 1) / 2);
    dy.reserve(s * (s - 1) / 2);
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = a + 1; b < s; ++b) {
            const auto ia = static_cast<Index>(idx[a]), ib = static_cast<Index>(idx[b]);
            dx.push_back(static_cast<double>((X.row(ia) - X.row(ib)).norm()));
            dy.push_back(static_cast<double>((Y.row(ia) - Y.row(ib)).norm()));
        }
    }
    out.value = spearman(dx, dy);
    return out;
}

template <typename DerivedX, typename DerivedY>
double cpd(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y, Index sample, Rng& rng) {
    return cpd_detailed(X, Y, sample, rng).value;
}

struct MetricReport {
    double knn = 0;
    double cpd = 0;
    Index k = 10;
    Index cpd_sample = 1000;
    std::uint64_t seed = 0;

    bool operator==(const MetricReport&) const = default;
};

/// KNN recall and CPD of Y against X. The CPD sample is drawn from Rng(seed).
template <typename DerivedX, typename DerivedY>
MetricReport evaluate(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y, std::uint64_t seed,
                      Index k = 10, Index cpd_sample = 1000) {
    MetricReport r;
    r.k = k;
    r.seed = seed;
    r.knn = knn_recall(X, Y, k);
    Rng rng(seed);
    const auto c = cpd_detailed(X, Y, cpd_sample, rng);
    r.cpd = c.value;
    r.cpd_sample = c.sample;
    return r;
}

struct MethodScore {
    std::string method;
    double knn = 0;
    double cpd = 0;
    double s = 0;

    bool operator==(const MethodScore&) const = default;
};

/// Min-max normalized local/global score over a pool of methods.
struct ScoreTable {
    std::vector<MethodScore> rows;
    double knn_min = 0, knn_max = 0;
    double cpd_min = 0, cpd_max = 0;
    /// All methods tie on that metric; its normalized term is 0.5 for everyone.
    bool knn_degenerate = false;
    bool cpd_degenerate = false;

    const MethodScore& best() const {
        return *std::max_element(rows.begin(), rows.end(),
                                 [](const MethodScore& a, const MethodScore& b) { return a.s < b.s; });
    }
};

/// s = ((KNN - KNN_min) / (KNN_max - KNN_min) + (CPD - CPD_min) / (CPD_max - CPD_min)) / 2.
inline ScoreTable aggregate_scores(const std::vector<MethodScore>& methods) {
    if (methods.size() < 2)
        throw ConfigError("aggregate_scores: need at least two methods");
    ScoreTable t;
    t.rows = methods;
    auto [kmin, kmax] = std::minmax_element(methods.begin(), methods.end(),
                                            [](const MethodScore& a, const MethodScore& b) { return a.knn < b.knn; });
    auto [cmin, cmax] = std::minmax_element(methods.begin(), methods.end(),
                                            [](const MethodScore& a, const MethodScore& b) { return a.cpd < b.cpd; });
    t.knn_min = kmin->knn;
    t.knn_max = kmax->knn;
    t.cpd_min = cmin->cpd;
    t.cpd_max = cmax->cpd;
    t.knn_degenerate = !(t.knn_max > t.knn_min);
    t.cpd_degenerate = !(t.cpd_max > t.cpd_min);
    for (auto& row : t.rows) {
        const double local = t.knn_degenerate ? 0.5 : (row.knn - t.knn_min) / (t.knn_max - t.knn_min);
        const double global = t.cpd_degenerate ? 0.5 : (row.cpd - t.cpd_min) / (t.cpd_max - t.cpd_min);
        row.s = 0.5 * (local + global);
    }
    return t;
}

} // namespace dreams

#endif // DREAMS_METRICS_HPP
