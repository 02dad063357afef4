#ifndef DREAMS_AFFINITY_HPP
#define DREAMS_AFFINITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "dreams/core.hpp"
#include "dreams/parallel.hpp"

namespace dreams {

using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exact k-nearest-neighbor lists. Row i holds neighbors of point i by
/// ascending squared distance, ties broken by lower index. No self-neighbors.
template <typename Scalar>
struct NeighborGraph {
    Index k = 0;
    IndexMatrix indices;
    Matrix<Scalar> distances;

    Index size() const { return indices.rows(); }
};

template <typename Derived>
NeighborGraph<typename Derived::Scalar> knn_exact(const Eigen::MatrixBase<Derived>& X, Index k) {
    using Scalar = typename Derived::Scalar;
    const Index n = X.rows();
    if (k < 1 || k >= n)
        throw ConfigError("knn_exact: k = " + std::to_string(k) + " must satisfy 1 <= k < n = " +
                          std::to_string(n));
    const Matrix<Scalar> data = X;
    NeighborGraph<Scalar> graph;
    graph.k = k;
    graph.indices.resize(n, k);
    graph.distances.resize(n, k);

    parallel_for(0, n, [&](std::ptrdiff_t i) {
        std::vector<std::pair<Scalar, Index>> candidates;
        candidates.reserve(static_cast<std::size_t>(n - 1));
        const auto xi = data.row(i);
        for (Index j = 0; j < n; ++j) {
            if (j == i)
                continue;
            candidates.emplace_back((data.row(j) - xi).squaredNorm(), j);
        }
        const auto kth = candidates.begin() + k;
        std::nth_element(candidates.begin(), kth - 1, candidates.end());
        std::sort(candidates.begin(), kth);
        for (Index c = 0; c < k; ++c) {
            graph.distances(i, c) = candidates[static_cast<std::size_t>(c)].first;
            graph.indices(i, c) = candidates[static_cast<std::size_t>(c)].second;
        }
    });
    return graph;
}

template <typename Scalar>
struct RowCalibration {
    Scalar sigma = 0;
    Scalar beta = 0;
    /// Conditional probabilities p_{j|i} over the supplied neighbors; sums to 1.
    Vector<Scalar> p;
    /// exp of the entropy (nats) of `p`.
    Scalar perplexity = 0;
    bool converged = false;
};

/**
 * Finds the Gaussian precision beta = 1 / (2 sigma^2) whose conditional
 * distribution over `distances` (squared) has exp(entropy) = perplexity.
 *
 * Bisection runs on log(beta) inside [1e-12, 1e12] for at most 200 steps.
 * When the target cannot be reached within 1e-5 the closest solution found is
 * returned with `converged == false`.
 */
template <typename Scalar>
RowCalibration<Scalar> calibrate_row(std::span<const Scalar> distances, Scalar perplexity) {
    const std::size_t k = distances.size();
    if (k == 0)
        throw ConfigError("calibrate_row: empty neighbor list");
    if (!(perplexity >= Scalar(1)) || perplexity > static_cast<Scalar>(k))
        throw ConfigError("calibrate_row: perplexity must lie in [1, k]");
    Scalar dmin = std::numeric_limits<Scalar>::infinity();
    for (Scalar d : distances) {
        if (!(d >= Scalar(0)))
            throw ConfigError("calibrate_row: distances must be non-negative");
        dmin = std::min(dmin, d);
    }
    if (!std::isfinite(dmin))
        throw ConfigError("calibrate_row: all distances are infinite");

    const Scalar target = std::log(perplexity);
    Vector<Scalar> w(static_cast<Index>(k));

    // Entropy of the distribution at precision beta; fills w with probabilities.
    // Shifting by dmin leaves the distribution unchanged and avoids underflow.
    auto entropy = [&](Scalar beta) {
        Scalar sum = 0, weighted = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const Scalar shifted = distances[j] - dmin;
            if (!std::isfinite(shifted)) {
                w(static_cast<Index>(j)) = 0;
                continue;
            }
            const Scalar v = std::exp(-beta * shifted);
            w(static_cast<Index>(j)) = v;
            sum += v;
            weighted += v * shifted;
        }
        w /= sum;
        return std::log(sum) + beta * weighted / sum;
    };

    Scalar log_lo = std::log(Scalar(1e-12));
    Scalar log_hi = std::log(Scalar(1e12));
    Scalar best_beta = 1, best_err = std::numeric_limits<Scalar>::infinity();
    Vector<Scalar> best_p;
    for (int step = 0; step < 200; ++step) {
        const Scalar log_beta = Scalar(0.5) * (log_lo + log_hi);
        const Scalar beta = std::exp(log_beta);
        const Scalar h = entropy(beta);
        const Scalar err = std::abs(h - target);
        if (err < best_err) {
            best_err = err;
            best_beta = beta;
            best_p = w;
        }
        if (err <= Scalar(1e-13))
            break;
        if (h > target)
            log_lo = log_beta; // too flat: sharpen
        else
            log_hi = log_beta;
        if (log_hi - log_lo <= std::numeric_limits<Scalar>::epsilon() * Scalar(4))
            break;
    }

    RowCalibration<Scalar> out;
    out.beta = best_beta;
    out.sigma = std::sqrt(Scalar(1) / (Scalar(2) * best_beta));
    out.p = std::move(best_p);
    Scalar h = 0;
    for (Index j = 0; j < out.p.size(); ++j)
        if (out.p(j) > Scalar(0))
            h -= out.p(j) * std::log(out.p(j));
    out.perplexity = std::exp(h);
    out.converged = std::abs(out.perplexity - perplexity) <= Scalar(1e-5);
    return out;
}

/**
 * Symmetric input similarities p_ij = (p_{j|i} + p_{i|j}) / (2n).
 *
 * Both triangles are stored and every (i, j) holds the same value as (j, i).
 * Only strictly positive entries are kept.
 */
template <typename Scalar>
struct SparseAffinity {
    Eigen::SparseMatrix<Scalar, Eigen::RowMajor> P;
    /// Calibrated Gaussian bandwidth per point.
    Vector<Scalar> sigma;
    Scalar perplexity = 0;
    Index k = 0;
    /// Rows whose calibration missed the target perplexity.
    Index unconverged_rows = 0;

    Index size() const { return P.rows(); }
    Scalar sum() const { return P.sum(); }
};

/// Wraps an arbitrary symmetric, non-negative n x n matrix with zero diagonal.
template <typename Derived>
SparseAffinity<typename Derived::Scalar> affinity_from_dense(const Eigen::MatrixBase<Derived>& dense) {
    using Scalar = typename Derived::Scalar;
    SparseAffinity<Scalar> out;
    out.P = dense.sparseView();
    out.P.prune([](Index, Index, const Scalar& v) { return v > Scalar(0); });
    out.P.makeCompressed();
    out.sigma = Vector<Scalar>::Zero(dense.rows());
    return out;
}

/// Builds P from k exact nearest neighbors; k = 0 selects ceil(3 * perplexity).
template <typename Derived>
SparseAffinity<typename Derived::Scalar> build_affinities(const Eigen::MatrixBase<Derived>& X,
                                                          typename Derived::Scalar perplexity, Index k = 0) {
    using Scalar = typename Derived::Scalar;
    const Index n = X.rows();
    if (!(perplexity >= Scalar(2)))
        throw ConfigError("build_affinities: perplexity must be at least 2");
    if (k == 0)
        k = static_cast<Index>(std::ceil(Scalar(3) * perplexity));
    if (static_cast<Scalar>(k) < perplexity)
        throw ConfigError("build_affinities: k must be at least the perplexity");
    require_valid(X, "build_affinities");

    const NeighborGraph<Scalar> graph = knn_exact(X, k);

    SparseAffinity<Scalar> out;
    out.perplexity = perplexity;
    out.k = k;
    out.sigma.resize(n);
    Matrix<Scalar> conditional(n, k);
    std::vector<char> converged(static_cast<std::size_t>(n));
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        const auto row = graph.distances.row(i);
        const auto cal = calibrate_row<Scalar>(std::span<const Scalar>(row.data(), static_cast<std::size_t>(k)),
                                               perplexity);
        out.sigma(i) = cal.sigma;
        conditional.row(i) = cal.p.transpose();
        converged[static_cast<std::size_t>(i)] = cal.converged;
    });
    out.unconverged_rows = static_cast<Index>(std::count(converged.begin(), converged.end(), 0));

    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(static_cast<std::size_t>(2 * n * k));
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < k; ++c) {
            const Index j = graph.indices(i, c);
            const Scalar v = conditional(i, c);
            triplets.emplace_back(i, j, v);
            triplets.emplace_back(j, i, v);
        }
    }
    out.P.resize(n, n);
    // Duplicates are summed: (i, j) and (j, i) each receive exactly the pair
    // {p_{j|i}, p_{i|j}}, and two-term addition is commutative, so P is
    // bitwise symmetric.
    out.P.setFromTriplets(triplets.begin(), triplets.end());
    out.P *= Scalar(1) / (Scalar(2) * static_cast<Scalar>(n));
    out.P.prune([](Index, Index, const Scalar& v) { return v > Scalar(0); });
    out.P.makeCompressed();
    return out;
}

} // namespace dreams

#endif // DREAMS_AFFINITY_HPP
