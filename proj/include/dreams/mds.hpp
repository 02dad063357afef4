#ifndef DREAMS_MDS_HPP
#define DREAMS_MDS_HPP

#include <cmath>
#include <vector>

#include "dreams/core.hpp"
#include "dreams/parallel.hpp"
#include "dreams/pca.hpp"
#include "dreams/rng.hpp"

namespace dreams {

enum class MdsInit { pca, random };

struct MdsConfig {
    Index max_iters = 300;
    /// Stop when the relative stress decrease of one step falls below this.
    double tol = 1e-6;
    MdsInit init = MdsInit::pca;
    /// Standard deviation of the first output coordinate.
    double output_std = 10.0;
};

template <typename Scalar>
struct MdsResult {
    /// Centered, rotated to principal axes, scaled so column 0 has std output_std.
    Embedding<Scalar> embedding;
    /// Raw stress sum_{i<j} (delta_ij - d_ij)^2 of the unscaled configuration.
    Scalar stress = 0;
    /// Stress before each Guttman step, followed by the final stress.
    std::vector<Scalar> stress_trace;
    /// Factor applied to the unscaled configuration; embedding / scale has stress `stress`.
    Scalar scale = 1;
    Index iterations = 0;
    bool converged = false;
};

namespace detail {

// Packed strict upper triangle of the Euclidean distance matrix.
template <typename Scalar>
class PackedDistances {
public:
    template <typename Derived>
    explicit PackedDistances(const Eigen::MatrixBase<Derived>& X) : n_(X.rows()) {
        values_.resize(static_cast<std::size_t>(n_ * (n_ - 1) / 2));
        const Matrix<Scalar> data = X;
        parallel_for(0, n_, [&](std::ptrdiff_t i) {
            for (Index j = i + 1; j < n_; ++j)
                values_[offset(i, j)] = (data.row(i) - data.row(j)).norm();
        });
    }

    Scalar operator()(Index i, Index j) const {
        if (i == j)
            return 0;
        return i < j ? values_[offset(i, j)] : values_[offset(j, i)];
    }

    Scalar sum_squares() const {
        Scalar s = 0;
        for (Scalar v : values_)
            s += v * v;
        return s;
    }

private:
    std::size_t offset(Index i, Index j) const {
        return static_cast<std::size_t>(i * (2 * n_ - i - 1) / 2 + (j - i - 1));
    }

    Index n_;
    std::vector<Scalar> values_;
};

} // namespace detail

/**
 * Metric MDS by SMACOF stress majorization with unit weights.
 *
 * Each step applies the Guttman transform Y <- B(Y) Y / n, where
 * B_ij = -delta_ij / d_ij for d_ij > 0 and 0 for coincident points. Stress is
 * non-increasing across steps.
 */
template <typename Derived>
MdsResult<typename Derived::Scalar> smacof(const Eigen::MatrixBase<Derived>& X, const MdsConfig& cfg, Rng& rng) {
    using Scalar = typename Derived::Scalar;
    const Index n = X.rows();
    if (n < 3)
        throw ConfigError("smacof: need at least three points");
    if (cfg.max_iters < 1)
        throw ConfigError("smacof: max_iters must be at least 1");
    require_valid(X, "smacof");

    const detail::PackedDistances<Scalar> delta(X);
    const Scalar delta_ss = delta.sum_squares();

    Embedding<Scalar> Y(n, 2);
    if (cfg.init == MdsInit::pca && X.cols() >= 2) {
        Y = project(fit_pca(X, 2), X);
    } else {
        for (Index i = 0; i < n; ++i)
            for (Index c = 0; c < 2; ++c)
                Y(i, c) = static_cast<Scalar>(rng.normal());
        Y *= std::sqrt(delta_ss / static_cast<Scalar>(n * (n - 1) / 2)) / Scalar(2);
    }

    Vector<Scalar> row_stress(n);
    auto stress_of = [&](const Embedding<Scalar>& Z) {
        parallel_for(0, n, [&](std::ptrdiff_t i) {
            Scalar s = 0;
            for (Index j = i + 1; j < n; ++j) {
                const Scalar r = delta(i, j) - (Z.row(i) - Z.row(j)).norm();
                s += r * r;
            }
            row_stress(i) = s;
        });
        return row_stress.sum();
    };

    MdsResult<Scalar> result;
    Scalar stress = stress_of(Y);
    result.stress_trace.push_back(stress);
    const Scalar floor = delta_ss * Scalar(1e-24);
    Embedding<Scalar> next(n, 2);
    for (Index iter = 0; iter < cfg.max_iters; ++iter) {
        if (stress <= floor) {
            result.converged = true;
            break;
        }
        parallel_for(0, n, [&](std::ptrdiff_t i) {
            Scalar sx = 0, sy = 0;
            for (Index j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                const Scalar dx = Y(i, 0) - Y(j, 0), dy = Y(i, 1) - Y(j, 1);
                const Scalar d = std::sqrt(dx * dx + dy * dy);
                if (d > Scalar(0)) {
                    const Scalar ratio = delta(i, j) / d;
                    sx += ratio * dx;
                    sy += ratio * dy;
                }
            }
            next(i, 0) = sx / static_cast<Scalar>(n);
            next(i, 1) = sy / static_cast<Scalar>(n);
        });
        Y.swap(next);
        const Scalar previous = stress;
        stress = stress_of(Y);
        result.stress_trace.push_back(stress);
        result.iterations = iter + 1;
        if (previous - stress <= Scalar(cfg.tol) * previous) {
            result.converged = true;
            break;
        }
    }
    result.stress = stress;

    // Rigid normalization: center and rotate onto principal axes.
    Y.rowwise() -= Y.colwise().mean().eval();
    const Eigen::Matrix<Scalar, 2, 2> cov = Y.transpose() * Y;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> eig(cov);
    Matrix<Scalar> axes(2, 2);
    axes.col(0) = eig.eigenvectors().col(1);
    axes.col(1) = eig.eigenvectors().col(0);
    detail::fix_component_signs(axes);
    Y = (Y * axes).eval();

    const Scalar sd = column_std(Y.col(0))(0);
    if (!(sd > Scalar(0)))
        throw DegenerateInputError("smacof: all points coincide in the embedding");
    result.scale = static_cast<Scalar>(cfg.output_std) / sd;
    result.embedding = Y * result.scale;
    return result;
}

} // namespace dreams

#endif // DREAMS_MDS_HPP
