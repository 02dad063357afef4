#ifndef DREAMS_PCA_HPP
#define DREAMS_PCA_HPP

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "dreams/core.hpp"

namespace dreams {

template <typename Scalar>
struct PcaModel {
    RowVector<Scalar> mean;
    /// m x d, orthonormal columns.
    Matrix<Scalar> components;
    /// Non-increasing, non-negative.
    Vector<Scalar> explained_variance;
    /// Set when d exceeds the numerical rank; trailing components are an
    /// arbitrary orthonormal completion with zero explained variance.
    bool rank_deficient = false;

    Index input_dim() const { return components.rows(); }
    Index output_dim() const { return components.cols(); }
};

enum class PcaSolver {
    automatic,  ///< covariance when m <= 1000 or m <= n, Gram matrix otherwise
    covariance, ///< eigendecomposition of the m x m sample covariance
    gram,       ///< eigendecomposition of the n x n Gram matrix
};

namespace detail {

// Flip each column so that its largest-magnitude entry (first on ties) is positive.
template <typename Scalar>
void fix_component_signs(Matrix<Scalar>& W) {
    for (Index k = 0; k < W.cols(); ++k) {
        Index best = 0;
        for (Index r = 1; r < W.rows(); ++r)
            if (std::abs(W(r, k)) > std::abs(W(best, k)))
                best = r;
        if (W(best, k) < Scalar(0))
            W.col(k) = -W.col(k);
    }
}

// Replaces columns [first, d) with unit vectors orthogonal to all previous columns.
template <typename Scalar>
void complete_orthonormal(Matrix<Scalar>& W, Index first) {
    const Index m = W.rows();
    Index candidate = 0;
    for (Index k = first; k < W.cols(); ++k) {
        for (; candidate < m; ++candidate) {
            Vector<Scalar> v = Vector<Scalar>::Unit(m, candidate);
            // Two Gram-Schmidt passes for numerical orthogonality.
            for (int pass = 0; pass < 2; ++pass)
                for (Index j = 0; j < k; ++j)
                    v -= W.col(j).dot(v) * W.col(j);
            const Scalar norm = v.norm();
            if (norm > Scalar(1e-6)) {
                W.col(k) = v / norm;
                ++candidate;
                break;
            }
        }
    }
}

} // namespace detail

/**
 * Principal components of X from the eigendecomposition of its sample
 * covariance (n - 1 normalization), or of the Gram matrix when m is large
 * and n < m. Deterministic; see PcaModel for the sign convention.
 */
template <typename Derived>
PcaModel<typename Derived::Scalar> fit_pca(const Eigen::MatrixBase<Derived>& X, Index d,
                                           PcaSolver solver = PcaSolver::automatic) {
    using Scalar = typename Derived::Scalar;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Index n = X.rows();
    const Index m = X.cols();
    if (n < 2)
        throw ConfigError("fit_pca: need at least two rows");
    if (d < 1 || d > std::min(n, m))
        throw ConfigError("fit_pca: d = " + std::to_string(d) + " outside [1, min(n, m) = " +
                          std::to_string(std::min(n, m)) + "]");
    require_valid(X, "fit_pca");

    if (solver == PcaSolver::automatic)
        solver = (m <= 1000 || m <= n) ? PcaSolver::covariance : PcaSolver::gram;

    PcaModel<Scalar> model;
    model.mean = X.colwise().mean();
    const Matrix<Scalar> Xc = X.rowwise() - model.mean;
    const Scalar denom = static_cast<Scalar>(n - 1);

    model.components.resize(m, d);
    model.explained_variance.resize(d);

    Vector<Scalar> eigenvalues;
    if (solver == PcaSolver::covariance) {
        const Dense cov = (Xc.transpose() * Xc) / denom;
        Eigen::SelfAdjointEigenSolver<Dense> eig(cov);
        eigenvalues = eig.eigenvalues().reverse();
        for (Index k = 0; k < d; ++k)
            model.components.col(k) = eig.eigenvectors().col(m - 1 - k);
    } else {
        const Dense gram = (Xc * Xc.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Dense> eig(gram);
        eigenvalues = eig.eigenvalues().reverse();
        for (Index k = 0; k < d; ++k) {
            const Scalar lambda = eigenvalues(k);
            if (lambda > Scalar(0))
                model.components.col(k) =
                    Xc.transpose() * eig.eigenvectors().col(n - 1 - k) / std::sqrt(lambda * denom);
        }
    }

    const Scalar top = std::max(eigenvalues(0), Scalar(0));
    const Scalar cutoff = top * static_cast<Scalar>(std::max(n, m)) * std::numeric_limits<Scalar>::epsilon() * 10;
    Index rank = 0;
    for (Index k = 0; k < d; ++k) {
        if (eigenvalues(k) > cutoff && eigenvalues(k) > Scalar(0)) {
            model.explained_variance(k) = eigenvalues(k);
            ++rank;
        } else {
            model.explained_variance(k) = Scalar(0);
        }
    }
    if (rank < d) {
        model.rank_deficient = true;
        detail::complete_orthonormal(model.components, rank);
    }
    detail::fix_component_signs(model.components);
    return model;
}

/// (X - mean) * W.
template <typename Scalar, typename Derived>
Matrix<Scalar> project(const PcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& X) {
    if (X.cols() != model.input_dim())
        throw ShapeError("project: input has " + std::to_string(X.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim()));
    return (X.rowwise() - model.mean) * model.components;
}

/// Divides every entry by the sample standard deviation of column 0.
template <typename Derived>
Matrix<typename Derived::Scalar> normalize_by_pc1_std(const Eigen::MatrixBase<Derived>& Y) {
    using Scalar = typename Derived::Scalar;
    if (Y.rows() < 2 || Y.cols() < 1)
        throw DegenerateInputError("normalize_by_pc1_std: need at least two rows");
    const Scalar sd = column_std(Y.col(0))(0);
    const Scalar scale = Y.col(0).cwiseAbs().maxCoeff();
    if (!(sd > scale * std::numeric_limits<Scalar>::epsilon() * 16) || !(sd > Scalar(0)))
        throw DegenerateInputError("normalize_by_pc1_std: first column is constant");
    return Y / sd;
}

/// Top-two principal component scores divided by the PC1 standard deviation.
template <typename Derived>
Embedding<typename Derived::Scalar> pca_reference(const Eigen::MatrixBase<Derived>& X) {
    const auto model = fit_pca(X, 2);
    return normalize_by_pc1_std(project(model, X));
}

} // namespace dreams

#endif // DREAMS_PCA_HPP
