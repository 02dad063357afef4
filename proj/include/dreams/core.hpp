#ifndef DREAMS_CORE_HPP
#define DREAMS_CORE_HPP

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "dreams/errors.hpp"

namespace dreams {

using Index = Eigen::Index;

// Dense row-major containers. Rows are observations throughout the library.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// n x 2 coordinates of a two-dimensional embedding.
template <typename Scalar>
using Embedding = Eigen::Matrix<Scalar, Eigen::Dynamic, 2, Eigen::RowMajor>;

using DataMatrix = Matrix<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

/// Throws ValidationError unless `m` is non-empty and finite.
template <typename Derived>
void require_valid(const Eigen::DenseBase<Derived>& m, const std::string& what) {
    if (m.rows() < 1 || m.cols() < 1)
        throw ValidationError(what + ": matrix must have at least one row and one column");
    if (!m.allFinite())
        throw ValidationError(what + ": matrix contains NaN or Inf");
}

/// Subtracts each column's mean.
template <typename Derived>
Matrix<typename Derived::Scalar> center_columns(const Eigen::MatrixBase<Derived>& X) {
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> out = X;
    if (out.rows() == 0)
        return out;
    const RowVector<Scalar> mean = out.colwise().mean();
    out.rowwise() -= mean;
    return out;
}

/// Sample (n - 1) standard deviation of each column.
template <typename Derived>
RowVector<typename Derived::Scalar> column_std(const Eigen::MatrixBase<Derived>& X) {
    using Scalar = typename Derived::Scalar;
    const Matrix<Scalar> c = center_columns(X);
    const Scalar denom = static_cast<Scalar>(X.rows() > 1 ? X.rows() - 1 : 1);
    return (c.colwise().squaredNorm() / denom).cwiseSqrt();
}

} // namespace dreams

#endif // DREAMS_CORE_HPP
