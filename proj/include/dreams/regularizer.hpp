#ifndef DREAMS_REGULARIZER_HPP
#define DREAMS_REGULARIZER_HPP

#include <cmath>
#include <optional>
#include <variant>

#include <Eigen/LU>

#include "dreams/core.hpp"

namespace dreams {

/// Frobenius-norm ratio |Y| / |Yref| that rescales the reference to the current embedding.
template <typename Scalar>
Scalar compute_alpha(const Embedding<Scalar>& Y, const Embedding<Scalar>& reference) {
    if (Y.rows() != reference.rows())
        throw ShapeError("compute_alpha: embedding and reference differ in row count");
    const Scalar ref_norm = reference.norm();
    if (!(ref_norm > Scalar(0)))
        throw DegenerateInputError("compute_alpha: reference embedding has zero norm");
    return Y.norm() / ref_norm;
}

/// |Y - alpha Yref|^2.
template <typename Scalar>
Scalar embedding_penalty(const Embedding<Scalar>& Y, const Embedding<Scalar>& reference, Scalar alpha) {
    return (Y - alpha * reference).squaredNorm();
}

/**
 * Gradient of lambda |Y - alpha Yref|^2 with alpha = compute_alpha(Y, Yref)
 * held fixed: 2 lambda (Y - alpha Yref).
 */
template <typename Scalar>
Embedding<Scalar> reg_grad_embedding(const Embedding<Scalar>& Y, const Embedding<Scalar>& reference, Scalar lambda) {
    const Scalar alpha = compute_alpha(Y, reference);
    return Scalar(2) * lambda * (Y - alpha * reference);
}

/// Linear decoder X ~ Y D^T + b.
template <typename Scalar>
struct DecoderModel {
    Matrix<Scalar> D;   // m x 2
    RowVector<Scalar> b; // length m
    /// The embedding columns were (nearly) collinear and a ridge term was added.
    bool ridge_applied = false;

    Matrix<Scalar> reconstruct(const Embedding<Scalar>& Y) const {
        Matrix<Scalar> out = Y * D.transpose();
        out.rowwise() += b;
        return out;
    }
};

/**
 * Least-squares decoder minimizing |X - (Y D^T + b)|^2 in closed form: b
 * absorbs the column means and D solves the normal equations on centered
 * data. A ridge of 1e-10 (relative to the Gram trace) is added when the
 * embedding columns are collinear.
 */
template <typename Derived, typename Scalar = typename Derived::Scalar>
DecoderModel<Scalar> fit_decoder(const Eigen::MatrixBase<Derived>& X, const Embedding<Scalar>& Y) {
    if (X.rows() != Y.rows())
        throw ShapeError("fit_decoder: data and embedding differ in row count");
    if (X.rows() < 3)
        throw ShapeError("fit_decoder: need at least three rows");

    const RowVector<Scalar> x_mean = X.colwise().mean();
    const Eigen::Matrix<Scalar, 1, 2> y_mean = Y.colwise().mean();
    const Embedding<Scalar> Yc = Y.rowwise() - y_mean;
    const Matrix<Scalar> Xc = X.rowwise() - x_mean;

    Eigen::Matrix<Scalar, 2, 2> gram = Yc.transpose() * Yc;
    DecoderModel<Scalar> model;
    const Scalar trace = gram.trace();
    if (!(std::abs(gram.determinant()) > Scalar(1e-12) * trace * trace)) {
        gram += Scalar(1e-10) * std::max(trace, Scalar(1)) * Eigen::Matrix<Scalar, 2, 2>::Identity();
        model.ridge_applied = true;
    }
    // D^T = (Yc^T Yc)^-1 Yc^T Xc
    const Eigen::Matrix<Scalar, 2, Eigen::Dynamic> cross = Yc.transpose() * Xc;
    model.D = (gram.inverse() * cross).transpose();
    model.b = x_mean - (model.D * y_mean.transpose()).transpose();
    return model;
}

/// |X - (Y D^T + b)|^2.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar decoder_penalty(const Eigen::MatrixBase<Derived>& X, const Embedding<Scalar>& Y, const DecoderModel<Scalar>& model) {
    return (X - model.reconstruct(Y)).squaredNorm();
}

/// Gradient in Y of lambda |X - (Y D^T + b)|^2 with D, b fixed: -2 lambda (X - Y D^T - b) D.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Embedding<Scalar> reg_grad_decoder(const Eigen::MatrixBase<Derived>& X, const Embedding<Scalar>& Y,
                                   const DecoderModel<Scalar>& model, Scalar lambda) {
    if (X.rows() != Y.rows() || X.cols() != model.D.rows())
        throw ShapeError("reg_grad_decoder: inconsistent shapes");
    const Matrix<Scalar> residual = X - model.reconstruct(Y);
    return Scalar(-2) * lambda * (residual * model.D);
}

/// How the anchor penalty is weighted against the KL term.
enum class PenaltyNormalization {
    /// lambda |.|^2 / (2n): mean squared deviation over all embedding coordinates.
    mean,
    /// lambda |.|^2 / n: mean squared deviation per point.
    per_point,
    /// lambda |.|^2 exactly as written.
    sum,
};

/// Multiplier applied to the penalty (and its gradient) for n points.
template <typename Scalar>
Scalar penalty_weight(PenaltyNormalization normalization, Index n) {
    switch (normalization) {
    case PenaltyNormalization::mean: return Scalar(1) / (Scalar(2) * static_cast<Scalar>(n));
    case PenaltyNormalization::per_point: return Scalar(1) / static_cast<Scalar>(n);
    case PenaltyNormalization::sum: return Scalar(1);
    }
    return Scalar(1);
}

/// Pull towards a fixed reference embedding.
template <typename Scalar>
struct EmbeddingAnchor {
    Embedding<Scalar> reference;
};

/// Pull towards the best linear reconstruction of the data.
template <typename Scalar>
struct DecoderAnchor {
    Matrix<Scalar> data;
    /// Closed-form refit cadence in iterations.
    Index refit_every = 1;
    /// Decoder used until the first refit; fitted from the initial embedding when empty.
    std::optional<DecoderModel<Scalar>> initial;
};

template <typename Scalar>
struct RegularizerSpec {
    Scalar lambda = Scalar(0.1);
    std::variant<EmbeddingAnchor<Scalar>, DecoderAnchor<Scalar>> anchor;
    PenaltyNormalization normalization = PenaltyNormalization::mean;

    void validate(Index n) const {
        if (!(lambda >= Scalar(0) && lambda <= Scalar(1)))
            throw ConfigError("regularizer: lambda must lie in [0, 1]");
        if (const auto* e = std::get_if<EmbeddingAnchor<Scalar>>(&anchor)) {
            if (e->reference.rows() != n)
                throw ShapeError("regularizer: reference embedding has " + std::to_string(e->reference.rows()) +
                                 " rows, expected " + std::to_string(n));
            require_valid(e->reference, "regularizer reference");
        } else {
            const auto& d = std::get<DecoderAnchor<Scalar>>(anchor);
            if (d.data.rows() != n)
                throw ShapeError("regularizer: decoder data has wrong row count");
            if (d.refit_every < 1)
                throw ConfigError("regularizer: refit_every must be at least 1");
        }
    }
};

} // namespace dreams

#endif // DREAMS_REGULARIZER_HPP
