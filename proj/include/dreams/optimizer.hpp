#ifndef DREAMS_OPTIMIZER_HPP
#define DREAMS_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dreams/regularizer.hpp"
#include "dreams/tsne.hpp"

namespace dreams {

struct OptimizerConfig {
    Index total_iters = 750;
    Index ee_iters = 250;
    double ee_factor = 12.0;
    /// Empty selects max(200, n / 12).
    std::optional<double> learning_rate;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    double theta = 0.5;
    double min_gain = 0.01;

    double resolved_learning_rate(Index n) const {
        return learning_rate ? *learning_rate : std::max(200.0, static_cast<double>(n) / 12.0);
    }

    void validate() const {
        if (total_iters < 0 || ee_iters < 0 || ee_iters > total_iters)
            throw ConfigError("optimizer: need 0 <= ee_iters <= total_iters");
        if (!(theta >= 0.0 && theta <= 1.0))
            throw ConfigError("optimizer: theta must lie in [0, 1]");
        if (learning_rate && !(*learning_rate > 0.0))
            throw ConfigError("optimizer: learning rate must be positive");
        if (!(min_gain > 0.0))
            throw ConfigError("optimizer: min_gain must be positive");
    }
};

template <typename Scalar>
struct OptimizationResult {
    Embedding<Scalar> embedding;
    /// KL(P || Q) at the start of each iteration. During early exaggeration
    /// this is the KL of the exaggerated affinities e * P, so values on either
    /// side of the switch are not comparable.
    std::vector<Scalar> kl_trace;
    /// Unweighted anchor penalty (|Y - alpha Yref|^2 or decoder residual) per iteration; empty without a regularizer.
    std::vector<Scalar> penalty_trace;
};

/**
 * Gradient descent with momentum and per-coordinate gains on
 * (1 - lambda) KL(P || Q) + lambda * penalty.
 *
 * Gains grow by 0.2 while the update keeps pointing against the gradient and
 * shrink by 0.8 otherwise, floored at min_gain. The first ee_iters iterations
 * multiply the attractive term by ee_factor and use momentum_early. A
 * regularizer with lambda = 0 is skipped entirely, so it follows the plain
 * t-SNE code path bit for bit.
 */
template <typename Scalar>
OptimizationResult<Scalar> run_optimizer(const SparseAffinity<Scalar>& P, const Embedding<Scalar>& init,
                                         const OptimizerConfig& cfg,
                                         const std::optional<RegularizerSpec<Scalar>>& reg = std::nullopt) {
    cfg.validate();
    const Index n = init.rows();
    check_affinity_shape(P, n, "run_optimizer");
    require_valid(init, "run_optimizer init");
    if (reg)
        reg->validate(n);
    const bool regularized = reg && reg->lambda > Scalar(0);
    const Scalar lambda = regularized ? reg->lambda : Scalar(0);
    const Scalar weight = regularized ? penalty_weight<Scalar>(reg->normalization, n) : Scalar(1);

    const auto* embedding_anchor = regularized ? std::get_if<EmbeddingAnchor<Scalar>>(&reg->anchor) : nullptr;
    const auto* decoder_anchor = regularized ? std::get_if<DecoderAnchor<Scalar>>(&reg->anchor) : nullptr;
    std::optional<DecoderModel<Scalar>> decoder;
    if (decoder_anchor)
        decoder = decoder_anchor->initial ? *decoder_anchor->initial : fit_decoder(decoder_anchor->data, init);

    OptimizationResult<Scalar> result;
    result.kl_trace.reserve(static_cast<std::size_t>(cfg.total_iters));
    Embedding<Scalar> Y = init;
    Embedding<Scalar> update = Embedding<Scalar>::Zero(n, 2);
    Embedding<Scalar> gains = Embedding<Scalar>::Ones(n, 2);
    const Scalar learning_rate = static_cast<Scalar>(cfg.resolved_learning_rate(n));
    const Scalar theta = static_cast<Scalar>(cfg.theta);
    const Scalar min_gain = static_cast<Scalar>(cfg.min_gain);

    for (Index iter = 0; iter < cfg.total_iters; ++iter) {
        const bool early = iter < cfg.ee_iters;
        const Scalar exaggeration = early ? static_cast<Scalar>(cfg.ee_factor) : Scalar(1);
        const Scalar momentum = static_cast<Scalar>(early ? cfg.momentum_early : cfg.momentum_late);

        Scalar Z = 0;
        Embedding<Scalar> grad = grad_bh(P, Y, theta, exaggeration, &Z);
        result.kl_trace.push_back(detail::kl_given_normalization(P, Y, Z, exaggeration));

        if (embedding_anchor) {
            // alpha is evaluated once here and frozen for this iteration.
            const Scalar alpha = compute_alpha(Y, embedding_anchor->reference);
            result.penalty_trace.push_back(embedding_penalty(Y, embedding_anchor->reference, alpha));
            grad = (Scalar(1) - lambda) * grad +
                   weight * (Scalar(2) * lambda * (Y - alpha * embedding_anchor->reference));
        } else if (decoder_anchor) {
            if (iter % decoder_anchor->refit_every == 0 && (iter > 0 || !decoder_anchor->initial))
                decoder = fit_decoder(decoder_anchor->data, Y);
            result.penalty_trace.push_back(decoder_penalty(decoder_anchor->data, Y, *decoder));
            grad = (Scalar(1) - lambda) * grad + weight * reg_grad_decoder(decoder_anchor->data, Y, *decoder, lambda);
        }

        for (Index i = 0; i < n; ++i) {
            for (Index c = 0; c < 2; ++c) {
                Scalar& g = gains(i, c);
                g = ((update(i, c) > 0) != (grad(i, c) > 0)) ? g + Scalar(0.2) : g * Scalar(0.8);
                g = std::max(g, min_gain);
                update(i, c) = momentum * update(i, c) - learning_rate * g * grad(i, c);
            }
        }
        Y += update;
        if (!Y.allFinite())
            throw DivergenceError(static_cast<std::size_t>(iter));
    }
    result.embedding = std::move(Y);
    return result;
}

} // namespace dreams

#endif // DREAMS_OPTIMIZER_HPP
