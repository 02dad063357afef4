#ifndef DREAMS_DREAMS_HPP
#define DREAMS_DREAMS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dreams/affinity.hpp"
#include "dreams/mds.hpp"
#include "dreams/metrics.hpp"
#include "dreams/optimizer.hpp"
#include "dreams/pca.hpp"
#include "dreams/regularizer.hpp"
#include "dreams/rng.hpp"

namespace dreams {

/// Global structure the embedding is anchored to.
enum class ReferenceKind { pca, mds, decoder };

inline std::string reference_name(ReferenceKind kind) {
    switch (kind) {
    case ReferenceKind::pca: return "pca";
    case ReferenceKind::mds: return "mds";
    case ReferenceKind::decoder: return "decoder";
    }
    return "pca";
}

struct DreamsConfig {
    OptimizerConfig optimizer;
    double perplexity = 30.0;
    /// Neighbors per point for the affinities; 0 selects ceil(3 * perplexity).
    Index neighbors = 0;
    MdsConfig mds;
    PenaltyNormalization normalization = PenaltyNormalization::mean;
    Index decoder_refit_every = 1;
};

/// Everything that does not depend on lambda: affinities, reference embedding, initial decoder.
template <typename Scalar>
struct DreamsSetup {
    Matrix<Scalar> data;
    ReferenceKind kind = ReferenceKind::pca;
    SparseAffinity<Scalar> affinities;
    /// Also the initial embedding for every lambda.
    Embedding<Scalar> reference;
    std::optional<DecoderModel<Scalar>> initial_decoder;
    /// Final raw stress when the reference came from MDS.
    std::optional<Scalar> mds_stress;
};

template <typename Scalar>
struct DreamsResult {
    double lambda = 0;
    Embedding<Scalar> embedding;
    std::vector<Scalar> kl_trace;
    std::vector<Scalar> penalty_trace;
};

/**
 * Computes the affinities and the reference embedding.
 *
 * pca: top-two PC scores divided by the PC1 standard deviation.
 * mds: SMACOF output as produced (first coordinate std 10).
 * decoder: the pca reference as initialization, with the decoder initialized
 * from the first two principal components so that Y D^T + b reproduces the
 * rank-two PCA reconstruction.
 */
template <typename Derived>
DreamsSetup<typename Derived::Scalar> prepare_dreams(const Eigen::MatrixBase<Derived>& X, const DreamsConfig& cfg,
                                                     ReferenceKind kind, Rng& rng) {
    using Scalar = typename Derived::Scalar;
    require_valid(X, "dreams");
    DreamsSetup<Scalar> setup;
    setup.data = X;
    setup.kind = kind;
    setup.affinities = build_affinities(X, static_cast<Scalar>(cfg.perplexity), cfg.neighbors);
    if (kind == ReferenceKind::mds) {
        auto mds = smacof(X, cfg.mds, rng);
        setup.reference = std::move(mds.embedding);
        setup.mds_stress = mds.stress;
    } else {
        const auto model = fit_pca(X, 2);
        const Matrix<Scalar> scores = project(model, X);
        const Scalar sd = column_std(scores.col(0))(0);
        setup.reference = normalize_by_pc1_std(scores);
        if (kind == ReferenceKind::decoder) {
            DecoderModel<Scalar> decoder;
            decoder.D = model.components * sd;
            decoder.b = model.mean;
            setup.initial_decoder = std::move(decoder);
        }
    }
    return setup;
}

/// One optimization at regularization strength lambda, initialized at the reference.
template <typename Scalar>
DreamsResult<Scalar> run_dreams(const DreamsSetup<Scalar>& setup, const DreamsConfig& cfg, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ConfigError("run_dreams: lambda must lie in [0, 1]");
    RegularizerSpec<Scalar> reg;
    reg.lambda = static_cast<Scalar>(lambda);
    reg.normalization = cfg.normalization;
    if (setup.kind == ReferenceKind::decoder) {
        DecoderAnchor<Scalar> anchor;
        anchor.data = setup.data;
        anchor.refit_every = cfg.decoder_refit_every;
        anchor.initial = setup.initial_decoder;
        reg.anchor = std::move(anchor);
    } else {
        reg.anchor = EmbeddingAnchor<Scalar>{setup.reference};
    }
    auto opt = run_optimizer(setup.affinities, setup.reference, cfg.optimizer, std::optional(std::move(reg)));
    DreamsResult<Scalar> out;
    out.lambda = lambda;
    out.embedding = std::move(opt.embedding);
    out.kl_trace = std::move(opt.kl_trace);
    out.penalty_trace = std::move(opt.penalty_trace);
    return out;
}

template <typename Derived>
DreamsResult<typename Derived::Scalar> run_dreams(const Eigen::MatrixBase<Derived>& X, const DreamsConfig& cfg,
                                                  ReferenceKind kind, double lambda, Rng& rng) {
    return run_dreams(prepare_dreams(X, cfg, kind, rng), cfg, lambda);
}

/// Plain t-SNE from the normalized PCA initialization (lambda = 0).
template <typename Derived>
DreamsResult<typename Derived::Scalar> run_tsne(const Eigen::MatrixBase<Derived>& X, const DreamsConfig& cfg) {
    Rng unused(0);
    return run_dreams(prepare_dreams(X, cfg, ReferenceKind::pca, unused), cfg, 0.0);
}

template <typename Scalar>
struct SweepEntry {
    double lambda = 0;
    Embedding<Scalar> embedding;
    MetricReport metrics;
    std::vector<Scalar> kl_trace;
};

struct MetricOptions {
    Index k = 10;
    Index cpd_sample = 1000;
};

/**
 * run_dreams for each lambda from the shared setup. Metrics are evaluated
 * against the embedded matrix with the same CPD sample (drawn from `seed`)
 * for every entry.
 */
template <typename Scalar>
std::vector<SweepEntry<Scalar>> sweep_lambda(const DreamsSetup<Scalar>& setup, const DreamsConfig& cfg,
                                             const std::vector<double>& lambdas, std::uint64_t seed,
                                             const MetricOptions& metric_options = {}) {
    if (lambdas.empty())
        throw ConfigError("sweep_lambda: empty lambda list");
    for (double l : lambdas)
        if (!(l >= 0.0 && l <= 1.0))
            throw ConfigError("sweep_lambda: every lambda must lie in [0, 1]");
    std::vector<SweepEntry<Scalar>> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) {
        auto r = run_dreams(setup, cfg, l);
        SweepEntry<Scalar> e;
        e.lambda = l;
        e.metrics = evaluate(setup.data, r.embedding, seed, metric_options.k, metric_options.cpd_sample);
        e.embedding = std::move(r.embedding);
        e.kl_trace = std::move(r.kl_trace);
        out.push_back(std::move(e));
    }
    return out;
}

template <typename Derived>
std::vector<SweepEntry<typename Derived::Scalar>> sweep_lambda(const Eigen::MatrixBase<Derived>& X,
                                                               const DreamsConfig& cfg, ReferenceKind kind,
                                                               const std::vector<double>& lambdas, Rng& rng,
                                                               const MetricOptions& metric_options = {}) {
    const std::uint64_t seed = rng.seed();
    return sweep_lambda(prepare_dreams(X, cfg, kind, rng), cfg, lambdas, seed, metric_options);
}

} // namespace dreams

#endif // DREAMS_DREAMS_HPP
