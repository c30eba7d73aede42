#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>

#include "curved/errors.hpp"
#include "curved/metric.hpp"
#include "curved/types.hpp"

namespace curved {

/// Raw confusion counts: entry (true_class, predicted_class) is the number of
/// examples of the true class classified as the predicted one. Single writer;
/// derived matrices are immutable snapshots.
class ConfusionAccumulator {
public:
    explicit ConfusionAccumulator(Index k) : counts_(CountMatrix::Zero(k, k)) {
        if (k < 2) throw DimensionError("ConfusionAccumulator: class count must be >= 2");
    }

    void record(Index true_class, Index predicted_class) {
        if (true_class < 0 || true_class >= k() || predicted_class < 0 ||
            predicted_class >= k())
            throw OutOfRangeError("ConfusionAccumulator::record: class index out of range");
        ++counts_(true_class, predicted_class);
    }

    Index k() const { return counts_.rows(); }
    const CountMatrix& counts() const { return counts_; }
    std::int64_t total() const { return counts_.sum(); }
    void reset() { counts_.setZero(); }

private:
    CountMatrix counts_;
};

/// Confusion matrix normalized over the predicted-class margin: each column
/// sums to 1, or is all-zero when nothing was classified as that class.
/// Diagonal entries are precision values.
template <typename Scalar>
struct NormalizedConfusionT {
    Index k;
    MatrixX<Scalar> p;
};

using NormalizedConfusion = NormalizedConfusionT<double>;

/// P[a][b] = C[a][b] / sum_g C[g][b]. Columns with no observations stay zero,
/// which drives the effective distance for that class toward its maximum.
template <typename Scalar = double>
NormalizedConfusionT<Scalar> normalize_counts(const CountMatrix& counts) {
    if (counts.rows() != counts.cols())
        throw DimensionError("normalize: count matrix must be square");
    const Index k = counts.rows();
    MatrixX<Scalar> p = MatrixX<Scalar>::Zero(k, k);
    for (Index b = 0; b < k; ++b) {
        const std::int64_t col_total = counts.col(b).sum();
        if (col_total == 0) continue;
        for (Index a = 0; a < k; ++a)
            p(a, b) = static_cast<Scalar>(counts(a, b)) / static_cast<Scalar>(col_total);
    }
    return {k, std::move(p)};
}

template <typename Scalar = double>
NormalizedConfusionT<Scalar> normalize(const ConfusionAccumulator& acc) {
    return normalize_counts<Scalar>(acc.counts());
}

/**
 * Exponential moving average of normalized confusion matrices, indexed by
 * epoch:
 *
 *   pbar(0) = lambda P(0)
 *   pbar(t) = (1 - lambda) pbar(t-1) + lambda P(t)
 *
 * The first update is deliberately left unnormalized (no bias correction), so
 * early effective distances sit near their flat maximum.
 */
template <typename Scalar>
class EmaStateT {
    static_assert(std::is_floating_point_v<Scalar>, "non floating-point scalar type");

public:
    EmaStateT(Index k, Scalar lambda)
        : lambda_(lambda), pbar_(MatrixX<Scalar>::Zero(k, k)), t_(0) {
        if (k < 2) throw DimensionError("EmaState: class count must be >= 2");
        if (!(lambda > Scalar(0)) || lambda > Scalar(1))
            throw ValidationError("EmaState: lambda must lie in (0, 1]");
    }

    /// Restores a checkpointed state.
    static EmaStateT from_parts(Index k, Scalar lambda, std::int64_t t, MatrixX<Scalar> pbar) {
        EmaStateT s(k, lambda);
        if (pbar.rows() != k || pbar.cols() != k)
            throw DimensionError("EmaState: pbar shape does not match class count");
        if (t < 0) throw ValidationError("EmaState: negative update count");
        for (Index a = 0; a < k; ++a)
            for (Index b = 0; b < k; ++b)
                if (!(pbar(a, b) >= Scalar(0)) || pbar(a, b) > Scalar(1))
                    throw ValidationError("EmaState: pbar entry outside [0,1]");
        s.pbar_ = std::move(pbar);
        s.t_ = t;
        return s;
    }

    void update(const NormalizedConfusionT<Scalar>& p) {
        if (p.k != k())
            throw DimensionError("EmaState::update: expected " + std::to_string(k()) +
                                 " classes, got " + std::to_string(p.k));
        if (t_ == 0)
            pbar_ = lambda_ * p.p;
        else
            pbar_ = (Scalar(1) - lambda_) * pbar_ + lambda_ * p.p;
        ++t_;
    }

    Index k() const { return pbar_.rows(); }
    Scalar lambda() const { return lambda_; }
    const MatrixX<Scalar>& pbar() const { return pbar_; }
    std::int64_t t() const { return t_; }

private:
    Scalar lambda_;
    MatrixX<Scalar> pbar_;
    std::int64_t t_;
};

using EmaState = EmaStateT<double>;

/// Parameters of the confusion-driven metric: off-diagonal scale A, EMA
/// smoothing factor, and an optional cap on off-diagonal entries.
template <typename Scalar>
struct MetricConfigT {
    Scalar scale = Scalar(1);
    Scalar lambda = Scalar(0.3);
    std::optional<Scalar> clamp_max;

    void validate() const {
        if (!(scale > Scalar(0)))
            throw ValidationError("MetricConfig: scale must be positive");
        if (!(lambda > Scalar(0)) || lambda > Scalar(1))
            throw ValidationError("MetricConfig: lambda must lie in (0, 1]");
        if (clamp_max && !(*clamp_max >= Scalar(0)))
            throw ValidationError("MetricConfig: clamp_max must be non-negative");
    }
};

using MetricConfig = MetricConfigT<double>;

/// Effective class distances S[a][b] = 1 - (P[a][b] + P[b][a]) / 2; smaller
/// for frequently confused pairs and symmetric by construction.
template <typename Scalar>
MatrixX<Scalar> effective_distance(const MatrixX<Scalar>& p) {
    if (p.rows() != p.cols())
        throw DimensionError("effective_distance: matrix must be square");
    for (Index a = 0; a < p.rows(); ++a)
        for (Index b = 0; b < p.cols(); ++b)
            if (!(p(a, b) >= Scalar(0)) || p(a, b) > Scalar(1))
                throw ValidationError("effective_distance: entry (" + std::to_string(a) + "," +
                                      std::to_string(b) + ") outside [0,1]");
    const Index k = p.rows();
    MatrixX<Scalar> s(k, k);
    for (Index a = 0; a < k; ++a) {
        s(a, a) = Scalar(1) - (p(a, a) + p(a, a)) / Scalar(2);
        for (Index b = a + 1; b < k; ++b) {
            const Scalar v = Scalar(1) - (p(a, b) + p(b, a)) / Scalar(2);
            s(a, b) = v;
            s(b, a) = v;
        }
    }
    return s;
}

/// g = A S off the diagonal (optionally capped), unit diagonal. The diagonal
/// of S is ignored.
template <typename Scalar>
MetricT<Scalar> build_metric(const MatrixX<Scalar>& s, const MetricConfigT<Scalar>& cfg) {
    cfg.validate();
    if (s.rows() != s.cols())
        throw DimensionError("build_metric: effective distance matrix must be square");
    for (Index a = 0; a < s.rows(); ++a)
        for (Index b = a + 1; b < s.cols(); ++b)
            if (s(a, b) != s(b, a))
                throw ValidationError("build_metric: effective distances not symmetric at (" +
                                      std::to_string(a) + "," + std::to_string(b) + ")");
    const Index k = s.rows();
    MatrixX<Scalar> g = MatrixX<Scalar>::Identity(k, k);
    for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
            Scalar v = cfg.scale * s(a, b);
            if (cfg.clamp_max && v > *cfg.clamp_max) v = *cfg.clamp_max;
            g(a, b) = v;
            g(b, a) = v;
        }
    }
    return MetricT<Scalar>::from_matrix(std::move(g));
}

/// Metric from accumulated history: build_metric(effective_distance(pbar)).
/// Requires at least one EMA update; before that, callers should train under
/// the identity metric.
template <typename Scalar>
MetricT<Scalar> metric_from_history(const EmaStateT<Scalar>& state,
                                    const MetricConfigT<Scalar>& cfg) {
    if (state.t() < 1)
        throw NotInitializedError(
            "metric_from_history: no confusion statistics recorded yet (t = 0)");
    return build_metric<Scalar>(effective_distance<Scalar>(state.pbar()), cfg);
}

}  // namespace curved
