#pragma once

#include <cmath>
#include <string>

#include "curved/errors.hpp"
#include "curved/metric.hpp"
#include "curved/types.hpp"

namespace curved {

/// Clamp floor for log arguments in CE/CCE. Keeps losses finite under
/// degenerate outputs without perturbing gradients elsewhere.
inline constexpr double kLogClamp = 1e-12;

/// Gradient of a loss with respect to the predicted probability vector.
/// `clamped` is set when the log argument hit the clamp floor, in which case
/// the gradient of the (constant) clamped value is the zero vector.
template <typename Scalar>
struct LossGradientT {
    VectorX<Scalar> grad;
    bool clamped = false;
};

using LossGradient = LossGradientT<double>;

namespace detail {

template <typename Scalar>
void check_loss_dims(const OneHotLabel& y, const VectorX<Scalar>& yhat) {
    if (y.k != yhat.size())
        throw DimensionError("loss: label has " + std::to_string(y.k) +
                             " classes but prediction has " + std::to_string(yhat.size()));
}

template <typename Scalar>
void check_loss_dims(const MetricT<Scalar>& m, const OneHotLabel& y,
                     const VectorX<Scalar>& yhat) {
    check_loss_dims(y, yhat);
    if (m.k() != y.k)
        throw DimensionError("loss: metric has " + std::to_string(m.k()) +
                             " classes but label has " + std::to_string(y.k));
}

template <typename Scalar>
Scalar sign_of(Scalar x) {
    if (x > Scalar(0)) return Scalar(1);
    if (x < Scalar(0)) return Scalar(-1);
    return Scalar(0);  // subgradient choice at the kink
}

}  // namespace detail

// Each loss comes in two overloads: the ProbVector form is the checked entry
// point used in training; the raw-vector form evaluates the same formula at
// arbitrary points, which finite-difference checks need since coordinate
// perturbations leave the simplex.

/// Squared error sum_a (yhat_a - y_a)^2; the squared Euclidean distance.
template <typename Scalar>
Scalar mse(const OneHotLabel& y, const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(y, yhat);
    return euclidean_sq_distance<Scalar>(y.to_vector<Scalar>(), yhat);
}

template <typename Scalar>
Scalar mse(const OneHotLabel& y, const ProbVectorT<Scalar>& yhat) {
    return mse(y, yhat.vec());
}

/// -log yhat_c for true class c, with the argument clamped to >= 1e-12.
template <typename Scalar>
Scalar crossentropy(const OneHotLabel& y, const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(y, yhat);
    const Scalar p = std::max(Scalar(kLogClamp), yhat(y.class_index));
    return -std::log(p);
}

template <typename Scalar>
Scalar crossentropy(const OneHotLabel& y, const ProbVectorT<Scalar>& yhat) {
    return crossentropy(y, yhat.vec());
}

/// Curved quadratic error: the curved squared distance between y and yhat.
template <typename Scalar>
Scalar cqe(const MetricT<Scalar>& m, const OneHotLabel& y, const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(m, y, yhat);
    return curved_sq_distance<Scalar>(m, y.to_vector<Scalar>(), yhat);
}

template <typename Scalar>
Scalar cqe(const MetricT<Scalar>& m, const OneHotLabel& y, const ProbVectorT<Scalar>& yhat) {
    return cqe(m, y, yhat.vec());
}

/// Curved cross-entropy: -log sum_b g_cb yhat_b for true class c, clamped.
/// With scale A > 1 the sum may exceed 1, so the value can be negative; it
/// stays bounded below by -log(1 + A (k-1)) on the simplex.
template <typename Scalar>
Scalar cce(const MetricT<Scalar>& m, const OneHotLabel& y, const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(m, y, yhat);
    const Scalar s = m.tensor().row(y.class_index).dot(yhat);
    return -std::log(std::max(Scalar(kLogClamp), s));
}

template <typename Scalar>
Scalar cce(const MetricT<Scalar>& m, const OneHotLabel& y, const ProbVectorT<Scalar>& yhat) {
    return cce(m, y, yhat.vec());
}

/// d/dyhat of mse: 2 (yhat - y).
template <typename Scalar>
LossGradientT<Scalar> mse_grad(const OneHotLabel& y, const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(y, yhat);
    return {Scalar(2) * (yhat - y.to_vector<Scalar>()), false};
}

template <typename Scalar>
LossGradientT<Scalar> mse_grad(const OneHotLabel& y, const ProbVectorT<Scalar>& yhat) {
    return mse_grad(y, yhat.vec());
}

/// d/dyhat of crossentropy: -1/yhat_c at the true class, zero elsewhere.
template <typename Scalar>
LossGradientT<Scalar> crossentropy_grad(const OneHotLabel& y, const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(y, yhat);
    VectorX<Scalar> grad = VectorX<Scalar>::Zero(y.k);
    const Scalar p = yhat(y.class_index);
    if (p <= Scalar(kLogClamp)) return {std::move(grad), true};
    grad(y.class_index) = Scalar(-1) / p;
    return {std::move(grad), false};
}

template <typename Scalar>
LossGradientT<Scalar> crossentropy_grad(const OneHotLabel& y, const ProbVectorT<Scalar>& yhat) {
    return crossentropy_grad(y, yhat.vec());
}

/// d/dyhat of cqe: grad_c = 2 sign(yhat_c - y_c) sum_b g_cb |yhat_b - y_b|,
/// with sign(0) = 0.
template <typename Scalar>
LossGradientT<Scalar> cqe_grad(const MetricT<Scalar>& m, const OneHotLabel& y,
                               const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(m, y, yhat);
    const VectorX<Scalar> diff = yhat - y.to_vector<Scalar>();
    const VectorX<Scalar> weighted = m.tensor() * diff.cwiseAbs();
    VectorX<Scalar> grad(y.k);
    for (Index c = 0; c < y.k; ++c)
        grad(c) = Scalar(2) * detail::sign_of(diff(c)) * weighted(c);
    return {std::move(grad), false};
}

template <typename Scalar>
LossGradientT<Scalar> cqe_grad(const MetricT<Scalar>& m, const OneHotLabel& y,
                               const ProbVectorT<Scalar>& yhat) {
    return cqe_grad(m, y, yhat.vec());
}

/// d/dyhat of cce: grad_c = -g_{tc} / sum_b g_{tb} yhat_b for true class t.
/// Inside the clamp region the loss is constant, so the gradient is zero.
template <typename Scalar>
LossGradientT<Scalar> cce_grad(const MetricT<Scalar>& m, const OneHotLabel& y,
                               const VectorX<Scalar>& yhat) {
    detail::check_loss_dims(m, y, yhat);
    const Scalar s = m.tensor().row(y.class_index).dot(yhat);
    if (s <= Scalar(kLogClamp)) return {VectorX<Scalar>::Zero(y.k), true};
    VectorX<Scalar> grad = -m.tensor().row(y.class_index).transpose() / s;
    return {std::move(grad), false};
}

template <typename Scalar>
LossGradientT<Scalar> cce_grad(const MetricT<Scalar>& m, const OneHotLabel& y,
                               const ProbVectorT<Scalar>& yhat) {
    return cce_grad(m, y, yhat.vec());
}

/// Loss selector used by the network and the experiment harness.
enum class LossKind { Mse, CrossEntropy, Cqe, Cce };

inline bool is_curved(LossKind kind) {
    return kind == LossKind::Cqe || kind == LossKind::Cce;
}

inline const char* to_string(LossKind kind) {
    switch (kind) {
        case LossKind::Mse: return "mse";
        case LossKind::CrossEntropy: return "ce";
        case LossKind::Cqe: return "cqe";
        case LossKind::Cce: return "cce";
    }
    return "?";
}

inline LossKind parse_loss_kind(const std::string& name) {
    if (name == "mse") return LossKind::Mse;
    if (name == "ce") return LossKind::CrossEntropy;
    if (name == "cqe") return LossKind::Cqe;
    if (name == "cce") return LossKind::Cce;
    throw ValidationError("unknown loss '" + name + "' (expected mse, ce, cqe or cce)");
}

/// Dispatch helpers; flat losses ignore the metric argument.
template <typename Scalar>
Scalar loss_value(LossKind kind, const MetricT<Scalar>& m, const OneHotLabel& y,
                  const ProbVectorT<Scalar>& yhat) {
    switch (kind) {
        case LossKind::Mse: return mse(y, yhat);
        case LossKind::CrossEntropy: return crossentropy(y, yhat);
        case LossKind::Cqe: return cqe(m, y, yhat);
        case LossKind::Cce: return cce(m, y, yhat);
    }
    throw ValidationError("loss_value: bad loss kind");
}

template <typename Scalar>
LossGradientT<Scalar> loss_gradient(LossKind kind, const MetricT<Scalar>& m,
                                    const OneHotLabel& y, const ProbVectorT<Scalar>& yhat) {
    switch (kind) {
        case LossKind::Mse: return mse_grad(y, yhat);
        case LossKind::CrossEntropy: return crossentropy_grad(y, yhat);
        case LossKind::Cqe: return cqe_grad(m, y, yhat);
        case LossKind::Cce: return cce_grad(m, y, yhat);
    }
    throw ValidationError("loss_gradient: bad loss kind");
}

/// Raw-vector dispatch used by gradient-check tooling.
template <typename Scalar>
Scalar loss_value(LossKind kind, const MetricT<Scalar>& m, const OneHotLabel& y,
                  const VectorX<Scalar>& yhat) {
    switch (kind) {
        case LossKind::Mse: return mse(y, yhat);
        case LossKind::CrossEntropy: return crossentropy(y, yhat);
        case LossKind::Cqe: return cqe(m, y, yhat);
        case LossKind::Cce: return cce(m, y, yhat);
    }
    throw ValidationError("loss_value: bad loss kind");
}

}  // namespace curved
