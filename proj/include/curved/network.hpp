#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "curved/errors.hpp"
#include "curved/losses.hpp"
#include "curved/metric.hpp"
#include "curved/rng.hpp"
#include "curved/types.hpp"

namespace curved {

/// Dense feedforward classifier: rectifier hidden layers, softmax output.
/// weights[l] maps layer l to layer l+1 and has shape (dims[l] x dims[l+1]);
/// inputs are stored one example per row throughout.
template <typename Scalar>
struct NetworkT {
    std::vector<Index> layer_dims;
    std::vector<MatrixX<Scalar>> weights;
    std::vector<VectorX<Scalar>> biases;

    Index input_dim() const { return layer_dims.front(); }
    Index output_dim() const { return layer_dims.back(); }
    std::size_t num_layers() const { return weights.size(); }

    void validate() const {
        if (layer_dims.size() < 2)
            throw ValidationError("Network: need at least input and output dimensions");
        if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size())
            throw DimensionError("Network: layer count mismatch");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (layer_dims[l] < 1 || layer_dims[l + 1] < 1)
                throw ValidationError("Network: layer dimensions must be positive");
            if (weights[l].rows() != layer_dims[l] || weights[l].cols() != layer_dims[l + 1] ||
                biases[l].size() != layer_dims[l + 1])
                throw DimensionError("Network: parameter shape mismatch at layer " +
                                     std::to_string(l));
            if (!weights[l].allFinite() || !biases[l].allFinite())
                throw NumericError("Network: non-finite parameter detected at layer " +
                                   std::to_string(l));
        }
    }
};

using Network = NetworkT<double>;

/// Per-parameter gradients (or momentum velocities) mirroring a network.
template <typename Scalar>
struct GradientsT {
    std::vector<MatrixX<Scalar>> weights;
    std::vector<VectorX<Scalar>> biases;

    static GradientsT zeros_like(const NetworkT<Scalar>& net) {
        GradientsT g;
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            g.weights.push_back(MatrixX<Scalar>::Zero(net.weights[l].rows(),
                                                      net.weights[l].cols()));
            g.biases.push_back(VectorX<Scalar>::Zero(net.biases[l].size()));
        }
        return g;
    }

    bool all_finite() const {
        for (const auto& w : weights)
            if (!w.allFinite()) return false;
        for (const auto& b : biases)
            if (!b.allFinite()) return false;
        return true;
    }
};

using Gradients = GradientsT<double>;

/// A mini-batch: one example per row plus its class index.
template <typename Scalar>
struct BatchT {
    MatrixX<Scalar> inputs;
    std::vector<Index> labels;

    Index size() const { return inputs.rows(); }

    void validate(Index k) const {
        if (inputs.rows() < 1) throw ValidationError("Batch: must contain at least one example");
        if (static_cast<Index>(labels.size()) != inputs.rows())
            throw DimensionError("Batch: label count does not match example count");
        for (Index i : labels)
            if (i < 0 || i >= k)
                throw OutOfRangeError("Batch: label " + std::to_string(i) +
                                      " out of range [0," + std::to_string(k) + ")");
    }
};

using Batch = BatchT<double>;

/// Glorot-style initialization: weights uniform on +-sqrt(6/(fan_in+fan_out))
/// so the sample variance is about 2/(fan_in+fan_out); biases zero. Fully
/// reproducible from the seed.
template <typename Scalar = double>
NetworkT<Scalar> init_network(const std::vector<Index>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw ValidationError("init_network: need at least input and output dimensions");
    for (Index d : layer_dims)
        if (d < 1) throw ValidationError("init_network: layer dimensions must be positive");
    NetworkT<Scalar> net;
    net.layer_dims = layer_dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const Index fan_in = layer_dims[l];
        const Index fan_out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        MatrixX<Scalar> w(fan_in, fan_out);
        for (Index r = 0; r < fan_in; ++r)
            for (Index c = 0; c < fan_out; ++c)
                w(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
        net.weights.push_back(std::move(w));
        net.biases.push_back(VectorX<Scalar>::Zero(fan_out));
    }
    return net;
}

/// Numerically stable row-wise softmax (max-logit subtraction).
template <typename Scalar>
MatrixX<Scalar> softmax_rows(const MatrixX<Scalar>& logits) {
    MatrixX<Scalar> out(logits.rows(), logits.cols());
    for (Index i = 0; i < logits.rows(); ++i) {
        const Scalar m = logits.row(i).maxCoeff();
        VectorX<Scalar> e = (logits.row(i).array() - m).exp().matrix().transpose();
        out.row(i) = (e / e.sum()).transpose();
    }
    return out;
}

namespace detail {

/// Activations kept for backpropagation: pre_activations[l] holds the affine
/// outputs of layer l, activations[l] the layer inputs (activations[0] = X).
template <typename Scalar>
struct ForwardTrace {
    std::vector<MatrixX<Scalar>> activations;
    std::vector<MatrixX<Scalar>> pre_activations;
    MatrixX<Scalar> probs;
};

template <typename Scalar>
ForwardTrace<Scalar> forward_trace(const NetworkT<Scalar>& net, const MatrixX<Scalar>& inputs) {
    net.validate();
    if (inputs.cols() != net.input_dim())
        throw DimensionError("forward: expected input width " +
                             std::to_string(net.input_dim()) + ", got " +
                             std::to_string(inputs.cols()));
    ForwardTrace<Scalar> trace;
    trace.activations.push_back(inputs);
    MatrixX<Scalar> a = inputs;
    const std::size_t num_layers = net.num_layers();
    for (std::size_t l = 0; l < num_layers; ++l) {
        MatrixX<Scalar> z = (a * net.weights[l]).rowwise() + net.biases[l].transpose();
        trace.pre_activations.push_back(z);
        if (l + 1 < num_layers) {
            a = z.cwiseMax(Scalar(0));  // rectifier
            trace.activations.push_back(a);
        } else {
            trace.probs = softmax_rows(z);
        }
    }
    return trace;
}

}  // namespace detail

/// Forward pass; each output row is a valid probability vector.
template <typename Scalar>
MatrixX<Scalar> forward(const NetworkT<Scalar>& net, const MatrixX<Scalar>& inputs) {
    return detail::forward_trace(net, inputs).probs;
}

/// Gradients of the mean batch loss for every weight and bias. loss_grads
/// holds per-example dL/dyhat rows (post-softmax); the softmax Jacobian and
/// the chain through the hidden layers are applied here.
template <typename Scalar>
GradientsT<Scalar> backward(const NetworkT<Scalar>& net, const BatchT<Scalar>& batch,
                            const MatrixX<Scalar>& loss_grads) {
    batch.validate(net.output_dim());
    if (loss_grads.rows() != batch.size() || loss_grads.cols() != net.output_dim())
        throw DimensionError("backward: loss gradient shape mismatch");

    const auto trace = detail::forward_trace(net, batch.inputs);
    const Index n = batch.size();
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);

    // Softmax Jacobian: dL/dz_j = p_j (dL/dp_j - sum_i dL/dp_i p_i).
    MatrixX<Scalar> delta(n, net.output_dim());
    for (Index i = 0; i < n; ++i) {
        const Scalar inner = loss_grads.row(i).dot(trace.probs.row(i));
        delta.row(i) =
            (trace.probs.row(i).array() * (loss_grads.row(i).array() - inner)).matrix();
    }

    GradientsT<Scalar> grads = GradientsT<Scalar>::zeros_like(net);
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        grads.weights[l] = trace.activations[l].transpose() * delta * inv_n;
        grads.biases[l] = delta.colwise().sum().transpose() * inv_n;
        if (l > 0) {
            MatrixX<Scalar> mask =
                (trace.pre_activations[l - 1].array() > Scalar(0)).template cast<Scalar>();
            delta = (delta * net.weights[l].transpose()).cwiseProduct(mask);
        }
    }
    return grads;
}

/// Training state: network, per-parameter momentum velocity, epoch counter
/// and the seed all randomness derives from.
template <typename Scalar>
struct TrainStateT {
    NetworkT<Scalar> net;
    GradientsT<Scalar> velocity;
    std::int64_t epoch = 0;
    std::uint64_t rng_seed = 0;

    static TrainStateT fresh(NetworkT<Scalar> net, std::uint64_t seed) {
        TrainStateT s;
        s.velocity = GradientsT<Scalar>::zeros_like(net);
        s.net = std::move(net);
        s.rng_seed = seed;
        return s;
    }
};

using TrainState = TrainStateT<double>;

/// SGD with momentum: v <- momentum v - lr grad; param <- param + v.
template <typename Scalar>
void sgd_step(TrainStateT<Scalar>& state, const GradientsT<Scalar>& grads, Scalar lr,
              Scalar momentum) {
    if (!(lr > Scalar(0))) throw ValidationError("sgd_step: learning rate must be positive");
    if (momentum < Scalar(0) || momentum >= Scalar(1))
        throw ValidationError("sgd_step: momentum must lie in [0, 1)");
    if (grads.weights.size() != state.net.num_layers() ||
        grads.biases.size() != state.net.num_layers())
        throw DimensionError("sgd_step: gradient layer count mismatch");
    if (!grads.all_finite())
        throw NumericError("sgd_step: non-finite gradient; training aborted");
    for (std::size_t l = 0; l < state.net.num_layers(); ++l) {
        if (grads.weights[l].rows() != state.net.weights[l].rows() ||
            grads.weights[l].cols() != state.net.weights[l].cols() ||
            grads.biases[l].size() != state.net.biases[l].size())
            throw DimensionError("sgd_step: gradient shape mismatch at layer " +
                                 std::to_string(l));
        state.velocity.weights[l] = momentum * state.velocity.weights[l] - lr * grads.weights[l];
        state.velocity.biases[l] = momentum * state.velocity.biases[l] - lr * grads.biases[l];
        state.net.weights[l] += state.velocity.weights[l];
        state.net.biases[l] += state.velocity.biases[l];
    }
}

/// First index of the row maximum; ties resolve to the lowest index.
template <typename Scalar>
Index argmax_row(const MatrixX<Scalar>& m, Index row) {
    Index best = 0;
    for (Index j = 1; j < m.cols(); ++j)
        if (m(row, j) > m(row, best)) best = j;
    return best;
}

}  // namespace curved
