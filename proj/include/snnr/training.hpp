#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "snnr/data.hpp"
#include "snnr/simulate.hpp"
#include "snnr/snn.hpp"

namespace snnr {

enum class OptimizerKind { sgd, adam };

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Loss is always softmax cross-entropy on the network scores (output spike
/// rates in lif mode, relu outputs in relu-static mode).
struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamParams adam;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SoftmaxCrossEntropy {
    double loss = 0.0;
    Tensor grad;  // ∂loss/∂scores = softmax − onehot
};

SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& scores, std::size_t label);

/// Per-layer gradients, shaped like Network::params.
using ParamGrads = std::vector<LayerParams>;

ParamGrads zero_grads(const Network& net);

struct SampleGradient {
    double loss = 0.0;
    Tensor scores;
    ParamGrads params;  // empty unless requested
    Tensor input;       // empty unless requested
};

struct GradientRequest {
    bool params = true;
    bool input = false;
};

/// Loss and gradients for one labelled sample. In lif mode this is
/// backpropagation through time over the recorded trace: the spike
/// nonlinearity contributes surrogate_grad as its derivative, reset and leak
/// paths are differentiated exactly, and the encoder is straight-through
/// (every step's input counts 1 toward its pixel).
///
/// With SpikeFunction::soft the forward pass uses the surrogate's primitive,
/// which makes the result the exact gradient of that smooth network.
SampleGradient sample_gradient(const Network& net, const Tensor& image, std::size_t label,
                               std::uint64_t encode_seed, GradientRequest request = {},
                               SpikeFunction fn = SpikeFunction::heaviside);

/// Loss of one sample under the given spike function (finite-difference probes).
double sample_loss(const Network& net, const Tensor& image, std::size_t label,
                   std::uint64_t encode_seed, SpikeFunction fn = SpikeFunction::heaviside);

struct BatchGradient {
    double loss = 0.0;  // mean over the batch
    ParamGrads params;  // mean over the batch
    std::size_t correct = 0;
};

/// Mean cross-entropy gradient over a batch. Samples are reduced in order.
BatchGradient backward(const Network& net, std::span<const Tensor> images,
                       std::span<const std::size_t> labels, std::span<const std::uint64_t> seeds,
                       SpikeFunction fn = SpikeFunction::heaviside);

struct OptimizerState {
    std::size_t step = 0;
    ParamGrads first_moment;
    ParamGrads second_moment;
};

/// SGD (w ← w − lr·g) or Adam with bias correction.
void optimizer_step(Network& net, const ParamGrads& grads, const TrainConfig& cfg,
                    OptimizerState& state);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_accuracy = 0.0;
    double test_accuracy = -1.0;  // < 0 when no test set was given
    double loss = 0.0;            // mean training loss over the epoch
};

struct TrainResult {
    Network net;
    std::vector<EpochRecord> history;
};

/// Encoder seed of sample `index` during evaluation and attacks.
std::uint64_t eval_encode_seed(std::uint64_t eval_seed, std::size_t index);

/// Trains `net` in place of a copy. Shuffling and encoder noise derive from
/// cfg.seed; accuracies use eval_encode_seed(eval_seed, i). Throws
/// TrainingError if the loss or the gradients stop being finite.
TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg,
                  const Dataset* test = nullptr, std::uint64_t eval_seed = 0);

/// Fraction of samples with predict(net, x_i, eval_encode_seed(eval_seed, i)) == y_i.
double evaluate(const Network& net, const Dataset& data, std::uint64_t eval_seed = 0);

/// Predicted label of every sample, under the same seeds as evaluate().
std::vector<std::size_t> predictions(const Network& net, const Dataset& data,
                                     std::uint64_t eval_seed = 0);

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(std::string_view s);

}  // namespace snnr
