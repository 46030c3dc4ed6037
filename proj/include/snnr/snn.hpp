#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "snnr/tensor.hpp"

namespace snnr {

enum class ResetMode { to_zero, subtract_threshold };

/// Constants of a leaky integrate-and-fire population.
struct LifParams {
    double v_th = 1.0;
    /// Per-step retention of the membrane potential, in (0, 1]. 1 disables the leak.
    double leak = 0.9;
    ResetMode reset = ResetMode::subtract_threshold;
    double v_rest = 0.0;

    void validate() const;
};

struct LifState {
    Tensor v;
};

/// Membrane potentials of a freshly initialised population.
LifState rest_state(const Shape& shape, const LifParams& p);

struct LifStepResult {
    Tensor spikes;
    LifState next;
};

/// One time step: v' = leak·v + current, spike where v' ≥ v_th, reset the
/// neurons that spiked.
LifStepResult lif_step(const LifState& state, const Tensor& current, const LifParams& p);

/// Binary tensors, one per time step, all of the same feature shape.
struct SpikeTrain {
    std::vector<Tensor> steps;

    std::size_t window() const noexcept { return steps.size(); }
};

/// Bernoulli rate code: at every step, pixel p fires with probability p.
/// Pixels must lie in [0, 1].
SpikeTrain rate_encode(const Tensor& image, std::size_t time_window, std::uint64_t seed);

enum class EncoderKind {
    /// Bernoulli spikes per step (rate_encode).
    bernoulli,
    /// The pixel value itself is injected as input current at every step.
    constant_current,
};

enum class NeuronMode { lif, relu_static };

enum class LayerKind { conv2d, avgpool, dense };

/// Architecture of one layer. Input extents are derived by chaining from the
/// network input shape.
struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::size_t filters = 0;  // conv2d
    std::size_t kernel = 0;   // conv2d, avgpool
    std::size_t stride = 1;   // conv2d, avgpool
    std::size_t padding = 0;  // conv2d
    std::size_t units = 0;    // dense

    static LayerSpec conv(std::size_t filters, std::size_t kernel, std::size_t stride = 1,
                          std::size_t padding = 0);
    static LayerSpec pool(std::size_t kernel, std::size_t stride);
    static LayerSpec dense(std::size_t units);

    bool has_weights() const noexcept { return kind != LayerKind::avgpool; }
    bool operator==(const LayerSpec&) const = default;
};

struct SurrogateParams {
    /// Sharpness of the fast-sigmoid surrogate around the threshold.
    double slope = 100.0;
};

struct NetworkConfig {
    Shape input_shape;
    std::vector<LayerSpec> layers;
    NeuronMode mode = NeuronMode::lif;
    LifParams lif;
    std::size_t time_window = 64;
    EncoderKind encoder = EncoderKind::bernoulli;
    SurrogateParams surrogate;

    /// Output shape of every layer; throws DimensionError if the chain breaks.
    std::vector<Shape> layer_output_shapes() const;
    std::size_t num_classes() const;
    void validate() const;
};

struct LayerParams {
    Tensor weight;  // conv2d: F×C×K×K, dense: out×in, avgpool: empty
    Tensor bias;    // F or out; empty for avgpool

    bool operator==(const LayerParams&) const = default;
};

/// Expected parameter shapes of every layer.
std::vector<std::pair<Shape, Shape>> parameter_shapes(const NetworkConfig& config);

/// Architecture plus weights. Immutable during inference.
struct Network {
    NetworkConfig config;
    std::vector<LayerParams> params;

    /// Uniform ±sqrt(1/fan_in) initialisation of weights and biases.
    static Network initialize(const NetworkConfig& config, std::uint64_t seed);

    void validate() const;
    std::size_t parameter_count() const;
};

/// Pre-activation current of one layer for one input (conv/pool/dense kernel).
Tensor layer_forward(const LayerSpec& spec, const LayerParams& params, const Tensor& input);

/// Class scores: output spike rates in [0, 1] (lif) or relu outputs (relu-static).
/// `encode_seed` drives the Bernoulli encoder and is ignored otherwise.
Tensor forward(const Network& net, const Tensor& image, std::uint64_t encode_seed);

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax(const Tensor& scores);

std::size_t predict(const Network& net, const Tensor& image, std::uint64_t encode_seed);

std::string_view to_string(ResetMode m);
std::string_view to_string(EncoderKind e);
std::string_view to_string(NeuronMode m);
std::string_view to_string(LayerKind k);
ResetMode parse_reset_mode(std::string_view s);
EncoderKind parse_encoder_kind(std::string_view s);
NeuronMode parse_neuron_mode(std::string_view s);
LayerKind parse_layer_kind(std::string_view s);

}  // namespace snnr
