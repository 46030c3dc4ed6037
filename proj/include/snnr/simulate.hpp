#pragma once

// Time-unrolled simulation shared by inference and backpropagation through time.

#include <cstdint>
#include <vector>

#include "snnr/snn.hpp"

namespace snnr {

/// Fast-sigmoid surrogate derivative 1 / (1 + slope·|v − v_th|)².
double surrogate_grad(double v, double v_th, double slope);

/// How a neuron turns its pre-reset membrane potential into an output.
enum class SpikeFunction {
    /// Binary spike, Heaviside(v − v_th). Used for inference and training.
    heaviside,
    /// 1/2 + u / (1 + slope·|u|) with u = v − v_th: the primitive of the
    /// surrogate. A network built from it is smooth, and its exact gradient is
    /// what the surrogate backward pass computes.
    soft,
};

/// Relative slack of the firing test v ≥ V_th, so that rounding cannot
/// suppress a spike: ten steps of 0.3 into a non-leaky neuron with
/// subtract reset end at 1 − 2⁻⁵², not 1.
inline constexpr double kThresholdTolerance = 1e-12;

double spike_value(SpikeFunction fn, double v, double v_th, double slope);

/// Recorded activity of one layer at one step.
struct LayerStep {
    Tensor input;     // what the layer received
    Tensor membrane;  // lif: potential after integration, before reset; relu: pre-activation
    Tensor output;    // lif: spikes; relu: activation
};

struct Trace {
    /// steps[t][layer]; relu-static mode records a single step.
    std::vector<std::vector<LayerStep>> steps;
};

/// Per-step input to the first layer (encoded image).
std::vector<Tensor> encode_input(const NetworkConfig& config, const Tensor& image,
                                 std::uint64_t encode_seed);

/// Runs the network and returns its scores. When `trace` is non-null every
/// layer's per-step activity is recorded for the backward pass.
Tensor simulate(const Network& net, const Tensor& image, std::uint64_t encode_seed,
                SpikeFunction fn, Trace* trace);

}  // namespace snnr
