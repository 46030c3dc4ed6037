#pragma once

// Reference implementations used as test oracles. They share no kernels with
// the library: plain loops over indices, written for clarity over speed.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "snnr/snn.hpp"
#include "snnr/tensor.hpp"

namespace oracle {

using snnr::Tensor;

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor conv2d(const Tensor& x, const Tensor& k, std::size_t stride, std::size_t pad,
              const Tensor& bias = {});
Tensor avgpool(const Tensor& x, std::size_t k, std::size_t stride);
Tensor abs(const Tensor& x);

/// Re-simulates the network neuron by neuron. With `soft`, every Heaviside
/// spike becomes 1/2 + u/(1 + k|u|), u = v − V_th, k = surrogate slope.
Tensor forward(const snnr::Network& net, const Tensor& image, std::uint64_t encode_seed,
               bool soft = false);

/// −log softmax(scores)[label], via log-sum-exp.
double cross_entropy(const Tensor& scores, std::size_t label);

double loss(const snnr::Network& net, const Tensor& image, std::size_t label,
            std::uint64_t encode_seed, bool soft = false);

/// Central finite differences of loss() over every weight and bias.
std::vector<snnr::LayerParams> param_gradient_fd(const snnr::Network& net, const Tensor& image,
                                                 std::size_t label, std::uint64_t encode_seed,
                                                 bool soft, double h);

/// Central finite differences of loss() over every pixel. Only meaningful
/// when the encoder is continuous in the pixel (relu-static or constant current).
Tensor input_gradient_fd(const snnr::Network& net, const Tensor& image, std::size_t label,
                         std::uint64_t encode_seed, bool soft, double h);

/// max |a − b| / max(|a|, |b|, floor) over corresponding entries.
double max_relative_error(const Tensor& a, const Tensor& b, double floor);

}  // namespace oracle

namespace snnr {

/// Readable gtest output for tensor comparisons.
void PrintTo(const Tensor& t, std::ostream* os);

}  // namespace snnr
