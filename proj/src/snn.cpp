#include "snnr/snn.hpp"

#include <algorithm>
#include <cmath>

#include "snnr/rng.hpp"
#include "snnr/simulate.hpp"

namespace snnr {

void LifParams::validate() const {
    if (!(v_th > 0.0) || !std::isfinite(v_th)) {
        throw DomainError("lif: v_th must be positive and finite");
    }
    if (!(leak > 0.0 && leak <= 1.0)) throw DomainError("lif: leak must lie in (0, 1]");
    if (!std::isfinite(v_rest)) throw DomainError("lif: v_rest must be finite");
}

LifState rest_state(const Shape& shape, const LifParams& p) {
    return LifState{Tensor(shape, p.v_rest)};
}

double surrogate_grad(double v, double v_th, double slope) {
    const double d = 1.0 + slope * std::fabs(v - v_th);
    return 1.0 / (d * d);
}

double spike_value(SpikeFunction fn, double v, double v_th, double slope) {
    const double u = v - v_th;
    if (fn == SpikeFunction::heaviside) {
        return u >= -kThresholdTolerance * std::max(1.0, std::fabs(v_th)) ? 1.0 : 0.0;
    }
    return 0.5 + u / (1.0 + slope * std::fabs(u));
}

namespace {

/// Integrates `current` into `v`, fires, and resets in place. Writes the
/// pre-reset potential and the outputs.
void integrate_and_fire(Tensor& v, const Tensor& current, const LifParams& p, SpikeFunction fn,
                        double slope, Tensor& membrane, Tensor& spikes) {
    auto vv = v.data();
    auto in = current.data();
    auto mem = membrane.data();
    auto out = spikes.data();
    for (std::size_t i = 0; i < vv.size(); ++i) {
        const double u = p.leak * vv[i] + in[i];
        const double s = spike_value(fn, u, p.v_th, slope);
        mem[i] = u;
        out[i] = s;
        if (p.reset == ResetMode::subtract_threshold) {
            vv[i] = u - p.v_th * s;
        } else {
            vv[i] = u * (1.0 - s) + p.v_rest * s;
        }
    }
}

void check_pixels(const Tensor& image) {
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double px = image[i];
        if (!(px >= 0.0 && px <= 1.0)) {
            throw DomainError("encoder: pixel " + std::to_string(i) + " = " + std::to_string(px) +
                              " outside [0, 1]");
        }
    }
}

}  // namespace

LifStepResult lif_step(const LifState& state, const Tensor& current, const LifParams& p) {
    if (state.v.shape() != current.shape()) {
        throw DimensionError("lif_step: state " + shape_string(state.v.shape()) + " vs current " +
                             shape_string(current.shape()));
    }
    p.validate();
    LifStepResult r{Tensor(current.shape()), state};
    Tensor membrane(current.shape());
    integrate_and_fire(r.next.v, current, p, SpikeFunction::heaviside, 0.0, membrane, r.spikes);
    return r;
}

SpikeTrain rate_encode(const Tensor& image, std::size_t time_window, std::uint64_t seed) {
    if (time_window == 0) throw DomainError("rate_encode: time window must be at least 1");
    check_pixels(image);
    Rng rng(seed);
    SpikeTrain train;
    train.steps.reserve(time_window);
    for (std::size_t t = 0; t < time_window; ++t) {
        Tensor step(image.shape());
        for (std::size_t i = 0; i < image.size(); ++i) {
            step[i] = uniform01(rng) < image[i] ? 1.0 : 0.0;
        }
        train.steps.push_back(std::move(step));
    }
    return train;
}

LayerSpec LayerSpec::conv(std::size_t filters, std::size_t kernel, std::size_t stride,
                          std::size_t padding) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.filters = filters;
    s.kernel = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::pool(std::size_t kernel, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::avgpool;
    s.kernel = kernel;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.units = units;
    return s;
}

std::vector<Shape> NetworkConfig::layer_output_shapes() const {
    if (input_shape.empty() || shape_size(input_shape) == 0) {
        throw DimensionError("network input shape must be non-empty");
    }
    std::vector<Shape> shapes;
    Shape cur = input_shape;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& s = layers[l];
        const std::string where = "layer " + std::to_string(l) + ": ";
        switch (s.kind) {
            case LayerKind::conv2d:
                if (cur.size() != 3) {
                    throw DimensionError(where + "conv2d needs a C×H×W input, got " +
                                         shape_string(cur));
                }
                if (s.filters == 0) throw DimensionError(where + "conv2d needs filters ≥ 1");
                cur = {s.filters, conv_output_extent(cur[1], s.kernel, s.stride, s.padding),
                       conv_output_extent(cur[2], s.kernel, s.stride, s.padding)};
                break;
            case LayerKind::avgpool:
                if (cur.size() != 3) {
                    throw DimensionError(where + "avgpool needs a C×H×W input, got " +
                                         shape_string(cur));
                }
                cur = {cur[0], conv_output_extent(cur[1], s.kernel, s.stride, 0),
                       conv_output_extent(cur[2], s.kernel, s.stride, 0)};
                break;
            case LayerKind::dense:
                if (s.units == 0) throw DimensionError(where + "dense needs units ≥ 1");
                cur = {s.units};
                break;
        }
        shapes.push_back(cur);
    }
    return shapes;
}

std::size_t NetworkConfig::num_classes() const {
    return shape_size(layer_output_shapes().back());
}

void NetworkConfig::validate() const {
    if (layers.empty()) throw DimensionError("network needs at least one layer");
    if (layers.back().kind != LayerKind::dense) {
        throw DimensionError("the last layer must be dense (one output per class)");
    }
    layer_output_shapes();
    if (mode == NeuronMode::lif) {
        lif.validate();
        if (time_window == 0) throw DomainError("time window must be at least 1");
        if (!(surrogate.slope > 0.0) || !std::isfinite(surrogate.slope)) {
            throw DomainError("surrogate slope must be positive and finite");
        }
    }
}

std::vector<std::pair<Shape, Shape>> parameter_shapes(const NetworkConfig& config) {
    const auto outs = config.layer_output_shapes();
    std::vector<std::pair<Shape, Shape>> shapes;
    Shape in = config.input_shape;
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
        const auto& s = config.layers[l];
        switch (s.kind) {
            case LayerKind::conv2d:
                shapes.push_back({{s.filters, in[0], s.kernel, s.kernel}, {s.filters}});
                break;
            case LayerKind::avgpool:
                shapes.push_back({{}, {}});
                break;
            case LayerKind::dense:
                shapes.push_back({{s.units, shape_size(in)}, {s.units}});
                break;
        }
        in = outs[l];
    }
    return shapes;
}

Network Network::initialize(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Network net{config, {}};
    Rng rng(derive_seed(seed, SeedStream::init));
    for (const auto& [wshape, bshape] : parameter_shapes(config)) {
        LayerParams lp;
        if (!wshape.empty()) {
            const std::size_t fan_in = shape_size(wshape) / wshape[0];
            const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
            lp.weight = Tensor(wshape);
            for (auto& w : lp.weight.data()) w = uniform(rng, -bound, bound);
            lp.bias = Tensor(bshape);
            for (auto& b : lp.bias.data()) b = uniform(rng, -bound, bound);
        }
        net.params.push_back(std::move(lp));
    }
    return net;
}

void Network::validate() const {
    config.validate();
    const auto shapes = parameter_shapes(config);
    if (params.size() != shapes.size()) {
        throw DimensionError("network has " + std::to_string(params.size()) +
                             " parameter sets for " + std::to_string(shapes.size()) + " layers");
    }
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        if (params[l].weight.shape() != shapes[l].first ||
            params[l].bias.shape() != shapes[l].second) {
            throw DimensionError("layer " + std::to_string(l) + ": parameters " +
                                 shape_string(params[l].weight.shape()) + "/" +
                                 shape_string(params[l].bias.shape()) + " expected " +
                                 shape_string(shapes[l].first) + "/" +
                                 shape_string(shapes[l].second));
        }
    }
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.weight.size() + p.bias.size();
    return n;
}

Tensor layer_forward(const LayerSpec& spec, const LayerParams& params, const Tensor& input) {
    switch (spec.kind) {
        case LayerKind::conv2d:
            return conv2d(input, params.weight, {spec.stride, spec.padding}, params.bias);
        case LayerKind::avgpool:
            return avgpool2d(input, spec.kernel, spec.stride);
        case LayerKind::dense: {
            const std::size_t in = params.weight.dim(1);
            if (input.size() != in) {
                throw DimensionError("dense: input " + shape_string(input.shape()) + " vs " +
                                     std::to_string(in) + " weights per unit");
            }
            Tensor out = matmul(params.weight, input.reshaped({in, 1}));
            out = out.reshaped({params.weight.dim(0)});
            axpy(1.0, params.bias, out);
            return out;
        }
    }
    throw DimensionError("unknown layer kind");
}

std::vector<Tensor> encode_input(const NetworkConfig& config, const Tensor& image,
                                 std::uint64_t encode_seed) {
    if (config.encoder == EncoderKind::bernoulli) {
        return rate_encode(image, config.time_window, encode_seed).steps;
    }
    if (config.time_window == 0) throw DomainError("encoder: time window must be at least 1");
    check_pixels(image);
    return std::vector<Tensor>(config.time_window, image);
}

Tensor simulate(const Network& net, const Tensor& image, std::uint64_t encode_seed,
                SpikeFunction fn, Trace* trace) {
    const auto& cfg = net.config;
    if (image.shape() != cfg.input_shape) {
        throw DimensionError("input " + shape_string(image.shape()) + " does not match network input " +
                             shape_string(cfg.input_shape));
    }
    const std::size_t n_layers = cfg.layers.size();
    if (trace) trace->steps.clear();

    if (cfg.mode == NeuronMode::relu_static) {
        Tensor x = image;
        std::vector<LayerStep> rec;
        for (std::size_t l = 0; l < n_layers; ++l) {
            Tensor z = layer_forward(cfg.layers[l], net.params[l], x);
            Tensor a = relu(z);
            if (trace) rec.push_back({x, z, a});
            x = std::move(a);
        }
        if (trace) trace->steps.push_back(std::move(rec));
        return x.reshaped({x.size()});
    }

    const auto out_shapes = cfg.layer_output_shapes();
    std::vector<Tensor> v;
    v.reserve(n_layers);
    for (const auto& s : out_shapes) v.push_back(rest_state(s, cfg.lif).v);

    const double slope = cfg.surrogate.slope;
    Tensor counts({shape_size(out_shapes.back())});
    auto inputs = encode_input(cfg, image, encode_seed);
    if (trace) trace->steps.reserve(inputs.size());
    for (auto& input : inputs) {
        Tensor x = std::move(input);
        std::vector<LayerStep> rec;
        if (trace) rec.reserve(n_layers);
        for (std::size_t l = 0; l < n_layers; ++l) {
            Tensor current = layer_forward(cfg.layers[l], net.params[l], x);
            Tensor membrane(out_shapes[l]);
            Tensor spikes(out_shapes[l]);
            integrate_and_fire(v[l], current, cfg.lif, fn, slope, membrane, spikes);
            if (trace) rec.push_back({std::move(x), std::move(membrane), spikes});
            x = std::move(spikes);
        }
        axpy(1.0, x, counts);
        if (trace) trace->steps.push_back(std::move(rec));
    }
    return scale(counts, 1.0 / static_cast<double>(cfg.time_window));
}

Tensor forward(const Network& net, const Tensor& image, std::uint64_t encode_seed) {
    return simulate(net, image, encode_seed, SpikeFunction::heaviside, nullptr);
}

std::size_t argmax(const Tensor& scores) {
    if (scores.size() == 0) throw DimensionError("argmax of an empty tensor");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

std::size_t predict(const Network& net, const Tensor& image, std::uint64_t encode_seed) {
    return argmax(forward(net, image, encode_seed));
}

std::string_view to_string(ResetMode m) {
    return m == ResetMode::to_zero ? "to-zero" : "subtract-threshold";
}

std::string_view to_string(EncoderKind e) {
    return e == EncoderKind::bernoulli ? "bernoulli" : "constant-current";
}

std::string_view to_string(NeuronMode m) {
    return m == NeuronMode::lif ? "lif" : "relu-static";
}

std::string_view to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::avgpool: return "avgpool";
        case LayerKind::dense: return "dense";
    }
    return "?";
}

ResetMode parse_reset_mode(std::string_view s) {
    if (s == "to-zero") return ResetMode::to_zero;
    if (s == "subtract-threshold") return ResetMode::subtract_threshold;
    throw DomainError("unknown reset mode '" + std::string(s) + "'");
}

EncoderKind parse_encoder_kind(std::string_view s) {
    if (s == "bernoulli") return EncoderKind::bernoulli;
    if (s == "constant-current") return EncoderKind::constant_current;
    throw DomainError("unknown encoder '" + std::string(s) + "'");
}

NeuronMode parse_neuron_mode(std::string_view s) {
    if (s == "lif") return NeuronMode::lif;
    if (s == "relu-static") return NeuronMode::relu_static;
    throw DomainError("unknown neuron mode '" + std::string(s) + "'");
}

LayerKind parse_layer_kind(std::string_view s) {
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "avgpool") return LayerKind::avgpool;
    if (s == "dense") return LayerKind::dense;
    throw DomainError("unknown layer kind '" + std::string(s) + "'");
}

}  // namespace snnr
