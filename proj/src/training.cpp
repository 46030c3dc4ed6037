#include "snnr/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snnr/rng.hpp"

namespace snnr {

void TrainConfig::validate() const {
    if (batch_size == 0) throw DomainError("train: batch_size must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw DomainError("train: learning_rate must be positive");
    }
    if (optimizer == OptimizerKind::adam) {
        if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
            throw DomainError("train: adam betas must lie in [0, 1)");
        }
        if (!(adam.epsilon > 0.0)) throw DomainError("train: adam epsilon must be positive");
    }
}

SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& scores, std::size_t label) {
    if (label >= scores.size()) {
        throw DomainError("label " + std::to_string(label) + " outside " +
                          std::to_string(scores.size()) + " classes");
    }
    const double m = *std::max_element(scores.data().begin(), scores.data().end());
    double z = 0.0;
    for (double s : scores.data()) z += std::exp(s - m);
    SoftmaxCrossEntropy r;
    r.loss = std::log(z) + m - scores[label];
    r.grad = Tensor(scores.shape());
    for (std::size_t i = 0; i < scores.size(); ++i) r.grad[i] = std::exp(scores[i] - m) / z;
    r.grad[label] -= 1.0;
    return r;
}

ParamGrads zero_grads(const Network& net) {
    ParamGrads g;
    g.reserve(net.params.size());
    for (const auto& p : net.params) {
        LayerParams z;
        if (!p.weight.empty()) z.weight = Tensor(p.weight.shape());
        if (!p.bias.empty()) z.bias = Tensor(p.bias.shape());
        g.push_back(std::move(z));
    }
    return g;
}

namespace {

/// Accumulates parameter gradients of one layer application and, when
/// `need_input`, returns the gradient w.r.t. the layer input.
Tensor layer_backward(const LayerSpec& spec, const LayerParams& params, const Tensor& input,
                      const Tensor& grad_current, LayerParams* grads, bool need_input) {
    switch (spec.kind) {
        case LayerKind::conv2d: {
            const Conv2dGeometry geom{spec.stride, spec.padding};
            if (grads) {
                conv2d_accumulate_kernel_grad(grad_current, input, geom, grads->weight);
                const std::size_t plane = grad_current.dim(1) * grad_current.dim(2);
                for (std::size_t f = 0; f < grad_current.dim(0); ++f) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) acc += grad_current[f * plane + i];
                    grads->bias[f] += acc;
                }
            }
            if (!need_input) return {};
            return conv2d_backward_input(grad_current, params.weight, input.shape(), geom);
        }
        case LayerKind::avgpool:
            if (!need_input) return {};
            return avgpool2d_backward(grad_current, input.shape(), spec.kernel, spec.stride);
        case LayerKind::dense: {
            const std::size_t out = params.weight.dim(0), in = params.weight.dim(1);
            const double* w = params.weight.data().data();
            if (grads) {
                double* gw = grads->weight.data().data();
                for (std::size_t i = 0; i < out; ++i) {
                    const double g = grad_current[i];
                    grads->bias[i] += g;
                    if (g == 0.0) continue;
                    for (std::size_t j = 0; j < in; ++j) gw[i * in + j] += g * input[j];
                }
            }
            if (!need_input) return {};
            Tensor grad_in(input.shape());
            for (std::size_t i = 0; i < out; ++i) {
                const double g = grad_current[i];
                if (g == 0.0) continue;
                for (std::size_t j = 0; j < in; ++j) grad_in[j] += w[i * in + j] * g;
            }
            return grad_in;
        }
    }
    return {};
}

}  // namespace

SampleGradient sample_gradient(const Network& net, const Tensor& image, std::size_t label,
                               std::uint64_t encode_seed, GradientRequest request,
                               SpikeFunction fn) {
    const auto& cfg = net.config;
    Trace trace;
    SampleGradient out;
    out.scores = simulate(net, image, encode_seed, fn, &trace);
    auto ce = softmax_cross_entropy(out.scores, label);
    out.loss = ce.loss;
    if (!std::isfinite(out.loss)) throw TrainingError("non-finite loss");
    if (request.params) out.params = zero_grads(net);
    if (request.input) out.input = Tensor(image.shape());

    const std::size_t n_layers = cfg.layers.size();
    const auto out_shapes = cfg.layer_output_shapes();
    auto grads_for = [&](std::size_t l) -> LayerParams* {
        return request.params && cfg.layers[l].has_weights() ? &out.params[l] : nullptr;
    };

    if (cfg.mode == NeuronMode::relu_static) {
        const auto& steps = trace.steps.front();
        Tensor d = ce.grad.reshaped(out_shapes.back());
        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& rec = steps[l];
            Tensor dz(rec.membrane.shape());
            for (std::size_t i = 0; i < dz.size(); ++i) dz[i] = rec.membrane[i] > 0.0 ? d[i] : 0.0;
            const bool need_input = l > 0 || request.input;
            d = layer_backward(cfg.layers[l], net.params[l], rec.input, dz, grads_for(l), need_input);
        }
        if (request.input) out.input = d.reshaped(image.shape());
        return out;
    }

    const auto& lif = cfg.lif;
    const double slope = cfg.surrogate.slope;
    const bool subtract = lif.reset == ResetMode::subtract_threshold;
    const std::size_t window = trace.steps.size();
    const Tensor d_top =
        scale(ce.grad, 1.0 / static_cast<double>(cfg.time_window)).reshaped(out_shapes.back());

    // dv_post[l] holds ∂L/∂v_t, the gradient w.r.t. layer l's post-reset potential
    // at the step being processed; it arrives through the leak term of step t+1.
    std::vector<Tensor> dv_post;
    dv_post.reserve(n_layers);
    for (const auto& s : out_shapes) dv_post.emplace_back(s);

    for (std::size_t t = window; t-- > 0;) {
        Tensor d_above = d_top;
        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& rec = trace.steps[t][l];
            Tensor du(rec.membrane.shape());
            auto& dv = dv_post[l];
            for (std::size_t i = 0; i < du.size(); ++i) {
                const double u = rec.membrane[i];
                const double s = rec.output[i];
                const double dv_ds = subtract ? -lif.v_th : (lif.v_rest - u);
                const double dv_du = subtract ? 1.0 : (1.0 - s);
                const double ds = d_above[i] + dv[i] * dv_ds;
                du[i] = dv[i] * dv_du + ds * surrogate_grad(u, lif.v_th, slope);
                dv[i] = lif.leak * du[i];
            }
            const bool need_input = l > 0 || request.input;
            d_above =
                layer_backward(cfg.layers[l], net.params[l], rec.input, du, grads_for(l), need_input);
        }
        if (request.input) axpy(1.0, d_above.reshaped(image.shape()), out.input);
    }
    return out;
}

double sample_loss(const Network& net, const Tensor& image, std::size_t label,
                   std::uint64_t encode_seed, SpikeFunction fn) {
    return softmax_cross_entropy(simulate(net, image, encode_seed, fn, nullptr), label).loss;
}

BatchGradient backward(const Network& net, std::span<const Tensor> images,
                       std::span<const std::size_t> labels, std::span<const std::uint64_t> seeds,
                       SpikeFunction fn) {
    if (images.size() != labels.size() || images.size() != seeds.size()) {
        throw DimensionError("backward: images, labels and seeds differ in length");
    }
    if (images.empty()) throw DomainError("backward: empty batch");
    BatchGradient batch;
    batch.params = zero_grads(net);
    for (std::size_t n = 0; n < images.size(); ++n) {
        auto g = sample_gradient(net, images[n], labels[n], seeds[n], {}, fn);
        batch.loss += g.loss;
        if (argmax(g.scores) == labels[n]) ++batch.correct;
        for (std::size_t l = 0; l < g.params.size(); ++l) {
            if (g.params[l].weight.empty()) continue;
            axpy(1.0, g.params[l].weight, batch.params[l].weight);
            axpy(1.0, g.params[l].bias, batch.params[l].bias);
        }
    }
    const double inv = 1.0 / static_cast<double>(images.size());
    batch.loss *= inv;
    for (auto& lp : batch.params) {
        if (lp.weight.empty()) continue;
        lp.weight = scale(lp.weight, inv);
        lp.bias = scale(lp.bias, inv);
    }
    return batch;
}

void optimizer_step(Network& net, const ParamGrads& grads, const TrainConfig& cfg,
                    OptimizerState& state) {
    if (grads.size() != net.params.size()) {
        throw DimensionError("optimizer_step: gradient count does not match the network");
    }
    ++state.step;
    const double lr = cfg.learning_rate;
    if (cfg.optimizer == OptimizerKind::sgd) {
        for (std::size_t l = 0; l < grads.size(); ++l) {
            if (net.params[l].weight.empty()) continue;
            axpy(-lr, grads[l].weight, net.params[l].weight);
            axpy(-lr, grads[l].bias, net.params[l].bias);
        }
        return;
    }

    if (state.first_moment.empty()) {
        state.first_moment = zero_grads(net);
        state.second_moment = zero_grads(net);
    }
    const auto& a = cfg.adam;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(a.beta1, t);
    const double c2 = 1.0 - std::pow(a.beta2, t);
    auto update = [&](Tensor& w, const Tensor& g, Tensor& m, Tensor& v) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
            v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            w[i] -= lr * m_hat / (std::sqrt(v_hat) + a.epsilon);
        }
    };
    for (std::size_t l = 0; l < grads.size(); ++l) {
        if (net.params[l].weight.empty()) continue;
        update(net.params[l].weight, grads[l].weight, state.first_moment[l].weight,
               state.second_moment[l].weight);
        update(net.params[l].bias, grads[l].bias, state.first_moment[l].bias,
               state.second_moment[l].bias);
    }
}

std::uint64_t eval_encode_seed(std::uint64_t eval_seed, std::size_t index) {
    return derive_seed(eval_seed, SeedStream::eval_encode, {index});
}

std::vector<std::size_t> predictions(const Network& net, const Dataset& data,
                                     std::uint64_t eval_seed) {
    std::vector<std::size_t> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back(predict(net, data.images[i], eval_encode_seed(eval_seed, i)));
    }
    return out;
}

double evaluate(const Network& net, const Dataset& data, std::uint64_t eval_seed) {
    if (data.empty()) throw DomainError("evaluate: empty dataset");
    const auto pred = predictions(net, data, eval_seed);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) correct += pred[i] == data.labels[i];
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg, const Dataset* test,
                  std::uint64_t eval_seed) {
    cfg.validate();
    net.validate();
    if (data.empty()) throw DomainError("train: empty dataset");
    if (data.images.size() != data.labels.size()) {
        throw DomainError("train: images and labels differ in length");
    }

    TrainResult result{std::move(net), {}};
    OptimizerState state;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, SeedStream::shuffle, {epoch}));
        shuffle(order, rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Tensor> images;
            std::vector<std::size_t> labels;
            std::vector<std::uint64_t> seeds;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                images.push_back(data.images[i]);
                labels.push_back(data.labels[i]);
                seeds.push_back(derive_seed(cfg.seed, SeedStream::train_encode, {epoch, i}));
            }
            BatchGradient g;
            try {
                g = backward(result.net, images, labels, seeds);
            } catch (const TrainingError& e) {
                throw TrainingError("epoch " + std::to_string(epoch + 1) + ", batch at " +
                                    std::to_string(start) + ": " + e.what());
            }
            bool finite = std::isfinite(g.loss);
            for (const auto& lp : g.params) {
                finite = finite && (lp.weight.empty() || (lp.weight.all_finite() && lp.bias.all_finite()));
            }
            if (!finite) {
                throw TrainingError("epoch " + std::to_string(epoch + 1) + ", batch at " +
                                    std::to_string(start) + ": loss or gradient diverged");
            }
            loss_sum += g.loss * static_cast<double>(end - start);
            optimizer_step(result.net, g.params, cfg, state);
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.loss = loss_sum / static_cast<double>(data.size());
        rec.train_accuracy = evaluate(result.net, data, eval_seed);
        if (test && !test->empty()) rec.test_accuracy = evaluate(result.net, *test, eval_seed);
        result.history.push_back(rec);
    }
    return result;
}

std::string_view to_string(OptimizerKind k) {
    return k == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer_kind(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw DomainError("unknown optimizer '" + std::string(s) + "'");
}

}  // namespace snnr
