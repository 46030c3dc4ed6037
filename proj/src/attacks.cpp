#include "snnr/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "snnr/rng.hpp"
#include "snnr/training.hpp"

namespace snnr {

void AttackConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw DomainError("attack: epsilon must be finite and non-negative");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("attack: alpha must be positive");
    if (iterations == 0) throw DomainError("attack: iterations must be at least 1");
}

AttackConfig AttackConfig::for_epsilon(double epsilon, std::size_t iterations, double alpha_factor,
                                       bool random_start) {
    AttackConfig c;
    c.epsilon = epsilon;
    c.iterations = iterations;
    c.random_start = random_start;
    c.alpha = alpha_factor * epsilon / static_cast<double>(iterations);
    // α must stay positive even for ε = 0; the projection then pins x to x0.
    if (!(c.alpha > 0.0)) c.alpha = 1.0 / static_cast<double>(iterations);
    return c;
}

Tensor input_gradient(const Network& net, const Tensor& x, std::size_t y,
                      std::uint64_t encode_seed) {
    return sample_gradient(net, x, y, encode_seed, {.params = false, .input = true}).input;
}

Tensor project(const Tensor& x, const Tensor& x0, double epsilon) {
    if (x.shape() != x0.shape()) {
        throw DimensionError("project: " + shape_string(x.shape()) + " vs " +
                             shape_string(x0.shape()));
    }
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        // x0 ± ε can round outward; pull the bounds in until the computed
        // distance is at most ε so that ‖out − x0‖∞ ≤ ε holds exactly.
        double lo = x0[i] - epsilon, hi = x0[i] + epsilon;
        while (x0[i] - lo > epsilon) lo = std::nextafter(lo, hi);
        while (hi - x0[i] > epsilon) hi = std::nextafter(hi, lo);
        // Ball first, then pixel range: when x0 lies in [0, 1] the result is
        // the clamp into the intersection; otherwise [0, 1] wins.
        out[i] = std::clamp(std::clamp(x[i], lo, hi), 0.0, 1.0);
    }
    return out;
}

namespace {

Tensor signed_step(const Tensor& x, const Tensor& grad, double step) {
    Tensor s = sign(grad);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + step * s[i];
    return out;
}

}  // namespace

Tensor pgd(const Network& net, const Tensor& x, std::size_t y, const AttackConfig& cfg,
           std::uint64_t encode_seed, std::uint64_t start_seed) {
    cfg.validate();
    Tensor cur = x;
    if (cfg.random_start && cfg.epsilon > 0.0) {
        Rng rng(start_seed);
        Tensor jitter(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            jitter[i] = x[i] + uniform(rng, -cfg.epsilon, cfg.epsilon);
        }
        cur = project(jitter, x, cfg.epsilon);
    } else {
        cur = project(x, x, cfg.epsilon);
    }
    // A zero budget pins every iterate to the projection of x.
    if (cfg.epsilon == 0.0) return cur;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const Tensor g = input_gradient(net, cur, y, encode_seed);
        cur = project(signed_step(cur, g, cfg.alpha), x, cfg.epsilon);
    }
    return cur;
}

Tensor fgsm(const Network& net, const Tensor& x, std::size_t y, double epsilon,
            std::uint64_t encode_seed) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw DomainError("fgsm: epsilon must be finite and non-negative");
    }
    const Tensor g = input_gradient(net, x, y, encode_seed);
    return project(signed_step(x, g, epsilon), x, epsilon);
}

bool attack_success(const Network& net, const Tensor& x_adv, std::size_t y,
                    std::uint64_t encode_seed) {
    return predict(net, x_adv, encode_seed) != y;
}

}  // namespace snnr
