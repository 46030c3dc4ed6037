#pragma once

#include <cstddef>
#include <cstdint>

#include "snnr/snn.hpp"
#include "snnr/tensor.hpp"

namespace snnr {

/// White-box L∞ attack settings. Pixel bounds are fixed to [0, 1].
struct AttackConfig {
    double epsilon = 0.1;
    double alpha = 0.00625;  // 2.5·ε / iterations for the defaults
    std::size_t iterations = 40;
    bool random_start = true;

    void validate() const;

    /// Defaults for budget ε: 40 iterations, α = 2.5·ε/40, random start.
    static AttackConfig for_epsilon(double epsilon, std::size_t iterations = 40,
                                    double alpha_factor = 2.5, bool random_start = true);
};

/// Per-budget attack settings: α = alpha_factor·ε / iterations.
struct AttackSchedule {
    std::size_t iterations = 40;
    double alpha_factor = 2.5;
    bool random_start = true;

    AttackConfig config(double epsilon) const {
        return AttackConfig::for_epsilon(epsilon, iterations, alpha_factor, random_start);
    }
};

/// ∇ₓ of the cross-entropy loss at (x, y), through the same backward path
/// used in training (surrogate spikes, straight-through encoder).
Tensor input_gradient(const Network& net, const Tensor& x, std::size_t y,
                      std::uint64_t encode_seed);

/// Clamps x into [x0 − ε, x0 + ε] ∩ [0, 1] elementwise.
Tensor project(const Tensor& x, const Tensor& x0, double epsilon);

/// x* = project(x + ε·sign(∇ₓL), x, ε).
Tensor fgsm(const Network& net, const Tensor& x, std::size_t y, double epsilon,
            std::uint64_t encode_seed);

/// Iterates x ← project(x + α·sign(∇ₓL(x, y)), x₀, ε), optionally from a
/// uniform random start in the ε-ball. The encoder seed stays fixed across
/// iterations; `start_seed` drives the random start.
Tensor pgd(const Network& net, const Tensor& x, std::size_t y, const AttackConfig& cfg,
           std::uint64_t encode_seed, std::uint64_t start_seed = 0);

/// True iff predict(net, x*) ≠ y. Samples misclassified before the attack count as successes.
bool attack_success(const Network& net, const Tensor& x_adv, std::size_t y,
                    std::uint64_t encode_seed);

}  // namespace snnr
