#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "snnr/error.hpp"

namespace snnr {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// A default-constructed tensor is empty (no shape, no data). Every other
/// tensor has a shape of positive extents whose product equals the number
/// of stored values.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return shape_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& operator()(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    double operator()(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    /// Same values under a new shape of equal size.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const noexcept;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Linear algebra. All operands are rank 2.
Tensor matmul(const Tensor& a, const Tensor& b);     // a · b
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // aᵀ · b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a · bᵀ
Tensor transpose(const Tensor& a);

struct Conv2dGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

/// Output extent of a strided window sweep; throws DimensionError when the
/// window does not tile the padded input exactly.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

/// Cross-correlation of a C×H×W input with F×C×Kh×Kw kernels. `bias` is
/// either empty or holds F values.
Tensor conv2d(const Tensor& input, const Tensor& kernels, Conv2dGeometry geom,
              const Tensor& bias = {});
/// Gradient of conv2d w.r.t. its input, given the output gradient.
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels,
                             const Shape& input_shape, Conv2dGeometry geom);
/// Accumulates the gradient of conv2d w.r.t. its kernels into `grad_kernels`.
void conv2d_accumulate_kernel_grad(const Tensor& grad_out, const Tensor& input,
                                   Conv2dGeometry geom, Tensor& grad_kernels);

Tensor avgpool2d(const Tensor& input, std::size_t k, std::size_t stride);
Tensor avgpool2d_backward(const Tensor& grad_out, const Shape& input_shape, std::size_t k,
                          std::size_t stride);

// Elementwise kernels. Binary forms require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor clamp(const Tensor& a, double lo, double hi);
/// sign(0) == 0.
Tensor sign(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor abs(const Tensor& a);

/// In-place a += s·b.
void axpy(double s, const Tensor& b, Tensor& a);

double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace snnr
