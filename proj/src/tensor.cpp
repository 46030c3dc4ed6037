#include "snnr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace snnr {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
    if (a.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got " + shape_string(a.shape()));
    }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.shape());
    auto src = a.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
    return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    Tensor out(a.shape());
    auto x = a.data();
    auto y = b.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
    return out;
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
    if (shape.empty()) return 0;
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (auto d : shape_) {
        if (d == 0) throw DimensionError("tensor extents must be positive: " + shape_string(shape_));
    }
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    for (auto d : shape_) {
        if (d == 0) throw DimensionError("tensor extents must be positive: " + shape_string(shape_));
    }
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("shape " + shape_string(shape_) + " does not hold " +
                             std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions differ " + shape_string(a.shape()) + " · " +
                             shape_string(b.shape()));
    }
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aip * b(p, j);
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul_tn");
    require_rank(b, 2, "matmul_tn");
    const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul_tn: inner dimensions differ " + shape_string(a.shape()) +
                             "ᵀ · " + shape_string(b.shape()));
    }
    Tensor c({m, n});
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < m; ++i) {
            const double api = a(p, i);
            if (api == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += api * b(p, j);
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul_nt");
    require_rank(b, 2, "matmul_nt");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) {
        throw DimensionError("matmul_nt: inner dimensions differ " + shape_string(a.shape()) +
                             " · " + shape_string(b.shape()) + "ᵀ");
    }
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a(i, p) * b(j, p);
            c(i, j) = acc;
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    require_rank(a, 2, "transpose");
    Tensor t({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) t(j, i) = a(i, j);
    return t;
}

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
    if (stride == 0) throw DimensionError("stride must be positive");
    const std::size_t padded = input + 2 * padding;
    if (kernel == 0 || kernel > padded) {
        throw DimensionError("window " + std::to_string(kernel) + " exceeds padded input " +
                             std::to_string(padded));
    }
    if ((padded - kernel) % stride != 0) {
        throw DimensionError("window " + std::to_string(kernel) + " with stride " +
                             std::to_string(stride) + " does not tile input " +
                             std::to_string(padded));
    }
    return (padded - kernel) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, Conv2dGeometry geom, const Tensor& bias) {
    require_rank(input, 3, "conv2d input");
    require_rank(kernels, 4, "conv2d kernels");
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t f_out = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    if (kernels.dim(1) != c_in) {
        throw DimensionError("conv2d: kernel channels " + shape_string(kernels.shape()) +
                             " vs input " + shape_string(input.shape()));
    }
    if (!bias.empty() && bias.size() != f_out) {
        throw DimensionError("conv2d: bias must hold one value per filter");
    }
    const std::size_t oh = conv_output_extent(h, kh, geom.stride, geom.padding);
    const std::size_t ow = conv_output_extent(w, kw, geom.stride, geom.padding);
    const auto pad = static_cast<std::ptrdiff_t>(geom.padding);

    Tensor out({f_out, oh, ow});
    const double* kd = kernels.data().data();
    for (std::size_t f = 0; f < f_out; ++f) {
        const double b = bias.empty() ? 0.0 : bias[f];
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t c = 0; c < c_in; ++c) {
                    const double* k = kd + ((f * c_in + c) * kh) * kw;
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) - pad;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const auto ix =
                                static_cast<std::ptrdiff_t>(ox * geom.stride + kx) - pad;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += k[ky * kw + kx] * input(c, iy, ix);
                        }
                    }
                }
                out(f, oy, ox) = acc + b;
            }
        }
    }
    return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels,
                             const Shape& input_shape, Conv2dGeometry geom) {
    require_rank(grad_out, 3, "conv2d_backward_input grad");
    const std::size_t c_in = input_shape.at(0), h = input_shape.at(1), w = input_shape.at(2);
    const std::size_t f_out = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
    if (grad_out.dim(0) != f_out || oh != conv_output_extent(h, kh, geom.stride, geom.padding) ||
        ow != conv_output_extent(w, kw, geom.stride, geom.padding)) {
        throw DimensionError("conv2d_backward_input: gradient shape " +
                             shape_string(grad_out.shape()) + " does not match the layer");
    }
    const auto pad = static_cast<std::ptrdiff_t>(geom.padding);
    Tensor grad_in(input_shape);
    const double* kd = kernels.data().data();
    for (std::size_t f = 0; f < f_out; ++f) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = grad_out(f, oy, ox);
                if (g == 0.0) continue;
                for (std::size_t c = 0; c < c_in; ++c) {
                    const double* k = kd + ((f * c_in + c) * kh) * kw;
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) - pad;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const auto ix =
                                static_cast<std::ptrdiff_t>(ox * geom.stride + kx) - pad;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            grad_in(c, iy, ix) += g * k[ky * kw + kx];
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

void conv2d_accumulate_kernel_grad(const Tensor& grad_out, const Tensor& input,
                                   Conv2dGeometry geom, Tensor& grad_kernels) {
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t f_out = grad_kernels.dim(0), kh = grad_kernels.dim(2),
                      kw = grad_kernels.dim(3);
    const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
    const auto pad = static_cast<std::ptrdiff_t>(geom.padding);
    double* gk = grad_kernels.data().data();
    for (std::size_t f = 0; f < f_out; ++f) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = grad_out(f, oy, ox);
                if (g == 0.0) continue;
                for (std::size_t c = 0; c < c_in; ++c) {
                    double* k = gk + ((f * c_in + c) * kh) * kw;
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) - pad;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const auto ix =
                                static_cast<std::ptrdiff_t>(ox * geom.stride + kx) - pad;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            k[ky * kw + kx] += g * input(c, iy, ix);
                        }
                    }
                }
            }
        }
    }
}

Tensor avgpool2d(const Tensor& input, std::size_t k, std::size_t stride) {
    require_rank(input, 3, "avgpool2d");
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t oh = conv_output_extent(h, k, stride, 0);
    const std::size_t ow = conv_output_extent(w, k, stride, 0);
    const double inv = 1.0 / static_cast<double>(k * k);
    Tensor out({c_in, oh, ow});
    for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx)
                        acc += input(c, oy * stride + ky, ox * stride + kx);
                out(c, oy, ox) = acc * inv;
            }
    return out;
}

Tensor avgpool2d_backward(const Tensor& grad_out, const Shape& input_shape, std::size_t k,
                          std::size_t stride) {
    const double inv = 1.0 / static_cast<double>(k * k);
    Tensor grad_in(input_shape);
    for (std::size_t c = 0; c < grad_out.dim(0); ++c)
        for (std::size_t oy = 0; oy < grad_out.dim(1); ++oy)
            for (std::size_t ox = 0; ox < grad_out.dim(2); ++ox) {
                const double g = grad_out(c, oy, ox) * inv;
                for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx)
                        grad_in(c, oy * stride + ky, ox * stride + kx) += g;
            }
    return grad_in;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor add(const Tensor& a, double s) {
    return map(a, [s](double x) { return x + s; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
    return map(a, [s](double x) { return x * s; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw DomainError("clamp: lower bound exceeds upper bound");
    return map(a, [lo, hi](double x) { return std::clamp(x, lo, hi); });
}

Tensor sign(const Tensor& a) {
    return map(a, [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor relu(const Tensor& a) {
    return map(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor abs(const Tensor& a) {
    return map(a, [](double x) { return std::fabs(x); });
}

void axpy(double s, const Tensor& b, Tensor& a) {
    require_same_shape(a, b, "axpy");
    auto dst = a.data();
    auto src = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::fabs(v));
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace snnr
