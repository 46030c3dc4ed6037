#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "snnr/tensor.hpp"

namespace snnr {

/// Labelled images with pixels in [0, 1].
struct Dataset {
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return images.size(); }
    bool empty() const noexcept { return images.empty(); }
    /// Checks |images| == |labels|, label range and pixel range.
    void validate() const;
    bool operator==(const Dataset&) const = default;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Decodes IDX image and label buffers. Images become 1×rows×cols tensors
/// scaled by 1/255. Throws ParseError with the failing byte offset.
Dataset parse_mnist_idx(std::span<const std::uint8_t> image_bytes,
                        std::span<const std::uint8_t> label_bytes, std::size_t num_classes = 10);

Dataset load_mnist_idx(const std::filesystem::path& image_path,
                       const std::filesystem::path& label_path, std::size_t num_classes = 10);

/// IDX encoding of the images (pixel bytes are round(255·p)) and of the labels.
std::vector<std::uint8_t> encode_idx_images(std::span<const Tensor> images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::size_t> labels);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Seeded sample of n items without replacement. When n divides evenly
/// across classes and every class has enough items, each class contributes
/// n / num_classes items. The result is returned in shuffled order.
Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed);

/// Keeps the listed classes and relabels them 0..k-1 in list order.
Dataset select_classes(const Dataset& ds, const std::vector<std::size_t>& classes);

/// Drops `crop` pixels from every border, then averages factor×factor blocks.
/// 28×28 MNIST with crop 2 and factor 3 becomes 8×8.
Dataset downscale(const Dataset& ds, std::size_t crop, std::size_t factor);

/// First `n` samples and the rest.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n);

/// Noise of every blob coordinate (Gaussian, truncated at ±3σ).
inline constexpr double kBlobSigma = 0.1;

/// Gaussian clusters in [0, 1]^dim. Class c is centred at 0.5 + separation/2
/// on coordinates i ≡ c (mod classes) and 0.5 − separation/2 elsewhere. With
/// separation > 6·kBlobSigma every sample's own coordinate group lies
/// strictly above 0.5 and every other group strictly below, so the classes
/// are linearly separable.
Dataset make_blobs(std::size_t n_per_class, std::size_t classes, std::size_t dim,
                   double separation, std::uint64_t seed);

}  // namespace snnr
