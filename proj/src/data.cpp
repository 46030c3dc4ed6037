#include "snnr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "snnr/rng.hpp"

namespace snnr {

namespace {

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, const char* what)
        : bytes_(bytes), what_(what) {}

    std::uint32_t read_u32be() {
        need(4, "header field");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* field) {
        need(n, field);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const noexcept { return pos_; }

private:
    void need(std::size_t n, const char* field) const {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(std::string(what_) + ": truncated " + field + ", need " +
                                 std::to_string(n) + " bytes, have " +
                                 std::to_string(bytes_.size() - pos_),
                             pos_);
        }
    }

    std::span<const std::uint8_t> bytes_;
    const char* what_;
    std::size_t pos_ = 0;
};

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

}  // namespace

void Dataset::validate() const {
    if (images.size() != labels.size()) {
        throw DomainError("dataset: " + std::to_string(images.size()) + " images but " +
                          std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < size(); ++i) {
        if (labels[i] >= num_classes) {
            throw DomainError("dataset: label " + std::to_string(labels[i]) + " of sample " +
                              std::to_string(i) + " outside [0, " + std::to_string(num_classes) +
                              ")");
        }
        for (double px : images[i].data()) {
            if (!(px >= 0.0 && px <= 1.0)) {
                throw DomainError("dataset: sample " + std::to_string(i) +
                                  " has a pixel outside [0, 1]");
            }
        }
    }
}

Dataset parse_mnist_idx(std::span<const std::uint8_t> image_bytes,
                        std::span<const std::uint8_t> label_bytes, std::size_t num_classes) {
    ByteReader img(image_bytes, "idx images");
    const std::uint32_t img_magic = img.read_u32be();
    if (img_magic != kIdxImageMagic) {
        throw ParseError("idx images: bad magic " + hex32(img_magic) + ", expected " +
                             hex32(kIdxImageMagic),
                         0);
    }
    const std::uint32_t count = img.read_u32be();
    const std::uint32_t rows = img.read_u32be();
    const std::uint32_t cols = img.read_u32be();
    if (rows == 0 || cols == 0) throw ParseError("idx images: zero image extent", 8);

    ByteReader lab(label_bytes, "idx labels");
    const std::uint32_t lab_magic = lab.read_u32be();
    if (lab_magic != kIdxLabelMagic) {
        throw ParseError("idx labels: bad magic " + hex32(lab_magic) + ", expected " +
                             hex32(kIdxLabelMagic),
                         0);
    }
    const std::uint32_t label_count = lab.read_u32be();
    if (label_count != count) {
        throw ParseError("idx labels: count " + std::to_string(label_count) +
                             " differs from image count " + std::to_string(count),
                         4);
    }

    Dataset ds;
    ds.num_classes = num_classes;
    ds.images.reserve(count);
    ds.labels.reserve(count);
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    for (std::uint32_t n = 0; n < count; ++n) {
        auto raw = img.take(pixels, "pixel data");
        Tensor t({1, rows, cols});
        for (std::size_t i = 0; i < pixels; ++i) t[i] = raw[i] / 255.0;
        ds.images.push_back(std::move(t));

        const std::size_t at = lab.pos();
        const std::uint8_t label = lab.take(1, "label data")[0];
        if (label >= num_classes) {
            throw ParseError("idx labels: label " + std::to_string(label) + " outside [0, " +
                                 std::to_string(num_classes) + ")",
                             at);
        }
        ds.labels.push_back(label);
    }
    return ds;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Dataset load_mnist_idx(const std::filesystem::path& image_path,
                       const std::filesystem::path& label_path, std::size_t num_classes) {
    const auto images = read_file(image_path);
    const auto labels = read_file(label_path);
    return parse_mnist_idx(images, labels, num_classes);
}

std::vector<std::uint8_t> encode_idx_images(std::span<const Tensor> images) {
    std::vector<std::uint8_t> out;
    put_u32be(out, kIdxImageMagic);
    put_u32be(out, static_cast<std::uint32_t>(images.size()));
    std::size_t rows = 1, cols = 1;
    if (!images.empty()) {
        const auto& s = images.front().shape();
        rows = s.size() >= 2 ? s[s.size() - 2] : 1;
        cols = s.back();
    }
    put_u32be(out, static_cast<std::uint32_t>(rows));
    put_u32be(out, static_cast<std::uint32_t>(cols));
    for (const auto& img : images) {
        if (img.size() != rows * cols) {
            throw DimensionError("idx images: all images must share one shape");
        }
        for (double px : img.data()) {
            out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(px, 0.0, 1.0) * 255.0)));
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::size_t> labels) {
    std::vector<std::uint8_t> out;
    put_u32be(out, kIdxLabelMagic);
    put_u32be(out, static_cast<std::uint32_t>(labels.size()));
    for (auto l : labels) {
        if (l > 255) throw DomainError("idx labels must fit in one byte");
        out.push_back(static_cast<std::uint8_t>(l));
    }
    return out;
}

Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n > ds.size()) {
        throw DomainError("subset: requested " + std::to_string(n) + " of " +
                          std::to_string(ds.size()) + " samples");
    }
    Rng rng(derive_seed(seed, SeedStream::subset));
    std::vector<std::size_t> chosen;

    bool stratified = ds.num_classes > 0 && n % ds.num_classes == 0;
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(ds.labels[i]).push_back(i);
    const std::size_t per_class = ds.num_classes ? n / ds.num_classes : 0;
    if (stratified) {
        for (const auto& members : by_class) {
            if (members.size() < per_class) stratified = false;
        }
    }
    if (stratified) {
        for (auto& members : by_class) {
            shuffle(members, rng);
            chosen.insert(chosen.end(), members.begin(), members.begin() + per_class);
        }
    } else {
        std::vector<std::size_t> all(ds.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        shuffle(all, rng);
        chosen.assign(all.begin(), all.begin() + n);
    }
    shuffle(chosen, rng);

    Dataset out;
    out.num_classes = ds.num_classes;
    for (auto i : chosen) {
        out.images.push_back(ds.images[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

Dataset select_classes(const Dataset& ds, const std::vector<std::size_t>& classes) {
    if (classes.empty()) throw DomainError("select_classes: no classes given");
    Dataset out;
    out.num_classes = classes.size();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto it = std::find(classes.begin(), classes.end(), ds.labels[i]);
        if (it == classes.end()) continue;
        out.images.push_back(ds.images[i]);
        out.labels.push_back(static_cast<std::size_t>(it - classes.begin()));
    }
    return out;
}

Dataset downscale(const Dataset& ds, std::size_t crop, std::size_t factor) {
    if (factor == 0) throw DomainError("downscale: factor must be positive");
    Dataset out;
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.images.reserve(ds.size());
    for (const auto& img : ds.images) {
        if (img.rank() != 3) throw DimensionError("downscale expects C×H×W images");
        const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
        if (2 * crop >= h || 2 * crop >= w) throw DimensionError("downscale: crop too large");
        Tensor cropped({c, h - 2 * crop, w - 2 * crop});
        for (std::size_t k = 0; k < c; ++k)
            for (std::size_t y = 0; y < cropped.dim(1); ++y)
                for (std::size_t x = 0; x < cropped.dim(2); ++x)
                    cropped(k, y, x) = img(k, y + crop, x + crop);
        out.images.push_back(avgpool2d(cropped, factor, factor));
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n) {
    if (n > ds.size()) throw DomainError("split: index beyond dataset");
    Dataset a, b;
    a.num_classes = b.num_classes = ds.num_classes;
    a.images.assign(ds.images.begin(), ds.images.begin() + n);
    a.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
    b.images.assign(ds.images.begin() + n, ds.images.end());
    b.labels.assign(ds.labels.begin() + n, ds.labels.end());
    return {std::move(a), std::move(b)};
}

Dataset make_blobs(std::size_t n_per_class, std::size_t classes, std::size_t dim,
                   double separation, std::uint64_t seed) {
    if (classes == 0 || dim < classes) {
        throw DomainError("make_blobs: need at least one coordinate per class");
    }
    Rng rng(derive_seed(seed, SeedStream::blobs));
    Dataset ds;
    ds.num_classes = classes;
    for (std::size_t n = 0; n < n_per_class; ++n) {
        for (std::size_t c = 0; c < classes; ++c) {
            Tensor x({dim});
            for (std::size_t i = 0; i < dim; ++i) {
                const double centre = 0.5 + (i % classes == c ? 0.5 : -0.5) * separation;
                double noise;
                do {
                    noise = standard_normal(rng);
                } while (std::fabs(noise) > 3.0);
                x[i] = std::clamp(centre + kBlobSigma * noise, 0.0, 1.0);
            }
            ds.images.push_back(std::move(x));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

}  // namespace snnr
