#pragma once

// Ket augmentation (KA): a bijective block addressing that turns an
// R^n x C^n x channels image into an (n+1)-order tensor with n spatial
// modes of size R*C and a trailing channel mode.
//
// Row and column indices are written in base R and base C with digits
// r_n..r_1 and c_n..c_1 (r_n most significant). Spatial mode k carries
// i_k = C * r_k + c_k, so mode 1 addresses the finest blocks and mode n
// the coarsest. The original scheme has R = C = 2 (modes of size 4); the
// modified scheme has R = 3, C = 2 (modes of size 6) for 3^n x 2^n images.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ictac/error.hpp"
#include "ictac/tensor.hpp"

namespace ictac {

enum class KaVariant { original, modified };

inline std::string_view to_string(KaVariant v) {
    return v == KaVariant::original ? "original" : "modified";
}

struct KASpec {
    std::size_t levels = 1;
    std::size_t row_radix = 2;
    std::size_t col_radix = 2;
    std::size_t channels = 3;

    [[nodiscard]] std::size_t mode_size() const noexcept { return row_radix * col_radix; }

    [[nodiscard]] Shape image_shape() const {
        return {ipow(row_radix, levels), ipow(col_radix, levels), channels};
    }

    [[nodiscard]] Shape augmented_shape() const {
        Shape s(levels, mode_size());
        s.push_back(channels);
        return s;
    }

    static std::size_t ipow(std::size_t base, std::size_t exp) {
        std::size_t r = 1;
        while (exp--) r *= base;
        return r;
    }

    friend bool operator==(const KASpec&, const KASpec&) = default;
};

inline std::size_t row_radix_for(KaVariant v) { return v == KaVariant::original ? 2 : 3; }

/// Derives the unique spec for a 3-mode image shape, or throws ShapeError
/// naming the sizes that would have worked.
inline KASpec ka_spec_for(std::span<const std::size_t> shape, KaVariant variant) {
    if (shape.size() != 3) {
        throw ShapeError("ket augmentation needs a 3-mode image, got " + shape_string(shape));
    }
    const std::size_t row_radix = row_radix_for(variant);
    const std::size_t col_radix = 2;

    std::size_t levels = 0;
    std::size_t cols = 1;
    while (cols < shape[1]) {
        cols *= col_radix;
        ++levels;
    }
    const bool ok = levels >= 1 && cols == shape[1] &&
                    KASpec::ipow(row_radix, levels) == shape[0] && shape[2] >= 1;
    if (!ok) {
        const std::string rows = variant == KaVariant::original ? "2^n" : "3^n";
        throw ShapeError(std::string(to_string(variant)) + " ket augmentation needs a " + rows +
                         " x 2^n image (n >= 1), got " + shape_string(shape));
    }
    return KASpec{levels, row_radix, col_radix, shape[2]};
}

inline KASpec ka_spec_for(const Shape& shape, KaVariant variant) {
    return ka_spec_for(std::span<const std::size_t>(shape), variant);
}

namespace detail {

// Linear offset in the augmented tensor contributed by a row / a column.
struct KaOffsets {
    std::vector<std::size_t> row;
    std::vector<std::size_t> col;
    std::size_t channel_stride = 0;
};

inline KaOffsets ka_offsets(const KASpec& spec) {
    const auto shape = spec.image_shape();
    const std::size_t s = spec.mode_size();
    KaOffsets off;
    off.row.resize(shape[0]);
    off.col.resize(shape[1]);
    for (std::size_t row = 0; row < shape[0]; ++row) {
        std::size_t rest = row, stride = 1, acc = 0;
        // least significant digit r_1 goes to mode 1 (stride 1)
        for (std::size_t k = 0; k < spec.levels; ++k) {
            acc += spec.col_radix * (rest % spec.row_radix) * stride;
            rest /= spec.row_radix;
            stride *= s;
        }
        off.row[row] = acc;
    }
    for (std::size_t col = 0; col < shape[1]; ++col) {
        std::size_t rest = col, stride = 1, acc = 0;
        for (std::size_t k = 0; k < spec.levels; ++k) {
            acc += (rest % spec.col_radix) * stride;
            rest /= spec.col_radix;
            stride *= s;
        }
        off.col[col] = acc;
    }
    off.channel_stride = KASpec::ipow(s, spec.levels);
    return off;
}

template <typename T, bool Forward>
BasicTensor<T> ka_apply(const BasicTensor<T>& src, const KASpec& spec) {
    const auto img = spec.image_shape();
    const auto off = ka_offsets(spec);
    std::vector<T> out(src.size());
    const auto in = src.data();
    std::size_t p = 0;
    for (std::size_t j = 0; j < img[2]; ++j) {
        const std::size_t cbase = j * off.channel_stride;
        for (std::size_t col = 0; col < img[1]; ++col) {
            const std::size_t base = cbase + off.col[col];
            for (std::size_t row = 0; row < img[0]; ++row, ++p) {
                if constexpr (Forward) {
                    out[base + off.row[row]] = in[p];
                } else {
                    out[p] = in[base + off.row[row]];
                }
            }
        }
    }
    return BasicTensor<T>(Forward ? spec.augmented_shape() : img, std::move(out));
}

}  // namespace detail

/// Works on data tensors and masks alike, so a mask augmented with the same
/// spec marks exactly the images of the observed pixels.
template <typename T>
BasicTensor<T> ka_augment(const BasicTensor<T>& img, const KASpec& spec) {
    if (img.shape() != spec.image_shape()) {
        throw ShapeError("image shape " + shape_string(img.shape()) + " does not match KA spec " +
                         shape_string(spec.image_shape()));
    }
    return detail::ka_apply<T, true>(img, spec);
}

template <typename T>
BasicTensor<T> ka_invert(const BasicTensor<T>& aug, const KASpec& spec) {
    if (aug.shape() != spec.augmented_shape()) {
        throw ShapeError("augmented shape " + shape_string(aug.shape()) +
                         " does not match KA spec " + shape_string(spec.augmented_shape()));
    }
    return detail::ka_apply<T, false>(aug, spec);
}

}  // namespace ictac
