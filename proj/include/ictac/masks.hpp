#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

#include "ictac/error.hpp"
#include "ictac/tensor.hpp"

namespace ictac {

inline constexpr std::string_view kMaskGenerator = "mt19937_64";

namespace detail {

// Unbiased integer in [0, bound) by rejection; portable across standard
// libraries, unlike std::uniform_int_distribution.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace detail

inline std::size_t missing_count_for(std::size_t total, double mr_percent) {
    return static_cast<std::size_t>(std::llround(mr_percent / 100.0 * static_cast<double>(total)));
}

/// Exactly round(mr/100 * total) entries unobserved, positions drawn uniformly
/// without replacement (partial Fisher-Yates over mt19937_64).
inline ObservationMask gen_mask(const Shape& shape, double mr_percent, std::uint64_t seed) {
    if (!(mr_percent >= 0.0 && mr_percent <= 100.0)) {
        throw ConfigError("missing ratio must lie in [0, 100]");
    }
    ObservationMask mask(shape, 1);
    const std::size_t total = mask.size();
    const std::size_t missing = missing_count_for(total, mr_percent);
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < missing; ++i) {
        const auto j = i + static_cast<std::size_t>(detail::bounded(rng, total - i));
        std::swap(idx[i], idx[j]);
        mask[idx[i]] = 0;
    }
    return mask;
}

/// Copy of `t` with unobserved entries set to zero.
inline DenseTensor apply_mask(const DenseTensor& t, const ObservationMask& mask) {
    if (t.shape() != mask.shape()) {
        throw ShapeError("mask shape " + shape_string(mask.shape()) + " differs from tensor shape " +
                         shape_string(t.shape()));
    }
    DenseTensor out = t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask[i]) out[i] = 0.0;
    }
    return out;
}

}  // namespace ictac
