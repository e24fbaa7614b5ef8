#pragma once

// Dense N-order tensors stored first-index-fastest, together with the two
// matricization schemes used by the completion code:
//
//   mode-n unfolding       X_(n) : I_n x prod_{k != n} I_k
//   prefix-k unfolding     X_[k] : (I_1 ... I_k) x (I_{k+1} ... I_N)
//
// Because storage is first-index-fastest, X_[k] is the tensor's own buffer
// read as a column-major matrix. Everything that needs a prefix unfolding
// (the solver in particular) relies on that and never copies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ictac/error.hpp"

namespace ictac {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>{});
}

inline std::string shape_string(std::span<const std::size_t> shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ')';
    return os.str();
}

inline void validate_shape(std::span<const std::size_t> shape) {
    if (shape.empty()) {
        throw ShapeError("tensor order must be at least 1");
    }
    for (auto extent : shape) {
        if (extent == 0) {
            throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
        }
    }
}

/// N-dimensional array with an explicit shape. Element (i_1, ..., i_N)
/// (zero-based) lives at linear position i_1 + I_1 * (i_2 + I_2 * (i_3 + ...)).
///
/// Floating-point tensors reject NaN/Inf at construction.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() : shape_{1}, data_(1, T{}) {}

    explicit BasicTensor(Shape shape, T fill = T{}) : shape_(std::move(shape)) {
        validate_shape(shape_);
        data_.assign(element_count(shape_), fill);
        check_finite();
    }

    BasicTensor(Shape shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape(shape_);
        if (data_.size() != element_count(shape_)) {
            throw ShapeError("data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
        }
        check_finite();
    }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t order() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t extent(std::size_t mode) const { return shape_.at(mode); }

    [[nodiscard]] std::span<T> data() noexcept { return data_; }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<T>& values() const noexcept { return data_; }
    [[nodiscard]] std::vector<T> release() && { return std::move(data_); }

    T& operator[](std::size_t linear) { return data_[linear]; }
    const T& operator[](std::size_t linear) const { return data_[linear]; }

    template <typename... Idx>
        requires(std::is_integral_v<Idx> && ...)
    T& operator()(Idx... idx) {
        const std::size_t index[] = {static_cast<std::size_t>(idx)...};
        return data_[linear_index(index)];
    }

    template <typename... Idx>
        requires(std::is_integral_v<Idx> && ...)
    const T& operator()(Idx... idx) const {
        const std::size_t index[] = {static_cast<std::size_t>(idx)...};
        return data_[linear_index(index)];
    }

    T& at(std::span<const std::size_t> index) { return data_[linear_index(index)]; }
    const T& at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }

    [[nodiscard]] std::size_t linear_index(std::span<const std::size_t> index) const {
        if (index.size() != shape_.size()) {
            throw ShapeError("index has " + std::to_string(index.size()) +
                             " components, tensor has order " + std::to_string(order()));
        }
        std::size_t linear = 0;
        for (std::size_t k = shape_.size(); k-- > 0;) {
            if (index[k] >= shape_[k]) {
                throw ShapeError("index out of range at mode " + std::to_string(k));
            }
            linear = linear * shape_[k] + index[k];
        }
        return linear;
    }

    [[nodiscard]] Shape multi_index(std::size_t linear) const {
        Shape index(shape_.size());
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            index[k] = linear % shape_[k];
            linear /= shape_[k];
        }
        return index;
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    void check_finite() const {
        if constexpr (std::is_floating_point_v<T>) {
            for (const T v : data_) {
                if (!std::isfinite(v)) {
                    throw NumericalError("tensor contains a non-finite value");
                }
            }
        }
    }

    Shape shape_;
    std::vector<T> data_;
};

using DenseTensor = BasicTensor<double>;

/// Known-entry set: nonzero marks an observed entry.
using ObservationMask = BasicTensor<std::uint8_t>;

inline std::size_t count_observed(const ObservationMask& mask) {
    return static_cast<std::size_t>(
        std::count_if(mask.data().begin(), mask.data().end(), [](auto f) { return f != 0; }));
}

template <typename T>
double frobenius_norm(const BasicTensor<T>& t) {
    double sum = 0.0;
    for (const T v : t.data()) {
        sum += static_cast<double>(v) * static_cast<double>(v);
    }
    return std::sqrt(sum);
}

/// Column-major matrix over the tensor buffer: rows are modes [0, k), columns
/// modes [k, N). This is X_[k] without a copy.
inline Eigen::Map<const Eigen::MatrixXd> prefix_matrix(const DenseTensor& t, std::size_t k) {
    const auto shape = std::span(t.shape());
    const auto rows = element_count(shape.first(k));
    return {t.data().data(), static_cast<Eigen::Index>(rows),
            static_cast<Eigen::Index>(t.size() / rows)};
}

// ---------------------------------------------------------------------------
// reshape / permute

template <typename T>
BasicTensor<T> reshape(BasicTensor<T> t, Shape new_shape) {
    validate_shape(new_shape);
    if (element_count(new_shape) != t.size()) {
        throw ShapeError("cannot reshape " + shape_string(t.shape()) + " to " +
                         shape_string(new_shape));
    }
    return BasicTensor<T>(std::move(new_shape), std::move(t).release());
}

inline void validate_permutation(std::span<const std::size_t> order, std::size_t n) {
    if (order.size() != n) {
        throw ShapeError("permutation length " + std::to_string(order.size()) +
                         " does not match tensor order " + std::to_string(n));
    }
    std::vector<bool> seen(n, false);
    for (auto m : order) {
        if (m >= n || seen[m]) {
            throw ShapeError("not a permutation of the tensor modes");
        }
        seen[m] = true;
    }
}

inline Shape inverse_permutation(std::span<const std::size_t> order) {
    Shape inv(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        inv[order[i]] = i;
    }
    return inv;
}

/// Output mode i is input mode order[i] (zero-based), so
/// out(j_0, ..., j_{N-1}) == t(i) with i[order[m]] = j_m.
template <typename T>
BasicTensor<T> permute(const BasicTensor<T>& t, std::span<const std::size_t> order) {
    const std::size_t n = t.order();
    validate_permutation(order, n);

    Shape out_shape(n);
    Shape in_stride(n);
    std::size_t s = 1;
    for (std::size_t k = 0; k < n; ++k) {
        in_stride[k] = s;
        s *= t.extent(k);
    }
    Shape step(n);
    for (std::size_t m = 0; m < n; ++m) {
        out_shape[m] = t.extent(order[m]);
        step[m] = in_stride[order[m]];
    }

    std::vector<T> out(t.size());
    const auto src = t.data();
    // Odometer over the output index; the innermost extent runs as a strided copy.
    Shape counter(n, 0);
    std::size_t in = 0;
    const std::size_t inner = out_shape[0];
    const std::size_t inner_step = step[0];
    for (std::size_t o = 0; o < out.size(); o += inner) {
        for (std::size_t j = 0; j < inner; ++j) {
            out[o + j] = src[in + j * inner_step];
        }
        for (std::size_t m = 1; m < n; ++m) {
            if (++counter[m] < out_shape[m]) {
                in += step[m];
                break;
            }
            in -= step[m] * (out_shape[m] - 1);
            counter[m] = 0;
        }
    }
    return BasicTensor<T>(std::move(out_shape), std::move(out));
}

template <typename T>
BasicTensor<T> permute(const BasicTensor<T>& t, std::initializer_list<std::size_t> order) {
    return permute(t, std::span<const std::size_t>(order.begin(), order.size()));
}

// ---------------------------------------------------------------------------
// matricization

/// Mode-n split: rows indexed by a single (zero-based) mode.
struct ModeSplit {
    std::size_t mode;
    friend bool operator==(const ModeSplit&, const ModeSplit&) = default;
};

/// Prefix split: rows indexed jointly by the first `length` modes.
struct PrefixSplit {
    std::size_t length;
    friend bool operator==(const PrefixSplit&, const PrefixSplit&) = default;
};

using Split = std::variant<ModeSplit, PrefixSplit>;

/// A matricized tensor. `data` is column-major, rows x cols, and remembers
/// the shape and split it came from so that `fold` can invert it.
struct MatricizedView {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    Shape origin_shape;
    Split split = PrefixSplit{1};

    double operator()(std::size_t r, std::size_t c) const { return data[r + rows * c]; }

    [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> matrix() const {
        return {data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
    }
};

namespace detail {

inline Shape mode_front_order(std::size_t mode, std::size_t n) {
    Shape order{mode};
    for (std::size_t k = 0; k < n; ++k) {
        if (k != mode) order.push_back(k);
    }
    return order;
}

}  // namespace detail

/// X_(n) with zero-based `mode`. Columns enumerate the remaining modes
/// first-index-fastest, which is the column index j of the classical
/// mode-n unfolding.
inline MatricizedView unfold_mode_n(const DenseTensor& t, std::size_t mode) {
    if (mode >= t.order()) {
        throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(t.order()));
    }
    const auto order = detail::mode_front_order(mode, t.order());
    auto moved = permute(t, order);
    MatricizedView view;
    view.rows = t.extent(mode);
    view.cols = t.size() / view.rows;
    view.data = std::move(moved).release();
    view.origin_shape = t.shape();
    view.split = ModeSplit{mode};
    return view;
}

/// X_[k] for 1 <= k <= N-1.
inline MatricizedView unfold_prefix_k(const DenseTensor& t, std::size_t k) {
    if (k < 1 || k >= t.order()) {
        throw ShapeError("prefix length " + std::to_string(k) + " out of range for order " +
                         std::to_string(t.order()));
    }
    MatricizedView view;
    view.rows = element_count(std::span(t.shape()).first(k));
    view.cols = t.size() / view.rows;
    view.data = t.values();
    view.origin_shape = t.shape();
    view.split = PrefixSplit{k};
    return view;
}

inline DenseTensor fold(const MatricizedView& view) {
    validate_shape(view.origin_shape);
    const auto total = element_count(view.origin_shape);
    if (view.data.size() != total || view.rows * view.cols != total) {
        throw ShapeError("matricized data of " + std::to_string(view.data.size()) +
                         " entries does not fit shape " + shape_string(view.origin_shape));
    }
    const auto n = view.origin_shape.size();
    if (const auto* ms = std::get_if<ModeSplit>(&view.split)) {
        if (ms->mode >= n || view.rows != view.origin_shape[ms->mode]) {
            throw ShapeError("mode split inconsistent with origin shape");
        }
        const auto order = detail::mode_front_order(ms->mode, n);
        Shape moved_shape(n);
        for (std::size_t i = 0; i < n; ++i) moved_shape[i] = view.origin_shape[order[i]];
        DenseTensor moved(std::move(moved_shape), view.data);
        return permute(moved, inverse_permutation(order));
    }
    const auto k = std::get<PrefixSplit>(view.split).length;
    if (k < 1 || k >= n || view.rows != element_count(std::span(view.origin_shape).first(k))) {
        throw ShapeError("prefix split inconsistent with origin shape");
    }
    return DenseTensor(view.origin_shape, view.data);
}

// ---------------------------------------------------------------------------
// TT rank

/// (r_1, ..., r_{N-1}); r_k is the rank of the prefix-k unfolding.
class TTRankVector {
public:
    TTRankVector() = default;
    explicit TTRankVector(std::vector<std::size_t> ranks) : ranks_(std::move(ranks)) {}

    [[nodiscard]] const std::vector<std::size_t>& ranks() const noexcept { return ranks_; }
    [[nodiscard]] std::size_t size() const noexcept { return ranks_.size(); }
    std::size_t operator[](std::size_t i) const { return ranks_[i]; }

    /// Throws ConfigError unless the vector has order-1 entries and each
    /// 1 <= r_k <= min(rows, cols) of the prefix-k unfolding.
    void validate_for(std::span<const std::size_t> shape) const {
        if (ranks_.size() + 1 != shape.size()) {
            throw ConfigError("rank vector needs " + std::to_string(shape.size() - 1) +
                              " entries, got " + std::to_string(ranks_.size()));
        }
        const auto total = element_count(shape);
        for (std::size_t k = 1; k < shape.size(); ++k) {
            const auto rows = element_count(shape.first(k));
            const auto cap = std::min(rows, total / rows);
            if (ranks_[k - 1] < 1 || ranks_[k - 1] > cap) {
                throw ConfigError("rank r_" + std::to_string(k) + " = " +
                                  std::to_string(ranks_[k - 1]) + " outside [1, " +
                                  std::to_string(cap) + "] for unfolding " +
                                  std::to_string(rows) + "x" + std::to_string(total / rows));
            }
        }
    }

    friend bool operator==(const TTRankVector&, const TTRankVector&) = default;

private:
    std::vector<std::size_t> ranks_;
};

inline constexpr double kDefaultRankTolerance = 1e-10;

/// Numerical TT rank: r_k counts singular values of X_[k] above
/// tolerance * sigma_max. A zero unfolding has rank 0.
inline TTRankVector tt_rank_of(const DenseTensor& t, double tolerance = kDefaultRankTolerance) {
    if (tolerance < 0) {
        throw ConfigError("rank tolerance must be non-negative");
    }
    std::vector<std::size_t> ranks;
    for (std::size_t k = 1; k < t.order(); ++k) {
        const Eigen::MatrixXd m = prefix_matrix(t, k);
        const Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
        const auto& sv = svd.singularValues();
        const double cutoff = sv.size() ? tolerance * sv(0) : 0.0;
        ranks.push_back(static_cast<std::size_t>((sv.array() > cutoff).count()));
    }
    return TTRankVector(std::move(ranks));
}

}  // namespace ictac
