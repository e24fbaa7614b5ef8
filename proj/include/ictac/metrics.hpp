#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ictac/error.hpp"
#include "ictac/tensor.hpp"

namespace ictac {

struct MetricsReport {
    std::string algorithm;
    Shape shape;
    double rse = 0.0;
    double ssim = 0.0;
    double mr_percent = 0.0;
};

/// Percentage of entries that are not observed.
inline double missing_ratio(const ObservationMask& mask) {
    const auto missing = mask.size() - count_observed(mask);
    return 100.0 * static_cast<double>(missing) / static_cast<double>(mask.size());
}

inline double observed_ratio(const ObservationMask& mask) { return 100.0 - missing_ratio(mask); }

/// ||recovered - truth||_F / ||truth||_F
inline double rse(const DenseTensor& recovered, const DenseTensor& truth) {
    if (recovered.shape() != truth.shape()) {
        throw ShapeError("rse: shapes " + shape_string(recovered.shape()) + " and " +
                         shape_string(truth.shape()) + " differ");
    }
    double num = 0.0, den = 0.0;
    const auto a = recovered.data();
    const auto b = truth.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        num += d * d;
        den += b[i] * b[i];
    }
    if (den == 0.0) {
        throw ConfigError("rse: reference tensor has zero norm");
    }
    return std::sqrt(num / den);
}

struct SsimParams {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

namespace detail {

inline std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
    std::vector<double> w(size);
    const double c = (static_cast<double>(size) - 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        const double x = static_cast<double>(i) - c;
        w[i] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Separable 'valid' filtering of a column-major rows x cols plane.
inline std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t rows,
                                        std::size_t cols, const std::vector<double>& w) {
    const std::size_t n = w.size();
    const std::size_t out_r = rows - n + 1;
    const std::size_t out_c = cols - n + 1;
    std::vector<double> tmp(out_r * cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < out_r; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += w[i] * plane[(r + i) + rows * c];
            tmp[r + out_r * c] = s;
        }
    }
    std::vector<double> out(out_r * out_c, 0.0);
    for (std::size_t c = 0; c < out_c; ++c) {
        for (std::size_t r = 0; r < out_r; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += w[i] * tmp[r + out_r * (c + i)];
            out[r + out_r * c] = s;
        }
    }
    return out;
}

}  // namespace detail

/// Mean structural similarity of two rows x cols x channels images: Gaussian
/// window statistics over every fully contained window position, SSIM map
/// averaged per channel, then averaged over channels.
inline double ssim(const DenseTensor& a, const DenseTensor& b, const SsimParams& p = {}) {
    if (a.shape() != b.shape()) {
        throw ShapeError("ssim: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
    }
    if (a.order() < 2 || a.order() > 3) {
        throw ShapeError("ssim expects a rows x cols [x channels] image");
    }
    const std::size_t rows = a.extent(0);
    const std::size_t cols = a.extent(1);
    const std::size_t channels = a.order() == 3 ? a.extent(2) : 1;
    if (rows < p.window || cols < p.window) {
        throw ShapeError("ssim: image " + shape_string(a.shape()) + " smaller than the " +
                         std::to_string(p.window) + "x" + std::to_string(p.window) + " window");
    }
    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    const auto w = detail::gaussian_kernel(p.window, p.sigma);
    const std::size_t plane = rows * cols;

    double total = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
        std::vector<double> x(a.data().begin() + ch * plane, a.data().begin() + (ch + 1) * plane);
        std::vector<double> y(b.data().begin() + ch * plane, b.data().begin() + (ch + 1) * plane);
        std::vector<double> xx(plane), yy(plane), xy(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mu_x = detail::filter_valid(x, rows, cols, w);
        const auto mu_y = detail::filter_valid(y, rows, cols, w);
        const auto e_xx = detail::filter_valid(xx, rows, cols, w);
        const auto e_yy = detail::filter_valid(yy, rows, cols, w);
        const auto e_xy = detail::filter_valid(xy, rows, cols, w);

        double sum = 0.0;
        for (std::size_t i = 0; i < mu_x.size(); ++i) {
            const double mx = mu_x[i], my = mu_y[i];
            const double sx = e_xx[i] - mx * mx;
            const double sy = e_yy[i] - my * my;
            const double sxy = e_xy[i] - mx * my;
            const double num = (2.0 * mx * my + c1) * (2.0 * sxy + c2);
            const double den = (mx * mx + my * my + c1) * (sx + sy + c2);
            sum += num / den;
        }
        total += sum / static_cast<double>(mu_x.size());
    }
    return total / static_cast<double>(channels);
}

}  // namespace ictac
