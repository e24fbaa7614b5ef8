#pragma once

// Concatenated image completion:
//
//   image I1 x I2 x 3
//     -> C identical copies            I1 x I2 x 3 x C
//     -> video sequence tensor (VST)   C*I1 x I2 x 3
//     -> ket augmentation              (R*2) x ... x (R*2) x 3
//     -> TMac-TT completion
//     -> inverse KA, inverse VST, pick one copy.
//
// Masks follow the data through every step with the same index maps.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>

#include "ictac/error.hpp"
#include "ictac/ket_augmentation.hpp"
#include "ictac/tensor.hpp"
#include "ictac/tmac_tt.hpp"

namespace ictac {

/// How the copy index merges into the row mode of the VST.
///   interleave: combined row = i1 * C + c (each image row repeated C times)
///   stack:      combined row = c * I1 + i1 (copies stacked vertically)
enum class StackMode { interleave, stack };

enum class ExtractMode { first, average };

inline std::string_view to_string(StackMode m) { return m == StackMode::interleave ? "interleave" : "stack"; }
inline std::string_view to_string(ExtractMode m) { return m == ExtractMode::first ? "first" : "average"; }

struct PipelineConfig {
    std::size_t copies = 81;
    StackMode stack_mode = StackMode::interleave;
    ExtractMode extract_mode = ExtractMode::first;
    KaVariant ka_variant = KaVariant::modified;
    SolverConfig solver;
};

template <typename T>
struct BasicVst {
    BasicTensor<T> data;  // C*I1 x I2 x channels
    std::size_t copies = 1;
    std::size_t rows = 1;  // I1
    StackMode mode = StackMode::interleave;
};

using VSTTensor = BasicVst<double>;

/// I1 x I2 x ch -> I1 x I2 x ch x C, every slice (:,:,:,c) equal to img.
template <typename T>
BasicTensor<T> concatenate(const BasicTensor<T>& img, std::size_t copies) {
    if (img.order() != 3) {
        throw ShapeError("concatenate expects a 3-mode image, got " + shape_string(img.shape()));
    }
    if (copies < 1) throw ConfigError("number of copies must be at least 1");
    std::vector<T> data;
    data.reserve(img.size() * copies);
    for (std::size_t c = 0; c < copies; ++c) {
        data.insert(data.end(), img.data().begin(), img.data().end());
    }
    Shape shape = img.shape();
    shape.push_back(copies);
    return BasicTensor<T>(std::move(shape), std::move(data));
}

inline std::pair<DenseTensor, ObservationMask> concatenate(const DenseTensor& img,
                                                           const ObservationMask& mask,
                                                           std::size_t copies) {
    if (mask.shape() != img.shape()) {
        throw ShapeError("mask shape " + shape_string(mask.shape()) + " differs from image shape " +
                         shape_string(img.shape()));
    }
    return {concatenate(img, copies), concatenate(mask, copies)};
}

template <typename T>
BasicVst<T> to_vst(const BasicTensor<T>& ci, StackMode mode) {
    if (ci.order() != 4) {
        throw ShapeError("to_vst expects I1 x I2 x ch x C, got " + shape_string(ci.shape()));
    }
    const auto& s = ci.shape();
    auto moved = mode == StackMode::interleave ? permute(ci, {3, 0, 1, 2}) : permute(ci, {0, 3, 1, 2});
    BasicVst<T> vst;
    vst.copies = s[3];
    vst.rows = s[0];
    vst.mode = mode;
    vst.data = reshape(std::move(moved), Shape{s[0] * s[3], s[1], s[2]});
    return vst;
}

template <typename T>
BasicTensor<T> from_vst(const BasicVst<T>& vst) {
    const auto& s = vst.data.shape();
    if (s.size() != 3 || vst.copies < 1 || vst.rows < 1 || s[0] != vst.rows * vst.copies) {
        throw ShapeError("VST of shape " + shape_string(s) + " inconsistent with " +
                         std::to_string(vst.copies) + " copies of " + std::to_string(vst.rows) +
                         " rows");
    }
    if (vst.mode == StackMode::interleave) {
        auto t = reshape(vst.data, Shape{vst.copies, vst.rows, s[1], s[2]});
        return permute(t, {1, 2, 3, 0});
    }
    auto t = reshape(vst.data, Shape{vst.rows, vst.copies, s[1], s[2]});
    return permute(t, {0, 2, 3, 1});
}

inline DenseTensor extract_image(const DenseTensor& ci, ExtractMode mode) {
    if (ci.order() != 4) {
        throw ShapeError("extract_image expects I1 x I2 x ch x C, got " + shape_string(ci.shape()));
    }
    const auto& s = ci.shape();
    const std::size_t slice = s[0] * s[1] * s[2];
    const std::size_t copies = s[3];
    std::vector<double> out(ci.data().begin(), ci.data().begin() + static_cast<std::ptrdiff_t>(slice));
    if (mode == ExtractMode::average && copies > 1) {
        for (std::size_t c = 1; c < copies; ++c) {
            const double* src = ci.data().data() + c * slice;
            for (std::size_t i = 0; i < slice; ++i) out[i] += src[i];
        }
        for (auto& v : out) v /= static_cast<double>(copies);
    }
    return DenseTensor(Shape{s[0], s[1], s[2]}, std::move(out));
}

// ---------------------------------------------------------------------------

using CompletionFn =
    std::function<SolveResult(const DenseTensor&, const ObservationMask&, const SolverConfig&)>;

/// Optional instrumentation and solver injection for the pipelines.
struct PipelineHooks {
    CompletionFn complete;  // defaults to solve()
    std::function<void(std::string_view stage, const Shape& shape)> on_stage;
    FactorObserver on_factor_update;
};

struct PipelineResult {
    DenseTensor image;
    SolveReport report;
};

/// Shape checks for the concatenated pipeline; runs before any allocation.
inline KASpec ictac_spec(const Shape& image_shape, const PipelineConfig& cfg) {
    if (image_shape.size() != 3) {
        throw ShapeError("expected an I1 x I2 x channels image, got " + shape_string(image_shape));
    }
    if (cfg.copies < 1) throw ConfigError("number of copies must be at least 1");
    const Shape vst_shape{cfg.copies * image_shape[0], image_shape[1], image_shape[2]};
    try {
        return ka_spec_for(vst_shape, cfg.ka_variant);
    } catch (const ShapeError& e) {
        throw ShapeError("concatenated image " + shape_string(vst_shape) + " (" +
                         std::to_string(cfg.copies) + " copies of " + shape_string(image_shape) +
                         ") is unusable: " + e.what());
    }
}

namespace detail {

inline void restore_observed(DenseTensor& out, const DenseTensor& img, const ObservationMask& mask) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mask[i]) out[i] = img[i];
    }
}

inline SolveResult run_completion(const DenseTensor& t, const ObservationMask& m,
                                  const SolverConfig& cfg, const PipelineHooks& hooks) {
    if (hooks.complete) return hooks.complete(t, m, cfg);
    return solve(t, m, cfg, hooks.on_factor_update);
}

inline void stage(const PipelineHooks& hooks, std::string_view name, const Shape& shape) {
    if (hooks.on_stage) hooks.on_stage(name, shape);
}

inline void check_image_and_mask(const DenseTensor& img, const ObservationMask& mask) {
    if (img.order() != 3) {
        throw ShapeError("expected an I1 x I2 x channels image, got " + shape_string(img.shape()));
    }
    if (mask.shape() != img.shape()) {
        throw ShapeError("mask shape " + shape_string(mask.shape()) + " differs from image shape " +
                         shape_string(img.shape()));
    }
}

}  // namespace detail

inline PipelineResult run_ictac(const DenseTensor& img, const ObservationMask& mask,
                                const PipelineConfig& cfg, const PipelineHooks& hooks = {}) {
    detail::check_image_and_mask(img, mask);
    const KASpec spec = ictac_spec(img.shape(), cfg);
    detail::stage(hooks, "image", img.shape());

    DenseTensor aug;
    ObservationMask aug_mask;
    {
        auto [ci, ci_mask] = concatenate(img, mask, cfg.copies);
        detail::stage(hooks, "concatenated", ci.shape());
        auto vst = to_vst(ci, cfg.stack_mode);
        auto vst_mask = to_vst(ci_mask, cfg.stack_mode);
        detail::stage(hooks, "vst", vst.data.shape());
        aug = ka_augment(vst.data, spec);
        aug_mask = ka_augment(vst_mask.data, spec);
        detail::stage(hooks, "augmented", aug.shape());
    }

    auto solved = detail::run_completion(aug, aug_mask, cfg.solver, hooks);
    aug = DenseTensor();
    aug_mask = ObservationMask();

    VSTTensor vst;
    vst.data = ka_invert(solved.x, spec);
    solved.x = DenseTensor();
    vst.copies = cfg.copies;
    vst.rows = img.extent(0);
    vst.mode = cfg.stack_mode;
    detail::stage(hooks, "recovered_vst", vst.data.shape());
    const auto ci = from_vst(vst);
    detail::stage(hooks, "recovered_concatenated", ci.shape());

    PipelineResult out{extract_image(ci, cfg.extract_mode), std::move(solved.report)};
    detail::restore_observed(out.image, img, mask);
    detail::stage(hooks, "recovered_image", out.image.shape());
    return out;
}

/// Single-image baseline: KA straight on the image, no concatenation.
inline PipelineResult run_ka_tmactt(const DenseTensor& img, const ObservationMask& mask,
                                    const SolverConfig& cfg,
                                    KaVariant variant = KaVariant::original,
                                    const PipelineHooks& hooks = {}) {
    detail::check_image_and_mask(img, mask);
    const KASpec spec = ka_spec_for(img.shape(), variant);
    const auto aug = ka_augment(img, spec);
    const auto aug_mask = ka_augment(mask, spec);
    detail::stage(hooks, "augmented", aug.shape());
    auto solved = detail::run_completion(aug, aug_mask, cfg, hooks);
    PipelineResult out{ka_invert(solved.x, spec), std::move(solved.report)};
    detail::restore_observed(out.image, img, mask);
    return out;
}

/// Plain TMac-TT on the image tensor as given.
inline PipelineResult run_tmactt(const DenseTensor& img, const ObservationMask& mask,
                                 const SolverConfig& cfg, const PipelineHooks& hooks = {}) {
    detail::check_image_and_mask(img, mask);
    auto solved = detail::run_completion(img, mask, cfg, hooks);
    return {std::move(solved.x), std::move(solved.report)};
}

}  // namespace ictac
