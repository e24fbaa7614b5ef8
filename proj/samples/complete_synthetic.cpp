// Completes a synthetic low TT-rank tensor from half of its entries and a
// small synthetic image through the concatenated pipeline.

#include <cmath>
#include <cstdio>
#include <random>

#include "ictac/masks.hpp"
#include "ictac/metrics.hpp"
#include "ictac/pipeline.hpp"
#include "ictac/tmac_tt.hpp"

using namespace ictac;

// Sum of two separable terms: TT rank at most 2 across every split.
static DenseTensor low_rank_tensor(const Shape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<std::vector<double>> f(2 * shape.size());
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t k = 0; k < shape.size(); ++k)
            for (std::size_t i = 0; i < shape[k]; ++i) f[t * shape.size() + k].push_back(normal(rng));

    DenseTensor x(shape);
    for (std::size_t lin = 0; lin < x.size(); ++lin) {
        const auto idx = x.multi_index(lin);
        double a = 1.0, b = 1.0;
        for (std::size_t k = 0; k < shape.size(); ++k) {
            a *= f[k][idx[k]];
            b *= f[shape.size() + k][idx[k]];
        }
        x[lin] = a + b;
    }
    return x;
}

int main() {
    const Shape shape{8, 8, 8, 8};
    const auto truth = low_rank_tensor(shape, 1);
    const auto mask = gen_mask(shape, 50.0, 2);

    SolverConfig cfg;
    cfg.ranks = TTRankVector({2, 2, 2});
    cfg.tol = 1e-10;
    const auto res = solve(apply_mask(truth, mask), mask, cfg);
    std::printf("tensor %s, %.0f%% missing: rse %.2e after %zu iterations\n",
                shape_string(shape).c_str(), missing_ratio(mask), rse(res.x, truth),
                res.report.iterations_run);

    // 27 x 16 x 3 image, 3 copies -> 81 x 16 x 3 -> 6^4 x 3 after augmentation
    DenseTensor img({27, 16, 3});
    for (std::size_t r = 0; r < 27; ++r)
        for (std::size_t c = 0; c < 16; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch)
                img(r, c, ch) = 128 + 60 * std::sin(0.2 * double(r)) * std::cos(0.15 * double(c)) +
                                20 * double(ch);
    const auto img_mask = gen_mask(img.shape(), 70.0, 3);

    PipelineConfig pc;
    pc.copies = 3;
    pc.solver.ranks = TTRankVector({2, 3, 3, 3});
    pc.solver.max_iters = 300;
    const auto out = run_ictac(apply_mask(img, img_mask), img_mask, pc);
    std::printf("image %s, %.0f%% missing: rse %.3f ssim %.3f\n", shape_string(img.shape()).c_str(),
                missing_ratio(img_mask), rse(out.image, img), ssim(out.image, img));
    return 0;
}
