// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
// ICTAC_ACCEPTANCE_ONLY=3,4 restricts the run to the listed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ictac/image_io.hpp"
#include "ictac/ket_augmentation.hpp"
#include "ictac/masks.hpp"
#include "ictac/metrics.hpp"
#include "ictac/pipeline.hpp"
#include "ictac/tensor.hpp"
#include "ictac/tmac_tt.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace ictac;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const std::string kData = ICTAC_DATA_DIR;
constexpr std::uint64_t kSeed = 7;

// ---------------------------------------------------------------------------
// 1. mode-n unfolding against the column formula, every shape with <= 4 modes
//    and sizes <= 4.

Outcome mode_n_oracle() {
    std::size_t shapes = 0, checked = 0, mismatches = 0;
    for (std::size_t order = 1; order <= 4; ++order) {
        Shape shape(order, 1);
        while (true) {
            ++shapes;
            const auto t = testing::iota_tensor(shape);
            for (std::size_t n = 0; n < order; ++n) {
                const auto view = unfold_mode_n(t, n);
                for (std::size_t lin = 0; lin < t.size(); ++lin) {
                    const auto idx = t.multi_index(lin);
                    std::vector<std::size_t> idx1(idx.begin(), idx.end());
                    for (auto& i : idx1) ++i;
                    const auto j = testing::mode_n_column_1based(shape, idx1, n + 1);
                    ++checked;
                    if (view(idx[n], j - 1) != t[lin]) ++mismatches;
                }
            }
            std::size_t k = 0;
            while (k < order && shape[k] == 4) shape[k++] = 1;
            if (k == order) break;
            ++shape[k];
        }
    }
    return {mismatches == 0, std::to_string(shapes) + " shapes, " + std::to_string(checked) +
                                 " entries, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------
// 2. ket augmentation is invertible for every admissible size.

Outcome ka_bijective() {
    std::size_t cases = 0, failures = 0;
    auto check = [&](const Shape& shape, KaVariant v, std::uint64_t seed) {
        const auto img = testing::random_tensor(shape, seed);
        const auto spec = ka_spec_for(shape, v);
        ++cases;
        if (ka_invert(ka_augment(img, spec), spec) != img) ++failures;
    };
    for (std::size_t n = 1; n <= 8; ++n) {
        check({KASpec::ipow(2, n), KASpec::ipow(2, n), 3}, KaVariant::original, n);
    }
    for (std::size_t n = 1; n <= 9; ++n) {
        check({KASpec::ipow(3, n), KASpec::ipow(2, n), 3}, KaVariant::modified, 100 + n);
    }
    return {failures == 0, std::to_string(cases) + " sizes up to 256x256x3 and 19683x512x3, " +
                               std::to_string(failures) + " failures"};
}

// ---------------------------------------------------------------------------
// 3. exact recovery of random TT(2,2,2) tensors from half of the entries.

Outcome exact_recovery() {
    std::size_t passed = 0;
    double worst = 0.0;
    std::vector<double> all;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto t = testing::tt_tensor({8, 8, 8, 8}, {2, 2, 2}, 1000 + s);
        const auto mask = gen_mask(t.shape(), 50.0, 2000 + s);
        SolverConfig cfg;
        cfg.ranks = TTRankVector({2, 2, 2});
        cfg.max_iters = 500;
        cfg.tol = 1e-12;
        const auto res = solve(apply_mask(t, mask), mask, cfg);
        const double e = rse(res.x, t);
        all.push_back(e);
        worst = std::max(worst, e);
        if (e < 1e-3) ++passed;
    }
    std::sort(all.begin(), all.end());
    return {passed >= 19, std::to_string(passed) + "/20 seeds below 1e-3, median rse " +
                              fmt("%.1e", all[10]) + ", worst " + fmt("%.1e", worst)};
}

// ---------------------------------------------------------------------------
// 4. every factor update decreases its own unfolding residual.

Outcome monotone_updates() {
    std::size_t events = 0, violations = 0;
    double worst = -1e300;
    auto watch = [&](const DenseTensor& t, const ObservationMask& m, SolverConfig cfg) {
        solve(t, m, cfg, [&](const FactorUpdateEvent& ev) {
            ++events;
            worst = std::max(worst, ev.objective_after - ev.objective_before);
            if (ev.objective_after > ev.objective_before + 1e-10) ++violations;
        });
    };
    for (std::uint64_t s = 0; s < 4; ++s) {
        SolverConfig cfg;
        cfg.ranks = TTRankVector({3, 5, 2});
        cfg.max_iters = 60;
        cfg.init = s % 2 ? InitMethod::gaussian : InitMethod::svd;
        cfg.seed = s;
        const auto t = testing::random_tensor({6, 5, 4, 3}, s);
        watch(t, gen_mask(t.shape(), 70.0, s), cfg);
        const auto low = testing::tt_tensor({8, 8, 8, 8}, {2, 2, 2}, 50 + s);
        cfg.ranks = TTRankVector({2, 2, 2});
        watch(low, gen_mask(low.shape(), 50.0, s), cfg);
    }
    {
        const auto img = load_image(kData + "/lena_256x256.png");
        const auto spec = ka_spec_for(img.shape(), KaVariant::original);
        const auto mask = gen_mask(img.shape(), 80.0, kSeed);
        SolverConfig cfg;
        cfg.ranks = TTRankVector({4, 16, 24, 24, 24, 24, 12, 3});
        cfg.max_iters = 100;
        watch(ka_augment(apply_mask(img, mask), spec), ka_augment(mask, spec), cfg);
    }
    return {violations == 0 && events > 0,
            std::to_string(events) + " updates, " + std::to_string(violations) +
                " increases beyond 1e-10, largest change " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 5-7. image completion on the Lena fixtures.

struct Score {
    double rse = 0.0;
    double ssim = 0.0;
    std::size_t iterations = 0;
    double seconds = 0.0;
    std::string label;
};

Score score(const DenseTensor& recovered, const DenseTensor& truth) {
    DenseTensor q = recovered;
    for (auto& v : q.data()) v = quantize(v);
    return {rse(q, truth), ssim(q, truth)};
}

std::string describe(const Score& s) {
    return s.label + " rse " + fmt("%.4f", s.rse) + " ssim " + fmt("%.4f", s.ssim) + " (" +
           std::to_string(s.iterations) + " it, " + fmt("%.0f", s.seconds) + " s)";
}

// Concatenated pipeline with one fixed configuration for every missing ratio.
Score ictac_run(double mr) {
    static std::map<double, Score> cache;
    if (auto it = cache.find(mr); it != cache.end()) return it->second;
    const auto img = load_image(kData + "/lena_243x512.png");
    const auto mask = gen_mask(img.shape(), mr, kSeed);
    PipelineConfig cfg;
    cfg.copies = 81;
    cfg.ka_variant = KaVariant::modified;
    const Shape aug = ictac_spec(img.shape(), cfg).augmented_shape();
    cfg.solver.ranks = TTRankVector({2, 4, 8, 16, 16, 16, 16, 16, 3});
    cfg.solver.weights = balanced_weights(aug);
    cfg.solver.max_iters = 500;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_ictac(apply_mask(img, mask), mask, cfg);
    Score s = score(res.image, img);
    s.iterations = res.report.iterations_run;
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.label = "ictac 243x512 C=81";
    cache[mr] = s;
    return s;
}

// Single-image baseline, tuned generously: the best result over a grid of
// rank caps and both weightings.
Score ka_run(double mr) {
    static std::map<double, Score> cache;
    if (auto it = cache.find(mr); it != cache.end()) return it->second;
    const auto img = load_image(kData + "/lena_256x256.png");
    const auto mask = gen_mask(img.shape(), mr, kSeed);
    const auto spec = ka_spec_for(img.shape(), KaVariant::original);
    const auto shape = spec.augmented_shape();
    const auto corrupted = apply_mask(img, mask);
    Score best;
    best.rse = 1e300;
    for (std::size_t cap : {4, 8, 12, 16, 24}) {
        for (bool balanced : {false, true}) {
            SolverConfig cfg;
            std::vector<std::size_t> ranks;
            const auto total = element_count(shape);
            std::size_t rows = 1;
            for (std::size_t k = 1; k < shape.size(); ++k) {
                rows *= shape[k - 1];
                ranks.push_back(std::min({cap, rows, total / rows}));
            }
            cfg.ranks = TTRankVector(ranks);
            if (balanced) cfg.weights = balanced_weights(shape);
            cfg.max_iters = 500;
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = run_ka_tmactt(corrupted, mask, cfg, KaVariant::original);
            Score s = score(res.image, img);
            s.iterations = res.report.iterations_run;
            s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            s.label = "ka-tmac-tt 256x256 cap " + std::to_string(cap) + (balanced ? " balanced" : " uniform");
            if (s.rse < best.rse) best = s;
        }
    }
    cache[mr] = best;
    return best;
}

Outcome headline() {
    const auto s = ictac_run(80.0);
    return {s.rse <= 0.07 && s.ssim >= 0.95, describe(s) + "; needs rse <= 0.07 and ssim >= 0.95"};
}

Outcome baseline_ordering() {
    const auto ka = ka_run(80.0);
    const auto ic = ictac_run(80.0);
    const bool in_band = ka.rse >= 0.06 && ka.rse <= 0.12;
    return {in_band && ka.rse > ic.rse,
            describe(ka) + " vs " + describe(ic) + "; baseline band [0.06, 0.12] " + (in_band ? "met" : "missed")};
}

Outcome ordering_at_90() {
    const auto ka = ka_run(90.0);
    const auto ic = ictac_run(90.0);
    return {ic.rse < ka.rse, describe(ic) + " vs " + describe(ka)};
}

// ---------------------------------------------------------------------------
// 8. metric identities.

Outcome metrics_sanity() {
    std::vector<std::string> bad;
    const auto img = load_image(kData + "/lena_256x256.png");
    if (rse(img, img) != 0.0) bad.push_back("rse(a,a)");
    auto twice = img;
    for (auto& v : twice.data()) v *= 2.0;
    if (rse(twice, img) != 1.0) bad.push_back("rse(2a,a)");
    if (rse(DenseTensor(img.shape(), 0.0), img) != 1.0) bad.push_back("rse(0,a)");
    if (ssim(img, img) != 1.0) bad.push_back("ssim(a,a)");
    const auto wide = load_image(kData + "/lena_243x512.png");
    if (ssim(wide, wide) != 1.0) bad.push_back("ssim(b,b)");

    std::size_t ratios = 0;
    for (const Shape& shape : {img.shape(), wide.shape(), Shape{6, 6, 6, 6, 6, 6, 3}}) {
        for (double mr : {0.0, 12.5, 33.3, 50.0, 80.0, 90.0, 99.9, 100.0}) {
            const auto m = gen_mask(shape, mr, kSeed);
            const double total = static_cast<double>(m.size());
            const double missing = static_cast<double>(m.size() - count_observed(m));
            ++ratios;
            if (std::abs(missing - std::round(mr / 100.0 * total)) > 1.0) {
                bad.push_back("missing count at mr " + fmt("%g", mr));
            }
            if (std::abs(missing_ratio(m) - mr) > 100.0 / total) bad.push_back("missing_ratio at mr " + fmt("%g", mr));
        }
    }
    std::string detail = "5 identities, " + std::to_string(ratios) + " mask ratios";
    for (const auto& b : bad) detail += "; failed " + b;
    return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------
// 9. repeated single-threaded CLI runs write identical files.

int shell(const std::string& cmd) {
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome cli_determinism() {
    const auto dir = fs::temp_directory_path() / "ictac_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // 27x16 crop of the wide fixture: 3 copies give an 81x16 sequence.
    const auto wide = load_image(kData + "/lena_243x512.png");
    DenseTensor crop({27, 16, 3});
    for (std::size_t r = 0; r < 27; ++r)
        for (std::size_t c = 0; c < 16; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch) crop(r, c, ch) = wide(100 + r, 250 + c, ch);
    save_image(crop, (dir / "crop.png").string());

    const std::vector<std::pair<std::string, std::string>> runs{
        {"ka", kData + "/lena_256x256.png --algo ka-tmac-tt --mr 80 --ranks 12 --max-iters 40"},
        {"ictac", (dir / "crop.png").string() + " --algo ictac --copies 3 --mr 60 --ranks 2,3,3,3 --max-iters 40"},
        {"plain", kData + "/lena_256x256.png --algo tmac-tt --mr 50 --ranks 8,3 --max-iters 40 --init gaussian"},
    };
    std::size_t compared = 0;
    std::vector<std::string> bad;
    for (const auto& [name, args] : runs) {
        for (const char* rep : {"a", "b"}) {
            const auto out = dir / (name + "_" + rep);
            const std::string cmd = std::string("\"") + ICTAC_CLI_PATH + "\" complete " + args +
                                    " --seed 7 --threads 1 --out-dir \"" + out.string() + "\" > /dev/null";
            if (shell(cmd) != 0) bad.push_back(name + " run failed");
        }
        for (const char* f : {"recovered.png", "corrupted.png", "mask.png", "metrics.json"}) {
            const auto a = slurp(dir / (name + "_a") / f);
            const auto b = slurp(dir / (name + "_b") / f);
            ++compared;
            if (a.empty() || a != b) bad.push_back(name + "/" + f);
        }
    }
    fs::remove_all(dir);
    std::string detail = std::to_string(compared) + " file pairs compared";
    for (const auto& b : bad) detail += "; differs: " + b;
    return {bad.empty(), detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"mode-n unfolding matches index formula", mode_n_oracle},
        {"ket augmentation round trip", ka_bijective},
        {"exact recovery of TT(2,2,2) tensors", exact_recovery},
        {"factor updates never increase residual", monotone_updates},
        {"lena mr=80 ictac rse <= 0.07, ssim >= 0.95", headline},
        {"lena mr=80 baseline in band and worse than ictac", baseline_ordering},
        {"lena mr=90 ictac better than baseline", ordering_at_90},
        {"metric identities", metrics_sanity},
        {"cli output is deterministic", cli_determinism},
    };

    std::set<std::size_t> only;
    if (const char* env = std::getenv("ICTAC_ACCEPTANCE_ONLY")) {
        std::stringstream ss(env);
        std::string item;
        while (std::getline(ss, item, ',')) only.insert(std::stoul(item));
    }

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const std::size_t id = i + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("criterion %zu %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
