// ictac: mask generation, image completion and evaluation from the shell.
//
//   ictac mask     IMAGE --mr 80 --seed 7 [-o mask.png]
//   ictac complete IMAGE --algo ictac --mr 80 --seed 7 [--out-dir DIR]
//   ictac metrics  RECOVERED REFERENCE [--mask mask.png]
//   ictac --config run.toml complete
//
// `complete` treats IMAGE as ground truth, removes entries according to the
// mask, completes, and writes recovered.png, corrupted.png, mask.png and
// metrics.json into --out-dir. Validation errors exit with status 2 and a
// JSON object on stderr.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ictac/image_io.hpp"
#include "ictac/masks.hpp"
#include "ictac/metrics.hpp"
#include "ictac/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int fail(const char* kind, const std::string& message, int code) {
    json err{{"error", kind}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return code;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::size_t parse_size(const std::string& s, const char* what) {
    std::size_t pos = 0;
    long long v = -1;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
    }
    if (v < 0 || pos != s.size()) throw Usage(std::string("bad ") + what + " value '" + s + "'");
    return static_cast<std::size_t>(v);
}

double parse_double(const std::string& s, const char* what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size()) throw Usage(std::string("bad ") + what + " value '" + s + "'");
    return v;
}

// "auto", a single cap applied to every unfolding, or one value per unfolding.
std::optional<ictac::TTRankVector> parse_ranks(const std::string& spec, const ictac::Shape& shape) {
    if (spec == "auto") return std::nullopt;
    const auto items = split_list(spec);
    if (items.empty()) throw Usage("--ranks needs 'auto' or a comma separated list");
    std::vector<std::size_t> ranks;
    if (items.size() == 1 && shape.size() > 2) {
        const auto cap = parse_size(items[0], "--ranks");
        const auto total = ictac::element_count(shape);
        std::size_t rows = 1;
        for (std::size_t k = 1; k < shape.size(); ++k) {
            rows *= shape[k - 1];
            ranks.push_back(std::min({cap, rows, total / rows}));
        }
    } else {
        for (const auto& it : items) ranks.push_back(parse_size(it, "--ranks"));
    }
    return ictac::TTRankVector(std::move(ranks));
}

std::vector<double> parse_weights(const std::string& spec, const ictac::Shape& shape) {
    if (spec == "uniform") return {};
    if (spec == "balanced") return ictac::balanced_weights(shape);
    std::vector<double> w;
    for (const auto& it : split_list(spec)) w.push_back(parse_double(it, "--weights"));
    return w;
}

std::string valid_ictac_sizes(std::size_t copies) {
    std::size_t m = 0, c = copies;
    while (c > 1 && c % 3 == 0) {
        c /= 3;
        ++m;
    }
    if (c != 1) {
        return "--copies must be a power of 3 so that copies x rows can be 3^n";
    }
    std::string out = "with " + std::to_string(copies) + " copies valid image sizes are";
    std::size_t rows = 1;
    for (std::size_t n = std::max<std::size_t>(m, 1); n <= m + 6; ++n) {
        rows = ictac::KASpec::ipow(3, n) / copies;
        out += (n == std::max<std::size_t>(m, 1) ? " " : ", ") + std::to_string(rows) + "x" +
               std::to_string(ictac::KASpec::ipow(2, n));
    }
    return out;
}

json shape_json(const ictac::Shape& s) { return json(s); }

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

std::optional<double> try_ssim(const ictac::DenseTensor& a, const ictac::DenseTensor& b) {
    const ictac::SsimParams p;
    if (a.extent(0) < p.window || a.extent(1) < p.window) return std::nullopt;
    return ictac::ssim(a, b, p);
}

ictac::DenseTensor quantized(const ictac::DenseTensor& t) {
    ictac::DenseTensor q = t;
    for (auto& v : q.data()) v = ictac::quantize(v);
    return q;
}

// ---------------------------------------------------------------------------

struct CompleteArgs {
    std::string input;
    std::string algo = "ictac";
    double mr = 80.0;
    std::uint64_t seed = 0;
    std::string mask_path;
    std::size_t copies = 81;
    std::string ranks = "auto";
    double rank_energy = 0.98;
    std::string weights = "uniform";
    std::size_t max_iters = 500;
    double tol = 1e-4;
    std::string stack_mode = "interleave";
    std::string extract = "first";
    std::size_t threads = 1;
    std::string init = "svd";
    std::string out_dir = ".";
    bool timing = false;
    bool verbose = false;
};

int cmd_complete(const CompleteArgs& a) {
    const auto truth = ictac::load_image(a.input);
    const auto& shape = truth.shape();

    ictac::PipelineConfig pc;
    pc.copies = a.copies;
    pc.stack_mode = a.stack_mode == "stack" ? ictac::StackMode::stack : ictac::StackMode::interleave;
    pc.extract_mode = a.extract == "average" ? ictac::ExtractMode::average : ictac::ExtractMode::first;

    // Shape of the tensor the solver will see, for rank and weight parsing.
    ictac::Shape solver_shape;
    if (a.algo == "ictac") {
        try {
            solver_shape = ictac::ictac_spec(shape, pc).augmented_shape();
        } catch (const ictac::ShapeError& e) {
            throw ictac::ShapeError(std::string(e.what()) + "; " + valid_ictac_sizes(a.copies));
        }
    } else if (a.algo == "ka-tmac-tt") {
        solver_shape = ictac::ka_spec_for(shape, ictac::KaVariant::original).augmented_shape();
    } else {
        solver_shape = shape;
    }

    ictac::SolverConfig sc;
    sc.ranks = parse_ranks(a.ranks, solver_shape);
    if (sc.ranks) sc.ranks->validate_for(solver_shape);
    sc.rank_energy = a.rank_energy;
    sc.weights = parse_weights(a.weights, solver_shape);
    if (!sc.weights.empty()) ictac::validate_weights(sc.weights, solver_shape.size());
    sc.max_iters = a.max_iters;
    sc.tol = a.tol;
    sc.seed = a.seed;
    sc.threads = a.threads;
    sc.init = a.init == "gaussian" ? ictac::InitMethod::gaussian : ictac::InitMethod::svd;
    pc.solver = sc;

    ictac::ObservationMask mask;
    if (!a.mask_path.empty()) {
        mask = ictac::load_mask(a.mask_path, shape[2]);
        if (mask.shape() != shape) {
            throw ictac::ShapeError("mask " + ictac::shape_string(mask.shape()) +
                                    " does not match image " + ictac::shape_string(shape));
        }
    } else {
        mask = ictac::gen_mask(shape, a.mr, a.seed);
    }
    const auto corrupted = ictac::apply_mask(truth, mask);

    ictac::PipelineHooks hooks;
    if (a.verbose) {
        hooks.on_stage = [](std::string_view name, const ictac::Shape& s) {
            std::cerr << name << " " << ictac::shape_string(s) << "\n";
        };
    }

    const auto t0 = std::chrono::steady_clock::now();
    ictac::PipelineResult res;
    if (a.algo == "ictac") {
        res = ictac::run_ictac(corrupted, mask, pc, hooks);
    } else if (a.algo == "ka-tmac-tt") {
        res = ictac::run_ka_tmactt(corrupted, mask, sc, ictac::KaVariant::original, hooks);
    } else {
        res = ictac::run_tmactt(corrupted, mask, sc, hooks);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    ictac::save_image(res.image, (dir / "recovered.png").string());
    ictac::save_image(corrupted, (dir / "corrupted.png").string());
    ictac::save_mask(mask, (dir / "mask.png").string());

    // Scores refer to the image as written to disk.
    const auto recovered = quantized(res.image);
    json report;
    report["algorithm"] = a.algo;
    report["input"] = fs::path(a.input).filename().string();
    report["shape"] = shape_json(shape);
    report["mr_percent"] = ictac::missing_ratio(mask);
    report["seed"] = a.seed;
    report["rse"] = ictac::rse(recovered, truth);
    report["ssim"] = number_or_null(try_ssim(recovered, truth));
    report["iterations"] = res.report.iterations_run;
    report["converged"] = res.report.converged;
    report["wall_seconds"] = a.timing ? json(wall) : json(nullptr);
    report["rng"] = std::string(ictac::kMaskGenerator);
    report["ranks"] = res.report.ranks.ranks();

    std::ofstream out(dir / "metrics.json", std::ios::binary);
    out << report.dump(2) << "\n";
    if (!out) throw ictac::IoError("cannot write " + (dir / "metrics.json").string());
    std::cout << report.dump() << "\n";
    return 0;
}

int cmd_mask(const std::string& input, double mr, std::uint64_t seed, const std::string& output) {
    const auto img = ictac::load_image(input);
    const auto mask = ictac::gen_mask(img.shape(), mr, seed);
    ictac::save_mask(mask, output);
    json j{{"output", output}, {"shape", shape_json(mask.shape())}, {"mr_percent", ictac::missing_ratio(mask)},
           {"seed", seed}, {"rng", std::string(ictac::kMaskGenerator)}};
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_metrics(const std::string& recovered_path, const std::string& reference_path,
                const std::string& mask_path) {
    const auto recovered = ictac::load_image(recovered_path);
    const auto reference = ictac::load_image(reference_path);
    json j;
    j["shape"] = shape_json(reference.shape());
    j["rse"] = ictac::rse(recovered, reference);
    j["ssim"] = number_or_null(try_ssim(recovered, reference));
    if (!mask_path.empty()) {
        j["mr_percent"] = ictac::missing_ratio(ictac::load_mask(mask_path, reference.extent(2)));
    }
    std::cout << j.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank tensor completion of color images"};
    app.require_subcommand(0, 1);  // a [section] in --config may supply it
    app.set_config("--config", "", "TOML run manifest; [complete], [mask] and [metrics] sections hold option values");

    CompleteArgs ca;
    auto* complete = app.add_subcommand("complete", "Mask an image, complete it and score the result");
    complete->configurable();
    complete->add_option("input", ca.input, "Ground-truth RGB PNG")->required()->check(CLI::ExistingFile);
    complete->add_option("--algo", ca.algo, "Completion algorithm")
        ->check(CLI::IsMember({"tmac-tt", "ka-tmac-tt", "ictac"}))
        ->capture_default_str();
    complete->add_option("--mr", ca.mr, "Missing ratio in percent")->check(CLI::Range(0.0, 100.0))->capture_default_str();
    complete->add_option("--seed", ca.seed, "Mask and initialization seed")->capture_default_str();
    complete->add_option("--mask", ca.mask_path, "Use this mask PNG instead of --mr/--seed")->check(CLI::ExistingFile);
    complete->add_option("--copies", ca.copies, "Number of concatenated copies (ictac)")->capture_default_str();
    complete->add_option("--ranks", ca.ranks, "'auto', one cap for all unfoldings, or r_1,...,r_{N-1}")
        ->capture_default_str();
    complete->add_option("--rank-energy", ca.rank_energy, "Energy fraction for automatic ranks")->capture_default_str();
    complete->add_option("--weights", ca.weights, "'uniform', 'balanced' or a_1,...,a_{N-1}")->capture_default_str();
    complete->add_option("--max-iters", ca.max_iters, "Iteration limit")->capture_default_str();
    complete->add_option("--tol", ca.tol, "Relative-change stopping threshold")->capture_default_str();
    complete->add_option("--stack-mode", ca.stack_mode, "How copies merge into the row mode")
        ->check(CLI::IsMember({"interleave", "stack"}))
        ->capture_default_str();
    complete->add_option("--extract", ca.extract, "Which copy becomes the output")
        ->check(CLI::IsMember({"first", "average"}))
        ->capture_default_str();
    complete->add_option("--threads", ca.threads, "Solver worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    complete->add_option("--init", ca.init, "Factor initialization")
        ->check(CLI::IsMember({"svd", "gaussian"}))
        ->capture_default_str();
    complete->add_option("--out-dir", ca.out_dir, "Output directory")->capture_default_str();
    complete->add_flag("--timing", ca.timing, "Record wall_seconds in the report");
    complete->add_flag("-v,--verbose", ca.verbose, "Print pipeline stages to stderr");

    std::string mask_input, mask_output = "mask.png";
    double mask_mr = 80.0;
    std::uint64_t mask_seed = 0;
    auto* mask = app.add_subcommand("mask", "Write a random observation mask for an image");
    mask->configurable();
    mask->add_option("input", mask_input, "RGB PNG whose shape the mask takes")->required()->check(CLI::ExistingFile);
    mask->add_option("--mr", mask_mr, "Missing ratio in percent")->check(CLI::Range(0.0, 100.0))->capture_default_str();
    mask->add_option("--seed", mask_seed, "Seed")->capture_default_str();
    mask->add_option("-o,--output", mask_output, "Output PNG")->capture_default_str();

    std::string rec_path, ref_path, metrics_mask;
    auto* metrics = app.add_subcommand("metrics", "RSE and SSIM of a recovered image against a reference");
    metrics->configurable();
    metrics->add_option("recovered", rec_path)->required()->check(CLI::ExistingFile);
    metrics->add_option("reference", ref_path)->required()->check(CLI::ExistingFile);
    metrics->add_option("--mask", metrics_mask, "Mask PNG; adds mr_percent")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*complete) return cmd_complete(ca);
        if (*mask) return cmd_mask(mask_input, mask_mr, mask_seed, mask_output);
        if (*metrics) return cmd_metrics(rec_path, ref_path, metrics_mask);
        return fail("usage", "a subcommand is required: complete, mask or metrics", 2);
    } catch (const Usage& e) {
        return fail("usage", e.what(), 2);
    } catch (const ictac::ShapeError& e) {
        return fail("shape", e.what(), 2);
    } catch (const ictac::ConfigError& e) {
        return fail("config", e.what(), 2);
    } catch (const ictac::IoError& e) {
        return fail("io", e.what(), 1);
    } catch (const ictac::NumericalError& e) {
        return fail("numerical", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}
