// shdebias command-line front end.  Subcommands wire the library pipeline
// together; every run is deterministic given its flags (seed included).
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage or config error.
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "shdebias/pipeline.hpp"

namespace {

using namespace shdebias;

void add_synth_gen(CLI::App& app) {
    auto args = std::make_shared<SynthGenArgs>();
    auto out = std::make_shared<std::string>();
    CLI::App* sub = app.add_subcommand("synth-gen", "Generate a synthetic labeled face corpus");
    sub->add_option("--out", *out, "Output corpus directory")->required();
    sub->add_option("--per-class", args->per_class, "Items per skin-tone class")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--resolution", args->resolution, "Image width/height in pixels")
        ->capture_default_str()
        ->check(CLI::Range(32, 4096));
    sub->add_option("--seed", args->seed, "Master seed")->capture_default_str();
    sub->add_option("--bit-depth", args->bit_depth, "Sensor quantization bits")
        ->capture_default_str()
        ->check(CLI::Range(1, 16));
    sub->add_option("--noise-sigma", args->noise_sigma, "Sensor noise std in encoded units")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", args->threads, "Worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->callback([args, out] {
        args->out = *out;
        cmd_synth_gen(*args);
    });
}

void add_estimate(CLI::App& app) {
    auto args = std::make_shared<EstimateArgs>();
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    CLI::App* sub =
        app.add_subcommand("estimate", "Estimate lighting coefficients for every corpus item");
    sub->add_option("--corpus", *corpus, "Corpus directory (from synth-gen)")->required();
    sub->add_option("--out", *out, "Output coefficient file (.csv or .json)")->required();
    sub->add_flag("--unbiased", args->unbiased,
                  "Use true per-item albedo from truth.json and no ridge term");
    sub->add_option("--ridge-lambda", args->ridge_lambda, "Ridge strength of the biased fit")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--reference-albedo", args->reference_albedo,
                    "Albedo the biased fit assumes for everyone")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--prior-gain", args->prior_gain, "Pull toward the default light prior")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", args->threads, "Worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->callback([args, corpus, out] {
        args->corpus = *corpus;
        args->out = *out;
        cmd_estimate(*args);
    });
}

void add_stats(CLI::App& app) {
    auto args = std::make_shared<StatsArgs>();
    auto coeffs = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto out_stats = std::make_shared<std::string>();
    auto out_mags = std::make_shared<std::string>();
    CLI::App* sub = app.add_subcommand(
        "stats", "Compute per-group alignment statistics and class magnitude means");
    sub->add_option("--coeffs", *coeffs, "Coefficient file (from estimate)")->required();
    sub->add_option("--corpus", *corpus, "Corpus directory")->required();
    sub->add_option("--out-stats", *out_stats, "Output alignment statistics JSON")->required();
    sub->add_option("--out-magnitudes", *out_mags, "Output class magnitude JSON")->required();
    sub->callback([args, coeffs, corpus, out_stats, out_mags] {
        args->coeffs = *coeffs;
        args->corpus = *corpus;
        args->out_stats = *out_stats;
        args->out_magnitudes = *out_mags;
        cmd_stats(*args);
    });
}

void add_align(CLI::App& app) {
    auto args = std::make_shared<AlignArgs>();
    auto coeffs = std::make_shared<std::string>();
    auto stats = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    CLI::App* sub = app.add_subcommand(
        "align", "Normalize coefficients and align the dark group to the rest");
    sub->add_option("--coeffs", *coeffs, "Coefficient file (from estimate)")->required();
    sub->add_option("--stats", *stats, "Alignment statistics JSON (from stats)")->required();
    sub->add_option("--out", *out, "Output aligned coefficient file (.csv or .json)")->required();
    sub->callback([args, coeffs, stats, out] {
        args->coeffs = *coeffs;
        args->stats = *stats;
        args->out = *out;
        cmd_align(*args);
    });
}

void add_embed(CLI::App& app) {
    auto args = std::make_shared<EmbedArgs>();
    auto coeffs = std::make_shared<std::string>();
    auto stats = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    CLI::App* sub = app.add_subcommand(
        "embed", "Emit 2-D scatter plots: raw, band-0 strip, normalized, aligned");
    sub->add_option("--coeffs", *coeffs, "Coefficient file (from estimate)")->required();
    sub->add_option("--stats", *stats, "Alignment statistics JSON (from stats)")->required();
    sub->add_option("--out-dir", *out_dir, "Output directory for CSV/SVG pairs")->required();
    sub->add_option("--per-class", args->per_class, "Items sampled per class")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", args->seed, "Sampling and embedding seed")->capture_default_str();
    sub->add_option("--perplexity", args->perplexity, "t-SNE perplexity")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--iterations", args->iterations, "t-SNE gradient iterations")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->callback([args, coeffs, stats, out_dir] {
        args->coeffs = *coeffs;
        args->stats = *stats;
        args->out_dir = *out_dir;
        cmd_embed(*args);
    });
}

void add_relight_scale(CLI::App& app) {
    auto args = std::make_shared<RelightScaleArgs>();
    auto corpus = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    CLI::App* sub = app.add_subcommand(
        "relight-scale", "Rescale every image to its class mean illumination magnitude");
    sub->add_option("--corpus", *corpus, "Corpus directory")->required();
    sub->add_option("--out-dir", *out_dir, "Output directory (images/ + magnitude report)")
        ->required();
    sub->callback([args, corpus, out_dir] {
        args->corpus = *corpus;
        args->out_dir = *out_dir;
        cmd_relight_scale(*args);
    });
}

void add_report(CLI::App& app) {
    auto args = std::make_shared<ReportArgs>();
    auto corpus = std::make_shared<std::string>();
    auto coeffs = std::make_shared<std::string>();
    auto stats = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    CLI::App* sub = app.add_subcommand(
        "report", "Summarize consistency, class balance, magnitude, and separability");
    sub->add_option("--corpus", *corpus, "Corpus directory")->required();
    sub->add_option("--coeffs", *coeffs, "Coefficient file (from estimate)")->required();
    sub->add_option("--stats", *stats, "Alignment statistics JSON (from stats)")->required();
    sub->add_option("--out", *out, "Output report JSON")->required();
    sub->add_option("--per-class", args->per_class, "Consistency pairs sampled per class")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", args->seed, "Sampling seed")->capture_default_str();
    sub->callback([args, corpus, coeffs, stats, out] {
        args->corpus = *corpus;
        args->coeffs = *coeffs;
        args->stats = *stats;
        args->out = *out;
        cmd_report(*args);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spherical-harmonics lighting de-biasing toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Key=value file of option defaults; command-line flags win");
    app.set_version_flag("--version", "shdebias 1.0.0");

    add_synth_gen(app);
    add_estimate(app);
    add_stats(app);
    add_align(app);
    add_embed(app);
    add_relight_scale(app);
    add_report(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
