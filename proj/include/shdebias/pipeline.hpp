// Command implementations behind the CLI: corpus generation, estimation,
// statistics, alignment, embedding plots, relight scaling, and the summary
// report.  Functions throw on failure; the CLI maps exceptions to exit codes.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace shdebias {

struct SynthGenArgs {
    std::filesystem::path out;
    int per_class = 100;
    int resolution = 64;
    std::uint64_t seed = 0;
    int bit_depth = 8;
    double noise_sigma = 0.01;
    int threads = 1;
};
void cmd_synth_gen(const SynthGenArgs& args);

struct EstimateArgs {
    std::filesystem::path corpus;
    std::filesystem::path out;      // .csv or .json coefficient file
    bool unbiased = false;          // true albedo from truth.json, lambda = 0
    double ridge_lambda = 1e-3;
    double reference_albedo = 0.7;
    double prior_gain = 100.0;
    int threads = 1;
};
void cmd_estimate(const EstimateArgs& args);

struct StatsArgs {
    std::filesystem::path coeffs;
    std::filesystem::path corpus;
    std::filesystem::path out_stats;
    std::filesystem::path out_magnitudes;
};
void cmd_stats(const StatsArgs& args);

struct AlignArgs {
    std::filesystem::path coeffs;
    std::filesystem::path stats;
    std::filesystem::path out;
};
void cmd_align(const AlignArgs& args);

struct EmbedArgs {
    std::filesystem::path coeffs;
    std::filesystem::path stats;
    std::filesystem::path out_dir;
    int per_class = 100;
    std::uint64_t seed = 0;
    double perplexity = 30.0;
    int iterations = 1000;
};
void cmd_embed(const EmbedArgs& args);

struct RelightScaleArgs {
    std::filesystem::path corpus;
    std::filesystem::path out_dir;
};
void cmd_relight_scale(const RelightScaleArgs& args);

struct ReportArgs {
    std::filesystem::path corpus;
    std::filesystem::path coeffs;
    std::filesystem::path stats;
    std::filesystem::path out;
    int per_class = 25;   // consistency-pair sample size per class
    std::uint64_t seed = 0;
    std::ostream* summary = nullptr;  // human-readable summary; default stdout
};
void cmd_report(const ReportArgs& args);

}  // namespace shdebias
