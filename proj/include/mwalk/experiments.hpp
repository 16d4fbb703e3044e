#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mwalk/limit_stats.hpp"

namespace mwalk {

inline constexpr const char* kVersion = "1.0.0";

enum class ExperimentKind {
    Lyapunov,
    Sigma2,
    Contraction,
    CouplingDecay,
    CltRate,
    MzRate,
    Lil,
    FunctionalSup,
    Vbe,
    NormGap
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

// Parsed and schema-validated experiment description. Semantic preconditions
// (grid sizes, stride requirements) are checked separately by
// validate_semantics so that `describe` can surface them as plan errors.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Lyapunov;
    std::optional<MatrixMeasure> measure;  // absent for vbe
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0 = library default
    std::string label;     // output file stem, defaults to the kind name

    long long n = 0;
    std::vector<long long> n_grid;
    long long replicas = 0;
    long long n_max = 0;       // lil
    long long k_max = 0;       // coupling-decay
    long long stride = 1;      // lil / functional-sup traces must use 1
    int point_grid = 8;        // pair-grid size for two-point experiments
    double r = 1.0;            // distance order (clt-rate) or norm order (vbe)
    double p = 1.5;            // mz-rate
    double q = 1.0;            // coupling-decay moment order
    std::string distance = "wasserstein";  // clt-rate: wasserstein | ks
    std::string sigma2_method = "cross";   // sigma2: cross | batch
    long long burn_in = 0;                 // sigma2 batch method
    std::vector<double> start;             // starting direction, default e1

    // vbe increment generator: rademacher | uniform | normal | modulated
    std::string vbe_increments = "rademacher";
    long long vbe_steps = 0;

    std::uint64_t config_digest = 0;  // FNV-1a of the canonical JSON
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Throws ConfigError on violated experiment preconditions.
void validate_semantics(const ExperimentConfig& config);

// Dry-run plan: experiment stages, sample counts, memory estimate.
std::string describe(const ExperimentConfig& config);

struct RunArtifacts {
    std::vector<std::string> files;  // table files, relative to out_dir
    std::string manifest_path;
    std::string summary_json;  // results block also embedded in the manifest
};

// Executes the experiment and writes the table (csv or json), plus
// manifest.json. Table bytes depend only on (config, seed), not on the
// worker count or wall clock.
RunArtifacts run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                            const std::string& format);

// Martingale-difference increment matrix for the vbe experiment; also used
// to build test corpora. Kinds: rademacher, uniform, normal, modulated
// (rademacher step scaled by a bounded function of the running sum).
std::vector<std::vector<double>> make_md_increments(const std::string& kind,
                                                    long long replicas, long long steps,
                                                    std::uint64_t seed);

}  // namespace mwalk
