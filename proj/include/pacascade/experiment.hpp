#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pacascade/cascade.hpp"
#include "pacascade/metrics.hpp"
#include "pacascade/optimizer.hpp"
#include "pacascade/sigproc.hpp"

namespace pacascade {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Field names double as the JSON config keys.
struct ExperimentConfig {
    Complex alpha{-0.33, 0.033};  // -0.33 (1 - 0.1j)
    double sigma_sq = 1e-5;
    double G = 1.0;
    double epsilon = 0.3;
    std::vector<int> K_range{1, 2, 3, 4, 5};
    int symbols = 4096;
    int oversampling = 8;
    double rolloff = 0.22;
    std::uint64_t seed = 1;
    std::vector<Mode> modes{kAllModes[0], kAllModes[1], kAllModes[2], kAllModes[3], kAllModes[4]};
    std::string output_dir = "out";

    /// Throws ConfigError.
    void validate() const;

    ExcitationSpec excitation() const;
    CascadeConfig cascade(int stages, Scenario scenario) const;
};

// Fixed conventions shared by every run.
inline constexpr int kSpanSymbols = 16;
inline constexpr std::size_t kAmAmDecimation = 4;

/// Unknown keys are rejected. `alpha` is written as {"re": .., "im": ..}.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config, bool include_output_dir = true);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stream seeds derived from the user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
inline constexpr std::uint64_t kOptimizationNoiseStream = 1;
inline constexpr std::uint64_t kEvaluationNoiseStream = 2;

/// Excitation plus the two frozen noise draws: one the solver sees, one the
/// reported metrics are computed on.
struct Realizations {
    Signal excitation;
    NoiseRealization optimization_noise;
    NoiseRealization evaluation_noise;
};

Realizations draw_realizations(const ExperimentConfig& config);

struct ScenarioRun {
    int K = 0;
    Scenario scenario = Scenario::One;
    Signal input;
    Signal output;
    MetricsReport metrics;
    std::vector<std::size_t> saturated_stages;

    std::string label() const;
};

struct OptimizationRun {
    int K = 0;
    Mode mode = Mode::PowerOnly;
    Scenario start = Scenario::One;
    CascadeParams params;
    OptimizationResult result;
    bool failed = false;
    std::string error;
    MetricsReport before;
    MetricsReport after;
    Signal input;
    Signal output;

    /// power-scenario1, power-scenario2, equal-gains, ...
    std::string label() const;
};

struct RunRecord {
    ExperimentConfig config;
    Signal desired;  ///< G * x0_unit
    std::vector<ScenarioRun> scenarios;
    std::vector<OptimizationRun> optimizations;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> timings_s;  ///< not emitted; wall clock varies

    bool any_failed() const;
};

/// Runs one cascade at p0 = 1 for every K in K_range and every requested
/// scenario, measuring on the evaluation realization.
RunRecord run_scenarios(const ExperimentConfig& config,
                        const std::vector<Scenario>& scenarios = {Scenario::One, Scenario::Two});

/// Solves every requested mode for every K from the Scenario One start, plus
/// the Scenario Two start for the power-only mode.
RunRecord run_optimizations(const ExperimentConfig& config);

/// Both of the above on one shared set of realizations.
RunRecord run_sweep(const ExperimentConfig& config);

/// Evaluates a cascade configuration on a realization; used by every run.
MetricsReport measure(const Signal& desired, const Signal& input, const Signal& output,
                      const ExperimentConfig& config);

struct EmittedFile {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
};

struct EmitResult {
    std::vector<EmittedFile> files;  ///< data files, manifest excluded
    std::string digest;              ///< over all data file names and digests
};

/// Writes CSVs and manifest.json into `dir`. Files are written through a
/// temporary and renamed; on failure everything written by this call is
/// removed and IoError is thrown.
EmitResult emit_outputs(const RunRecord& record, const std::filesystem::path& dir);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

std::string sha256_hex(std::string_view data);

}  // namespace pacascade
