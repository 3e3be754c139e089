#pragma once

// Batch commands behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stepforge/config.hpp"
#include "stepforge/detectors.hpp"

namespace stepforge::pipeline {

struct RunReport {
    /// 0 success, 1 partial failure.
    int exit_code = 0;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> outputs;
};

struct StepsOptions {
    std::filesystem::path raw_dir;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> wear_dir;
    config::PipelineConfig config;
    unsigned jobs = 1;
    bool use_cache = true;
};

/// Raw recordings -> out/minutes/<subject>.csv with every detector, AC and MIMS.
/// Per-detector timings go to out/timing.csv. Throws InputError("no subjects")
/// when the input directory holds no recordings.
RunReport run_steps(const StepsOptions& opt, std::ostream& log);

struct AnalyzeOptions {
    std::filesystem::path minutes;  ///< minute file or directory of minute files
    std::optional<std::filesystem::path> covariates;
    std::optional<std::filesystem::path> mortality;
    std::filesystem::path out_dir;
    config::PipelineConfig config;
    unsigned jobs = 1;
};

/// "" for the default minimum of valid days, "_mvd<k>" otherwise.
std::string output_suffix(const AnalysisConfig& cfg);

RunReport run_analyze(const AnalyzeOptions& opt, std::ostream& log);

struct BenchOptions {
    int n_subjects = 10;
    double days = 7.0;
    double rate_hz = 80.0;
    std::vector<std::string> detectors = {"peak_original"};
    std::filesystem::path out_dir;
    detectors::DetectorParams params;
    std::uint64_t seed = 1;
};

struct BenchRow {
    std::string detector;
    double seconds;
    double minutes_per_10_subjects;
    double estimated_cohort_days;
};

/// Synthetic subjects processed one at a time; each detector is timed over
/// magnitude computation plus detection. Writes out/bench.csv.
std::vector<BenchRow> run_bench(const BenchOptions& opt, std::ostream& log);

struct SimulateOptions {
    std::string kind = "study";  ///< "study" or "raw"
    int n_subjects = 200;
    int days = 7;
    double minutes = 10.0;  ///< raw recordings: length in minutes
    double rate_hz = 80.0;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
};

/// study: out/minutes/<subject>.csv, out/covariates.csv, out/mortality.csv.
/// raw: out/raw/<subject>.csv gait recordings (x,y,z at rate_hz).
RunReport run_simulate(const SimulateOptions& opt, std::ostream& log);

}  // namespace stepforge::pipeline
