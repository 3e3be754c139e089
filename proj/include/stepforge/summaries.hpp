#pragma once

// Epoch-level activity summaries: activity counts and MIMS.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepforge/model.hpp"

namespace stepforge::summaries {

enum class AxisCombine { EuclideanNorm, Sum };

struct AcParams {
    double resample_hz = 30.0;
    double band_low_hz = 0.25;
    double band_high_hz = 2.5;
    int filter_order = 4;
    double deadband_g = 0.068;
    double clip_g = 2.13;
    double quantum_g = 1.0 / 128.0;
    double epoch_seconds = 60.0;
    AxisCombine axis_combine = AxisCombine::EuclideanNorm;

    void validate() const;
};

struct MimsParams {
    double interp_hz = 100.0;
    double band_low_hz = 0.2;
    double band_high_hz = 5.0;
    int filter_order = 4;
    double truncation_floor = 1e-4;
    double epoch_seconds = 60.0;

    void validate() const;
};

struct SummaryParams {
    AcParams ac;
    MimsParams mims;

    /// Sets "ac.<field>" or "mims.<field>". Returns false for other namespaces;
    /// throws ConfigError for unknown fields or bad values.
    bool set(const std::string& key, const std::string& value);
};

/// Per-axis counts for each whole epoch (a trailing partial epoch is ignored).
std::vector<std::int64_t> axis_counts(const std::vector<double>& axis, double rate_hz, const AcParams& p);
std::vector<std::int64_t> activity_counts(const TriaxialRecording& rec, const AcParams& p = {});

std::vector<double> axis_mims(const std::vector<double>& axis, double rate_hz, const MimsParams& p);
std::vector<double> mims_units(const TriaxialRecording& rec, const MimsParams& p = {});

/// log10(1 + x); throws InputError for negative x.
double log10_plus1(double x);

/// Copies `minutes` and fills mims, ac and per-detector steps. Every supplied
/// series must have exactly one value per minute record.
std::vector<MinuteRecord> attach_minute_summaries(std::vector<MinuteRecord> minutes,
                                                  const std::optional<std::vector<std::int64_t>>& ac,
                                                  const std::vector<double>& mims,
                                                  const std::map<std::string, std::vector<double>>& steps);

}  // namespace stepforge::summaries
