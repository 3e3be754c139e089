#pragma once

// Per-second step detectors over the acceleration magnitude stream.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepforge/dsp.hpp"
#include "stepforge/model.hpp"

namespace stepforge::detectors {

/// Steps per whole second since the recording start.
struct StepSeries {
    std::string detector_name;
    std::vector<double> per_second;

    double total() const noexcept;
    bool operator==(const StepSeries&) const = default;
};

/// Number of one-second buckets covering `n` samples at `rate_hz`.
std::size_t seconds_covering(std::size_t n, double rate_hz) noexcept;

/// Sums consecutive 60-second blocks; a trailing partial minute is kept.
std::vector<double> to_minutes(const std::vector<double>& per_second);

struct PeakParams {
    double target_hz = 15.0;
    int k_neighbors = 3;
    double mag_threshold_g = 1.2;
    int period_min_samples = 5;
    int period_max_samples = 15;
    double similarity_threshold_g = 0.5;
    /// Number of preceding candidates considered alongside the current one.
    int continuity_window = 3;
    /// Candidates in that span (current included) that must pass the variance test.
    int continuity_required = 4;
    double variance_threshold = 0.001;

    void validate() const;
};

struct SpectralParams {
    double window_seconds = 10.0;
    double band_low_hz = 1.4;
    double band_high_hz = 2.3;
    double activity_std_min_g = 0.025;
    double peak_prominence_ratio = 3.0;
    bool harmonic_check = true;

    void validate() const;
};

/// A stride shape on t in [0, 1).
struct StrideTemplate {
    std::string name;
    std::function<double(double)> shape;
    /// Tabulated shape (empirical templates); used when `shape` is empty.
    std::vector<double> samples;
};

/// Single-lobe and double-lobe sinusoidal stride shapes.
std::vector<StrideTemplate> default_templates();

/// Reads a whitespace/comma separated file with one template per column.
std::vector<StrideTemplate> load_templates(const std::filesystem::path& path);

/// Template sampled on `length` points, zero-mean and unit-norm.
std::vector<double> template_samples(const StrideTemplate& t, std::size_t length);

struct TemplateParams {
    std::vector<StrideTemplate> templates = default_templates();
    double target_hz = 20.0;
    double scale_min_seconds = 0.7;
    double scale_max_seconds = 1.8;
    double scale_step_seconds = 0.1;
    double correlation_threshold = 0.7;
    double smoothing_window_seconds = 0.22;
    /// Minimum peak-to-peak range of the unsmoothed stride segment.
    double min_stride_range_g = 0.5;

    std::vector<double> scale_grid() const;
    void validate() const;
};

struct Stride {
    std::size_t onset;  ///< sample index at target_hz
    std::size_t length;
    double correlation;
    std::size_t template_index;
};

StepSeries detect_steps_peak(const dsp::UniformSeries& vm, const PeakParams& p);
StepSeries detect_steps_spectral(const dsp::UniformSeries& vm, const SpectralParams& p);
StepSeries detect_steps_template(const dsp::UniformSeries& vm, const TemplateParams& p);
/// The accepted strides, in onset order.
std::vector<Stride> find_strides(const dsp::UniformSeries& vm, const TemplateParams& p);

/// Centred moving average of `width` samples; the window shrinks at the edges.
std::vector<double> moving_average(const std::vector<double>& v, std::size_t width);

struct DetectorEntry {
    std::string name;
    std::function<StepSeries(const dsp::UniformSeries&)> run;
};

struct DetectorParams {
    PeakParams peak_original;
    PeakParams peak_revised;
    SpectralParams spectral;
    TemplateParams templ;

    /// Sets `<family>.<field>` (e.g. "peak.mag_threshold_g", "template.target_hz").
    /// Returns false for keys outside the detector namespaces; throws
    /// ConfigError for unknown fields or bad values.
    bool set(const std::string& key, const std::string& value);
};

/// The four built-in detectors, in a fixed order.
std::vector<DetectorEntry> builtin_registry(const DetectorParams& params = {});
/// Subset of the built-ins by name; throws ConfigError on an unknown name.
std::vector<DetectorEntry> select_detectors(const DetectorParams& params, const std::vector<std::string>& names);

struct DetectorResult {
    std::optional<StepSeries> series;
    std::string error;
    double seconds = 0.0;
};

/// Runs every entry on the shared magnitude stream. A throwing detector yields
/// an error entry; the others still run.
std::map<std::string, DetectorResult> run_detectors(const dsp::UniformSeries& vm,
                                                    const std::vector<DetectorEntry>& registry);
std::map<std::string, DetectorResult> run_detectors(const TriaxialRecording& rec,
                                                    const std::vector<DetectorEntry>& registry);

}  // namespace stepforge::detectors
