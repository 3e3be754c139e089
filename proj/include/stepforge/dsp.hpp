#pragma once

// Signal-processing kernels shared by detectors and summaries.

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "stepforge/model.hpp"

namespace stepforge::dsp {

struct UniformSeries {
    double sample_rate_hz = 1.0;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    /// Throws InputError on a non-positive rate or non-finite values.
    void validate() const;
};

/// Neumaier compensated sum.
double compensated_sum(std::span<const double> v) noexcept;

UniformSeries vector_magnitude(const TriaxialRecording& rec);

/// Linear interpolation onto a `target_hz` grid starting at the first sample.
/// Output length is round(N * target / rate); positions beyond the last input
/// sample take the last value.
UniformSeries resample_linear(const UniformSeries& s, double target_hz);
std::vector<double> resample_linear(std::span<const double> v, double rate_hz, double target_hz);

/// One second-order section: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

/// Digital Butterworth band-pass of `order` total poles (even, >= 2) as a
/// cascade of order/2 sections, unit gain at the band centre.
std::vector<Biquad> design_butterworth_bandpass(double low_hz, double high_hz, int order, double rate_hz);

/// Causal cascade filter, zero initial state.
std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x);
/// Forward-backward cascade filter with odd padding and steady-state initial
/// conditions; zero phase, squared magnitude response.
std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x);

std::vector<double> bandpass(std::span<const double> x, double rate_hz, double low_hz, double high_hz, int order,
                             bool zero_phase = true);
UniformSeries butterworth_bandpass(const UniformSeries& s, double low_hz, double high_hz, int order,
                                   bool zero_phase = true);

/// Magnitude response of a cascade at `freq_hz`.
double sos_gain(std::span<const Biquad> sos, double freq_hz, double rate_hz);

struct SpectrumBin {
    double freq_hz;
    double power;
};

/// One-sided periodogram of the mean-removed window. Bin powers sum to the
/// population variance of the window. Requires at least 8 samples.
std::vector<SpectrumBin> power_spectrum(const UniformSeries& window);
std::vector<SpectrumBin> power_spectrum(std::span<const double> window, double rate_hz);

/// Half-open sample range [begin, end).
struct IndexRange {
    std::size_t begin;
    std::size_t end;
    bool operator==(const IndexRange&) const = default;
};

/// Windows of round(win * rate) samples every round(hop * rate) samples; a
/// trailing partial window is dropped.
std::vector<IndexRange> sliding_windows(std::size_t n, double rate_hz, double win_seconds, double hop_seconds);
std::vector<IndexRange> sliding_windows(const UniformSeries& s, double win_seconds, double hop_seconds);

}  // namespace stepforge::dsp
