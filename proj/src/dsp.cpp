#include "stepforge/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

namespace stepforge::dsp {

namespace {

using cd = std::complex<double>;

void require_rate(double rate_hz, const char* what) {
    if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw InputError(std::string(what) + ": rate must be positive");
}

}  // namespace

void UniformSeries::validate() const {
    require_rate(sample_rate_hz, "series");
    for (double v : values) {
        if (!std::isfinite(v)) throw InputError("series contains a non-finite value");
    }
}

double compensated_sum(std::span<const double> v) noexcept {
    double sum = 0.0, c = 0.0;
    for (double x : v) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) c += (sum - t) + x;
        else c += (x - t) + sum;
        sum = t;
    }
    return sum + c;
}

UniformSeries vector_magnitude(const TriaxialRecording& rec) {
    rec.validate();
    UniformSeries out;
    out.sample_rate_hz = rec.sample_rate_hz;
    out.values.resize(rec.size());
    // Squares summed smallest first, so the result ignores axis order.
    for (std::size_t i = 0; i < rec.size(); ++i) {
        double a = rec.x[i] * rec.x[i], b = rec.y[i] * rec.y[i], c = rec.z[i] * rec.z[i];
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        out.values[i] = std::sqrt((a + b) + c);
    }
    return out;
}

std::vector<double> resample_linear(std::span<const double> v, double rate_hz, double target_hz) {
    require_rate(rate_hz, "resample");
    require_rate(target_hz, "resample target");
    if (v.empty()) throw InputError("resample: empty input");
    const std::size_t n = v.size();
    auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n) * target_hz / rate_hz));
    n_out = std::max<std::size_t>(n_out, 1);
    std::vector<double> out(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        const double p = static_cast<double>(k) * rate_hz / target_hz;
        const auto i = static_cast<std::size_t>(p);
        if (i + 1 >= n) {
            out[k] = v[n - 1];
            continue;
        }
        const double f = p - static_cast<double>(i);
        out[k] = v[i] + f * (v[i + 1] - v[i]);
    }
    return out;
}

UniformSeries resample_linear(const UniformSeries& s, double target_hz) {
    return {target_hz, resample_linear(s.values, s.sample_rate_hz, target_hz)};
}

std::vector<Biquad> design_butterworth_bandpass(double low_hz, double high_hz, int order, double rate_hz) {
    require_rate(rate_hz, "band-pass");
    const double nyq = rate_hz / 2.0;
    if (!(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < nyq))
        throw InputError("band-pass edges must satisfy 0 < low < high < rate/2");
    if (order < 2 || order % 2 != 0) throw InputError("band-pass order must be even and >= 2");

    const int n = order / 2;  // low-pass prototype order
    const double fs2 = 2.0 * rate_hz;
    const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / rate_hz);
    const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / rate_hz);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;

    std::vector<cd> zpoles;
    for (int k = 0; k < n; ++k) {
        const cd p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n));
        const cd half = p * bw / 2.0;
        const cd root = std::sqrt(half * half - w0 * w0);
        for (cd s : {half + root, half - root}) zpoles.push_back((fs2 + s) / (fs2 - s));
    }

    constexpr double tol = 1e-12;
    std::vector<cd> complex_up;
    std::vector<double> reals;
    for (const cd& z : zpoles) {
        if (z.imag() > tol) complex_up.push_back(z);
        else if (std::abs(z.imag()) <= tol) reals.push_back(z.real());
    }
    std::sort(complex_up.begin(), complex_up.end(), [](const cd& a, const cd& b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a.real() < b.real();
    });
    std::sort(reals.begin(), reals.end());
    if (complex_up.size() * 2 + reals.size() != zpoles.size() || reals.size() % 2 != 0)
        throw InputError("band-pass design produced unpaired poles");

    std::vector<Biquad> sos;
    for (const cd& z : complex_up) sos.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    for (std::size_t i = 0; i < reals.size(); i += 2)
        sos.push_back({1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});

    const double centre_hz = rate_hz / std::numbers::pi * std::atan(w0 / fs2);
    const double g = sos_gain(sos, centre_hz, rate_hz);
    const double per = std::pow(g, -1.0 / static_cast<double>(sos.size()));
    for (auto& s : sos) {
        s.b0 *= per;
        s.b1 *= per;
        s.b2 *= per;
    }
    return sos;
}

double sos_gain(std::span<const Biquad> sos, double freq_hz, double rate_hz) {
    const cd zi = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / rate_hz);  // z^-1
    cd h = 1.0;
    for (const auto& s : sos) h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
    return std::abs(h);
}

namespace {

struct State {
    double z1 = 0.0, z2 = 0.0;
};

void run_cascade(std::span<const Biquad> sos, std::vector<State> st, std::vector<double>& x) {
    for (std::size_t k = 0; k < sos.size(); ++k) {
        const Biquad& s = sos[k];
        double z1 = st[k].z1, z2 = st[k].z2;
        for (double& v : x) {
            const double in = v;
            const double y = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * y + z2;
            z2 = s.b2 * in - s.a2 * y;
            v = y;
        }
    }
}

// Steady-state section states for a unit step, cascaded.
std::vector<State> step_states(std::span<const Biquad> sos) {
    std::vector<State> zi(sos.size());
    double scale = 1.0;
    for (std::size_t k = 0; k < sos.size(); ++k) {
        const Biquad& s = sos[k];
        const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        zi[k].z2 = scale * (s.b2 - s.a2 * g);
        zi[k].z1 = scale * ((s.b1 + s.b2) - (s.a1 + s.a2) * g);
        scale *= g;
    }
    return zi;
}

std::vector<State> scaled(std::vector<State> zi, double x0) {
    for (auto& z : zi) {
        z.z1 *= x0;
        z.z2 *= x0;
    }
    return zi;
}

}  // namespace

std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    run_cascade(sos, std::vector<State>(sos.size()), y);
    return y;
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t pad = std::min<std::size_t>(3 * (2 * sos.size() + 1), n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto zi = step_states(sos);
    run_cascade(sos, scaled(zi, ext.front()), ext);
    std::reverse(ext.begin(), ext.end());
    run_cascade(sos, scaled(zi, ext.front()), ext);
    std::reverse(ext.begin(), ext.end());
    return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                               ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::vector<double> bandpass(std::span<const double> x, double rate_hz, double low_hz, double high_hz, int order,
                             bool zero_phase) {
    const auto sos = design_butterworth_bandpass(low_hz, high_hz, order, rate_hz);
    return zero_phase ? sosfiltfilt(sos, x) : sosfilt(sos, x);
}

UniformSeries butterworth_bandpass(const UniformSeries& s, double low_hz, double high_hz, int order,
                                   bool zero_phase) {
    return {s.sample_rate_hz, bandpass(s.values, s.sample_rate_hz, low_hz, high_hz, order, zero_phase)};
}

std::vector<SpectrumBin> power_spectrum(std::span<const double> window, double rate_hz) {
    require_rate(rate_hz, "spectrum");
    const std::size_t n = window.size();
    if (n < 8) throw InputError("spectrum: window needs at least 8 samples");
    const double mean = compensated_sum(window) / static_cast<double>(n);
    std::vector<double> centred(n);
    for (std::size_t i = 0; i < n; ++i) centred[i] = window[i] - mean;

    thread_local Eigen::FFT<double> fft;
    std::vector<cd> spec;
    fft.fwd(spec, centred);

    const std::size_t half = n / 2;
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    std::vector<SpectrumBin> out(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == half);
        out[k] = {static_cast<double>(k) * rate_hz / static_cast<double>(n),
                  (edge ? 1.0 : 2.0) * std::norm(spec[k]) / nn};
    }
    return out;
}

std::vector<SpectrumBin> power_spectrum(const UniformSeries& window) {
    return power_spectrum(window.values, window.sample_rate_hz);
}

std::vector<IndexRange> sliding_windows(std::size_t n, double rate_hz, double win_seconds, double hop_seconds) {
    require_rate(rate_hz, "windows");
    if (!(win_seconds > 0.0) || !(hop_seconds > 0.0)) throw InputError("window and hop must be positive");
    const auto w = static_cast<std::size_t>(std::max<long long>(1, std::llround(win_seconds * rate_hz)));
    const auto h = static_cast<std::size_t>(std::max<long long>(1, std::llround(hop_seconds * rate_hz)));
    std::vector<IndexRange> out;
    if (n < w) return out;
    out.reserve((n - w) / h + 1);
    for (std::size_t b = 0; b + w <= n; b += h) out.push_back({b, b + w});
    return out;
}

std::vector<IndexRange> sliding_windows(const UniformSeries& s, double win_seconds, double hop_seconds) {
    return sliding_windows(s.size(), s.sample_rate_hz, win_seconds, hop_seconds);
}

}  // namespace stepforge::dsp
