#include "stepforge/summaries.hpp"

#include <cmath>

#include "stepforge/dsp.hpp"
#include "stepforge/text.hpp"

namespace stepforge::summaries {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError("summary parameter: " + what); }

std::size_t epoch_samples(double rate_hz, double epoch_seconds) {
    const auto e = std::llround(rate_hz * epoch_seconds);
    if (e < 1) throw InputError("epoch shorter than one sample");
    return static_cast<std::size_t>(e);
}

// Leading whole epochs of `axis`.
std::vector<double> whole_epochs(const std::vector<double>& axis, std::size_t per_epoch) {
    const std::size_t n = axis.size() / per_epoch * per_epoch;
    return std::vector<double>(axis.begin(), axis.begin() + static_cast<std::ptrdiff_t>(n));
}

std::vector<double> to_rate(std::vector<double> v, double rate_hz, double target_hz) {
    if (rate_hz == target_hz) return v;
    return dsp::resample_linear(v, rate_hz, target_hz);
}

double to_double(const std::string& key, const std::string& value) {
    auto v = text::parse_double(text::trim(value));
    if (!v || !std::isfinite(*v)) throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
    return *v;
}

int to_int(const std::string& key, const std::string& value) {
    auto v = text::parse_int(text::trim(value));
    if (!v) throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
    return static_cast<int>(*v);
}

}  // namespace

void AcParams::validate() const {
    if (!(resample_hz > 0.0)) bad("ac resample_hz must be positive");
    if (!(band_low_hz > 0.0) || !(band_high_hz > band_low_hz) || !(band_high_hz < resample_hz / 2.0))
        bad("ac band must satisfy 0 < low < high < resample_hz/2");
    if (filter_order < 2 || filter_order % 2) bad("ac filter_order must be even and >= 2");
    if (!(deadband_g >= 0.0) || !(clip_g > deadband_g) || !(quantum_g > 0.0)) bad("ac amplitude constants out of range");
    if (!(epoch_seconds > 0.0)) bad("ac epoch_seconds must be positive");
}

void MimsParams::validate() const {
    if (!(interp_hz > 0.0)) bad("mims interp_hz must be positive");
    if (!(band_low_hz > 0.0) || !(band_high_hz > band_low_hz) || !(band_high_hz < interp_hz / 2.0))
        bad("mims band must satisfy 0 < low < high < interp_hz/2");
    if (filter_order < 2 || filter_order % 2) bad("mims filter_order must be even and >= 2");
    if (!(truncation_floor >= 0.0)) bad("mims truncation_floor must be >= 0");
    if (!(epoch_seconds > 0.0)) bad("mims epoch_seconds must be positive");
}

namespace {

int even_order(const std::string& key, const std::string& value) {
    const int v = to_int(key, value);
    if (v < 2 || v % 2 != 0) throw ConfigError("'" + key + "' must be an even order >= 2");
    return v;
}

}  // namespace

bool SummaryParams::set(const std::string& key, const std::string& value) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) return false;
    const std::string family = key.substr(0, dot), f = key.substr(dot + 1);
    if (family == "ac") {
        if (f == "resample_hz") ac.resample_hz = to_double(key, value);
        else if (f == "band_low_hz") ac.band_low_hz = to_double(key, value);
        else if (f == "band_high_hz") ac.band_high_hz = to_double(key, value);
        else if (f == "filter_order") ac.filter_order = even_order(key, value);
        else if (f == "deadband_g") ac.deadband_g = to_double(key, value);
        else if (f == "clip_g") ac.clip_g = to_double(key, value);
        else if (f == "quantum_g") ac.quantum_g = to_double(key, value);
        else if (f == "epoch_seconds") ac.epoch_seconds = to_double(key, value);
        else if (f == "axis_combine") {
            const std::string v = text::lower(text::trim(value));
            if (v == "euclidean" || v == "euclidean_norm" || v == "norm") ac.axis_combine = AxisCombine::EuclideanNorm;
            else if (v == "sum") ac.axis_combine = AxisCombine::Sum;
            else throw ConfigError("'" + key + "' must be euclidean or sum");
        } else throw ConfigError("unknown configuration key '" + key + "'");
        return true;
    }
    if (family == "mims") {
        if (f == "interp_hz") mims.interp_hz = to_double(key, value);
        else if (f == "band_low_hz") mims.band_low_hz = to_double(key, value);
        else if (f == "band_high_hz") mims.band_high_hz = to_double(key, value);
        else if (f == "filter_order") mims.filter_order = even_order(key, value);
        else if (f == "truncation_floor") mims.truncation_floor = to_double(key, value);
        else if (f == "epoch_seconds") mims.epoch_seconds = to_double(key, value);
        else throw ConfigError("unknown configuration key '" + key + "'");
        return true;
    }
    return false;
}

std::vector<std::int64_t> axis_counts(const std::vector<double>& axis, double rate_hz, const AcParams& p) {
    p.validate();
    if (rate_hz < p.resample_hz) throw InputError("activity counts: input rate below resample rate");
    const auto raw = whole_epochs(axis, epoch_samples(rate_hz, p.epoch_seconds));
    if (raw.empty()) return {};
    const auto v = dsp::bandpass(to_rate(raw, rate_hz, p.resample_hz), p.resample_hz, p.band_low_hz, p.band_high_hz,
                                 p.filter_order, true);
    const std::size_t per = epoch_samples(p.resample_hz, p.epoch_seconds);
    std::vector<std::int64_t> out(v.size() / per, 0);
    for (std::size_t i = 0; i < out.size() * per; ++i) {
        double a = std::abs(v[i]) - p.deadband_g;
        if (a <= 0.0) continue;
        a = std::min(a, p.clip_g);
        out[i / per] += static_cast<std::int64_t>(std::floor(a / p.quantum_g));
    }
    return out;
}

std::vector<std::int64_t> activity_counts(const TriaxialRecording& rec, const AcParams& p) {
    rec.validate();
    const auto cx = axis_counts(rec.x, rec.sample_rate_hz, p);
    const auto cy = axis_counts(rec.y, rec.sample_rate_hz, p);
    const auto cz = axis_counts(rec.z, rec.sample_rate_hz, p);
    std::vector<std::int64_t> out(cx.size());
    for (std::size_t e = 0; e < out.size(); ++e) {
        if (p.axis_combine == AxisCombine::Sum) {
            out[e] = cx[e] + cy[e] + cz[e];
        } else {
            const auto sq = [](std::int64_t c) { return static_cast<double>(c) * static_cast<double>(c); };
            out[e] = std::llround(std::sqrt(sq(cx[e]) + sq(cy[e]) + sq(cz[e])));
        }
    }
    return out;
}

std::vector<double> axis_mims(const std::vector<double>& axis, double rate_hz, const MimsParams& p) {
    p.validate();
    const auto raw = whole_epochs(axis, epoch_samples(rate_hz, p.epoch_seconds));
    if (raw.empty()) return {};
    const auto v = dsp::bandpass(to_rate(raw, rate_hz, p.interp_hz), p.interp_hz, p.band_low_hz, p.band_high_hz,
                                 p.filter_order, true);
    const std::size_t per = epoch_samples(p.interp_hz, p.epoch_seconds);
    const double dt = 1.0 / p.interp_hz;
    std::vector<double> out(v.size() / per, 0.0);
    std::vector<double> terms(per > 1 ? per - 1 : 0);
    for (std::size_t e = 0; e < out.size(); ++e) {
        const double* y = v.data() + e * per;
        for (std::size_t i = 0; i + 1 < per; ++i) terms[i] = 0.5 * (std::abs(y[i]) + std::abs(y[i + 1])) * dt;
        const double area = dsp::compensated_sum(terms);
        out[e] = area < p.truncation_floor ? 0.0 : area;
    }
    return out;
}

std::vector<double> mims_units(const TriaxialRecording& rec, const MimsParams& p) {
    rec.validate();
    const auto mx = axis_mims(rec.x, rec.sample_rate_hz, p);
    const auto my = axis_mims(rec.y, rec.sample_rate_hz, p);
    const auto mz = axis_mims(rec.z, rec.sample_rate_hz, p);
    std::vector<double> out(mx.size());
    for (std::size_t e = 0; e < out.size(); ++e) out[e] = mx[e] + my[e] + mz[e];
    return out;
}

double log10_plus1(double x) {
    if (!(x >= 0.0)) throw InputError("log10(1+x) needs x >= 0");
    return std::log10(1.0 + x);
}

std::vector<MinuteRecord> attach_minute_summaries(std::vector<MinuteRecord> minutes,
                                                  const std::optional<std::vector<std::int64_t>>& ac,
                                                  const std::vector<double>& mims,
                                                  const std::map<std::string, std::vector<double>>& steps) {
    const std::size_t n = minutes.size();
    auto check = [n](std::size_t got, const std::string& what) {
        if (got != n)
            throw InputError(what + " has " + std::to_string(got) + " epochs for " + std::to_string(n) + " minutes");
    };
    if (ac) check(ac->size(), "activity count series");
    check(mims.size(), "MIMS series");
    for (const auto& [name, s] : steps) check(s.size(), "step series '" + name + "'");
    for (std::size_t i = 0; i < n; ++i) {
        auto& m = minutes[i];
        m.mims = normalize_mims(mims[i]);
        if (ac) m.ac = (*ac)[i];
        for (const auto& [name, s] : steps) {
            if (!(s[i] >= 0.0)) throw InputError("step series '" + name + "' holds a negative value");
            m.steps[name] = s[i];
        }
    }
    return minutes;
}

}  // namespace stepforge::summaries
