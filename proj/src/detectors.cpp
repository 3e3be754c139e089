#include "stepforge/detectors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "line_reader.hpp"
#include "stepforge/text.hpp"

namespace stepforge::detectors {

double StepSeries::total() const noexcept { return dsp::compensated_sum(per_second); }

std::size_t seconds_covering(std::size_t n, double rate_hz) noexcept {
    if (n == 0 || !(rate_hz > 0.0)) return 0;
    return static_cast<std::size_t>(std::ceil(static_cast<double>(n) / rate_hz - 1e-9));
}

std::vector<double> to_minutes(const std::vector<double>& per_second) {
    std::vector<double> out((per_second.size() + 59) / 60, 0.0);
    for (std::size_t s = 0; s < per_second.size(); ++s) out[s / 60] += per_second[s];
    return out;
}

namespace {

[[noreturn]] void bad_param(const std::string& what) { throw ConfigError("detector parameter: " + what); }

// Seconds bucket for sample `i` at `rate`, clipped into the series.
void add_at(std::vector<double>& per_second, double t_seconds, double steps) {
    if (per_second.empty()) return;
    auto s = static_cast<std::size_t>(std::max(0.0, std::floor(t_seconds + 1e-9)));
    per_second[std::min(s, per_second.size() - 1)] += steps;
}

double variance_of(const std::vector<double>& v, std::size_t b, std::size_t e) {
    const std::size_t n = e - b;
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (std::size_t i = b; i < e; ++i) mean += v[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = b; i < e; ++i) ss += (v[i] - mean) * (v[i] - mean);
    return ss / static_cast<double>(n);
}

}  // namespace

// ---------------------------------------------------------------------------
// Peak family

void PeakParams::validate() const {
    if (!(target_hz > 0.0)) bad_param("peak target_hz must be positive");
    if (k_neighbors < 1) bad_param("peak k_neighbors must be >= 1");
    if (!(mag_threshold_g > 0.0)) bad_param("peak mag_threshold_g must be positive");
    if (period_min_samples < 1 || period_min_samples >= period_max_samples)
        bad_param("peak period_min_samples must be >= 1 and below period_max_samples");
    if (!(similarity_threshold_g > 0.0)) bad_param("peak similarity_threshold_g must be positive");
    if (continuity_window < 0) bad_param("peak continuity_window must be >= 0");
    if (continuity_required < 1 || continuity_required > continuity_window + 1)
        bad_param("peak continuity_required must lie in [1, continuity_window + 1]");
    if (!(variance_threshold > 0.0)) bad_param("peak variance_threshold must be positive");
}

StepSeries detect_steps_peak(const dsp::UniformSeries& vm, const PeakParams& p) {
    p.validate();
    StepSeries out{"peak", std::vector<double>(seconds_covering(vm.size(), vm.sample_rate_hz), 0.0)};
    if (vm.values.empty()) return out;
    if (vm.sample_rate_hz < p.target_hz * (1.0 - 1e-12)) throw InputError("peak detector: input rate below target");
    const std::vector<double> v = vm.sample_rate_hz == p.target_hz
                                      ? vm.values
                                      : dsp::resample_linear(vm.values, vm.sample_rate_hz, p.target_hz);
    const auto k = static_cast<std::size_t>(p.k_neighbors);
    const std::size_t n = v.size();

    std::vector<std::size_t> cand;
    for (std::size_t i = k; i + k < n; ++i) {
        bool peak = true;
        for (std::size_t j = i - k; j <= i + k && peak; ++j) peak = j == i || v[i] > v[j];
        if (peak) cand.push_back(i);
    }

    const auto pmin = static_cast<std::size_t>(p.period_min_samples);
    const auto pmax = static_cast<std::size_t>(p.period_max_samples);
    std::vector<char> var_ok(cand.size(), 0);
    for (std::size_t c = 0; c < cand.size(); ++c) {
        const std::size_t i = cand[c];
        const std::size_t from = c > 0 ? cand[c - 1] : (i > pmax ? i - pmax : 0);
        var_ok[c] = variance_of(v, from, i + 1) > p.variance_threshold;
    }

    const auto span = static_cast<std::size_t>(p.continuity_window);
    for (std::size_t c = 0; c < cand.size(); ++c) {
        const std::size_t i = cand[c];
        if (!(v[i] > p.mag_threshold_g) || c == 0) continue;
        const std::size_t gap = i - cand[c - 1];
        if (gap < pmin || gap > pmax) continue;
        if (std::abs(v[i] - v[cand[c - 1]]) > p.similarity_threshold_g) continue;
        if (c < span) continue;
        int passing = 0;
        for (std::size_t j = c - span; j <= c; ++j) passing += var_ok[j];
        if (passing < p.continuity_required) continue;
        add_at(out.per_second, static_cast<double>(i) / p.target_hz, 1.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral family

void SpectralParams::validate() const {
    if (!(window_seconds >= 4.0)) bad_param("spectral window_seconds must be >= 4");
    if (!(band_low_hz > 0.0) || !(band_high_hz > band_low_hz)) bad_param("spectral band must satisfy 0 < low < high");
    if (!(activity_std_min_g >= 0.0)) bad_param("spectral activity_std_min_g must be >= 0");
    if (!(peak_prominence_ratio > 0.0)) bad_param("spectral peak_prominence_ratio must be positive");
}

StepSeries detect_steps_spectral(const dsp::UniformSeries& vm, const SpectralParams& p) {
    p.validate();
    const double rate = vm.sample_rate_hz;
    StepSeries out{"spectral", std::vector<double>(seconds_covering(vm.size(), rate), 0.0)};
    if (vm.values.empty()) return out;
    if (!(rate > 2.0 * p.band_high_hz)) throw InputError("spectral detector: band above Nyquist");

    for (const auto& w : dsp::sliding_windows(vm.size(), rate, p.window_seconds, p.window_seconds)) {
        std::span<const double> win(vm.values.data() + w.begin, w.end - w.begin);
        const double len = static_cast<double>(win.size());
        const double mean = dsp::compensated_sum(win) / len;
        double ss = 0.0;
        for (double x : win) ss += (x - mean) * (x - mean);
        if (std::sqrt(ss / len) < p.activity_std_min_g) continue;

        const auto spec = dsp::power_spectrum(win, rate);
        std::vector<std::size_t> band;
        for (std::size_t b = 0; b < spec.size(); ++b) {
            if (spec[b].freq_hz >= p.band_low_hz && spec[b].freq_hz <= p.band_high_hz) band.push_back(b);
        }
        if (band.empty()) continue;
        std::size_t best = band.front();
        for (std::size_t b : band) {
            if (spec[b].power > spec[best].power) best = b;
        }
        std::vector<double> powers;
        for (std::size_t b : band) powers.push_back(spec[b].power);
        std::sort(powers.begin(), powers.end());
        const std::size_t m = powers.size();
        const double median = m % 2 ? powers[m / 2] : 0.5 * (powers[m / 2 - 1] + powers[m / 2]);
        if (spec[best].power < p.peak_prominence_ratio * median || !(spec[best].power > 0.0)) continue;

        double f = spec[best].freq_hz;
        if (p.harmonic_check) {
            const double df = rate / len;
            const auto half = static_cast<std::size_t>(std::llround(f / 2.0 / df));
            if (half < spec.size() && spec[half].freq_hz >= p.band_low_hz && spec[half].freq_hz <= p.band_high_hz &&
                spec[half].power > spec[best].power)
                f = spec[half].freq_hz;
        }

        const double t0 = static_cast<double>(w.begin) / rate;
        const double t1 = static_cast<double>(w.end) / rate;
        const double steps = f * (t1 - t0);
        for (auto s = static_cast<std::size_t>(std::floor(t0 + 1e-9)); s < out.per_second.size(); ++s) {
            const double lo = std::max(t0, static_cast<double>(s));
            const double hi = std::min(t1, static_cast<double>(s + 1));
            if (hi <= lo) break;
            out.per_second[s] += steps * (hi - lo) / (t1 - t0);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Template family

std::vector<StrideTemplate> default_templates() {
    return {
        {"single_lobe", [](double t) { return -std::cos(2.0 * std::numbers::pi * t); }, {}},
        {"double_lobe", [](double t) { return -std::cos(4.0 * std::numbers::pi * t); }, {}},
    };
}

std::vector<StrideTemplate> load_templates(const std::filesystem::path& path) {
    detail::LineReader reader(path);
    std::vector<std::vector<double>> cols;
    std::string_view line;
    while (reader.next(line)) {
        std::string row(text::trim(line));
        if (row.empty() || row.front() == '#') continue;
        std::replace(row.begin(), row.end(), ',', ' ');
        std::vector<double> vals;
        std::size_t pos = 0;
        while (pos < row.size()) {
            while (pos < row.size() && std::isspace(static_cast<unsigned char>(row[pos]))) ++pos;
            std::size_t end = pos;
            while (end < row.size() && !std::isspace(static_cast<unsigned char>(row[end]))) ++end;
            if (end > pos) {
                auto v = text::parse_double(std::string_view(row).substr(pos, end - pos));
                if (!v || !std::isfinite(*v))
                    throw ParseError(reader.path(), reader.line_number(), "malformed template value");
                vals.push_back(*v);
            }
            pos = end;
        }
        if (cols.empty()) cols.resize(vals.size());
        if (vals.size() != cols.size())
            throw ParseError(reader.path(), reader.line_number(), "template rows differ in width");
        for (std::size_t c = 0; c < vals.size(); ++c) cols[c].push_back(vals[c]);
    }
    if (cols.empty()) throw InputError("'" + path.string() + "' holds no templates");
    std::vector<StrideTemplate> out;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (cols[c].size() < 4) throw InputError("empirical templates need at least 4 samples");
        StrideTemplate t{"empirical_" + std::to_string(c + 1), {}, std::move(cols[c])};
        (void)template_samples(t, t.samples.size());  // rejects flat templates
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<double> template_samples(const StrideTemplate& t, std::size_t length) {
    if (length < 2) throw InputError("template length must be >= 2");
    std::vector<double> v(length);
    if (t.shape) {
        for (std::size_t j = 0; j < length; ++j) v[j] = t.shape(static_cast<double>(j) / static_cast<double>(length));
    } else {
        // Resample the tabulated shape onto `length` points over [0, 1).
        const std::size_t m = t.samples.size();
        if (m < 2) throw InputError("tabulated template needs >= 2 samples");
        for (std::size_t j = 0; j < length; ++j) {
            const double p = static_cast<double>(j) * static_cast<double>(m) / static_cast<double>(length);
            const auto i = static_cast<std::size_t>(p);
            const double f = p - static_cast<double>(i);
            v[j] = i + 1 < m ? t.samples[i] + f * (t.samples[i + 1] - t.samples[i]) : t.samples[m - 1];
        }
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(length);
    double norm = 0.0;
    for (double& x : v) {
        x -= mean;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (!(norm > 1e-12)) throw InputError("template '" + t.name + "' is flat");
    for (double& x : v) x /= norm;
    return v;
}

std::vector<double> TemplateParams::scale_grid() const {
    std::vector<double> grid;
    const auto steps = static_cast<long long>(std::floor((scale_max_seconds - scale_min_seconds) / scale_step_seconds + 1e-9));
    for (long long i = 0; i <= steps; ++i) grid.push_back(scale_min_seconds + static_cast<double>(i) * scale_step_seconds);
    return grid;
}

void TemplateParams::validate() const {
    if (templates.empty()) bad_param("template library is empty");
    if (!(target_hz > 0.0)) bad_param("template target_hz must be positive");
    if (!(scale_min_seconds > 0.0) || !(scale_max_seconds >= scale_min_seconds) || !(scale_step_seconds > 0.0))
        bad_param("template scale grid must be positive and increasing");
    if (!(correlation_threshold > 0.0) || correlation_threshold > 1.0)
        bad_param("template correlation_threshold must lie in (0, 1]");
    if (!(smoothing_window_seconds >= 0.0)) bad_param("template smoothing window must be >= 0");
    if (!(min_stride_range_g >= 0.0)) bad_param("template min_stride_range_g must be >= 0");
}

std::vector<double> moving_average(const std::vector<double>& v, std::size_t width) {
    if (width <= 1 || v.empty()) return v;
    const std::size_t half = width / 2;
    std::vector<double> prefix(v.size() + 1, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) prefix[i + 1] = prefix[i] + v[i];
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t b = i >= half ? i - half : 0;
        const std::size_t e = std::min(v.size(), i + (width - half));
        out[i] = (prefix[e] - prefix[b]) / static_cast<double>(e - b);
    }
    return out;
}

std::vector<Stride> find_strides(const dsp::UniformSeries& vm, const TemplateParams& p) {
    p.validate();
    if (vm.values.empty()) return {};
    const std::vector<double> raw = vm.sample_rate_hz == p.target_hz
                                        ? vm.values
                                        : dsp::resample_linear(vm.values, vm.sample_rate_hz, p.target_hz);
    const auto width = static_cast<std::size_t>(std::llround(p.smoothing_window_seconds * p.target_hz));
    std::vector<double> x = moving_average(raw, width);
    const std::size_t n = x.size();

    // Centre on the global mean to keep the running sums well conditioned.
    const double gmean = dsp::compensated_sum(x) / static_cast<double>(n);
    for (double& v : x) v -= gmean;
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        s1[i + 1] = s1[i] + x[i];
        s2[i + 1] = s2[i] + x[i] * x[i];
    }

    struct Candidate {
        double key;
        Stride stride;
    };
    std::vector<Candidate> cands;
    std::vector<double> r;
    for (double scale : p.scale_grid()) {
        const auto len = static_cast<std::size_t>(std::llround(scale * p.target_hz));
        if (len < 3 || len > n) continue;
        for (std::size_t ti = 0; ti < p.templates.size(); ++ti) {
            const auto tpl = template_samples(p.templates[ti], len);
            const std::size_t positions = n - len + 1;
            r.assign(positions, 0.0);
            for (std::size_t o = 0; o < positions; ++o) {
                const double sum = s1[o + len] - s1[o];
                const double ss = (s2[o + len] - s2[o]) - sum * sum / static_cast<double>(len);
                if (!(ss > 1e-12 * static_cast<double>(len))) continue;
                double dot = 0.0;
                for (std::size_t j = 0; j < len; ++j) dot += tpl[j] * x[o + j];
                r[o] = dot / std::sqrt(ss);
            }
            for (std::size_t o = 0; o < positions; ++o) {
                if (r[o] < p.correlation_threshold) continue;
                if (o > 0 && r[o - 1] > r[o]) continue;
                if (o + 1 < positions && r[o + 1] >= r[o]) continue;
                const auto [lo, hi] = std::minmax_element(raw.begin() + static_cast<std::ptrdiff_t>(o),
                                                          raw.begin() + static_cast<std::ptrdiff_t>(o + len));
                if (*hi - *lo < p.min_stride_range_g) continue;
                cands.push_back({std::round(r[o] * 1e9) / 1e9, {o, len, r[o], ti}});
            }
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.key != b.key) return a.key > b.key;
        if (a.stride.onset != b.stride.onset) return a.stride.onset < b.stride.onset;
        if (a.stride.length != b.stride.length) return a.stride.length < b.stride.length;
        return a.stride.template_index < b.stride.template_index;
    });

    std::vector<char> used(n, 0);
    std::vector<Stride> accepted;
    for (const auto& c : cands) {
        const auto b = used.begin() + static_cast<std::ptrdiff_t>(c.stride.onset);
        const auto e = b + static_cast<std::ptrdiff_t>(c.stride.length);
        if (std::find(b, e, 1) != e) continue;
        std::fill(b, e, 1);
        accepted.push_back(c.stride);
    }
    std::sort(accepted.begin(), accepted.end(), [](const Stride& a, const Stride& b) { return a.onset < b.onset; });
    return accepted;
}

StepSeries detect_steps_template(const dsp::UniformSeries& vm, const TemplateParams& p) {
    StepSeries out{"template", std::vector<double>(seconds_covering(vm.size(), vm.sample_rate_hz), 0.0)};
    for (const auto& s : find_strides(vm, p)) {
        const double mid = (static_cast<double>(s.onset) + static_cast<double>(s.length) / 2.0) / p.target_hz;
        add_at(out.per_second, mid, 2.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Registry and runner

namespace {

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

bool to_bool(const std::string& key, const std::string& value) {
    const std::string s = text::lower(text::trim(value));
    if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "off" || s == "no") return false;
    throw ConfigError("'" + key + "' expects a boolean, got '" + value + "'");
}

void set_peak(PeakParams& p, const std::string& key, const std::string& field, const std::string& value) {
    if (field == "target_hz") p.target_hz = to_double(key, value);
    else if (field == "k_neighbors") p.k_neighbors = to_int(key, value);
    else if (field == "mag_threshold_g") p.mag_threshold_g = to_double(key, value);
    else if (field == "period_min_samples") p.period_min_samples = to_int(key, value);
    else if (field == "period_max_samples") p.period_max_samples = to_int(key, value);
    else if (field == "similarity_threshold_g") p.similarity_threshold_g = to_double(key, value);
    else if (field == "continuity_window") p.continuity_window = to_int(key, value);
    else if (field == "continuity_required") p.continuity_required = to_int(key, value);
    else if (field == "variance_threshold") p.variance_threshold = to_double(key, value);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

bool DetectorParams::set(const std::string& key, const std::string& value) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) return false;
    const std::string family = key.substr(0, dot), field = key.substr(dot + 1);
    if (family == "peak") {
        set_peak(peak_original, key, field, value);
        set_peak(peak_revised, key, field, value);
    } else if (family == "peak_original") {
        set_peak(peak_original, key, field, value);
    } else if (family == "peak_revised") {
        set_peak(peak_revised, key, field, value);
    } else if (family == "spectral") {
        auto& s = spectral;
        if (field == "window_seconds") s.window_seconds = to_double(key, value);
        else if (field == "band_low_hz") s.band_low_hz = to_double(key, value);
        else if (field == "band_high_hz") s.band_high_hz = to_double(key, value);
        else if (field == "activity_std_min_g") s.activity_std_min_g = to_double(key, value);
        else if (field == "peak_prominence_ratio") s.peak_prominence_ratio = to_double(key, value);
        else if (field == "harmonic_check") s.harmonic_check = to_bool(key, value);
        else throw ConfigError("unknown configuration key '" + key + "'");
    } else if (family == "template") {
        auto& t = templ;
        if (field == "target_hz") t.target_hz = to_double(key, value);
        else if (field == "scale_min_seconds") t.scale_min_seconds = to_double(key, value);
        else if (field == "scale_max_seconds") t.scale_max_seconds = to_double(key, value);
        else if (field == "scale_step_seconds") t.scale_step_seconds = to_double(key, value);
        else if (field == "correlation_threshold") t.correlation_threshold = to_double(key, value);
        else if (field == "smoothing_window_seconds") t.smoothing_window_seconds = to_double(key, value);
        else if (field == "min_stride_range_g") t.min_stride_range_g = to_double(key, value);
        else if (field == "library") t.templates = load_templates(std::string(text::trim(value)));
        else throw ConfigError("unknown configuration key '" + key + "'");
    } else {
        return false;
    }
    return true;
}

std::vector<DetectorEntry> builtin_registry(const DetectorParams& params) {
    params.peak_original.validate();
    params.peak_revised.validate();
    params.spectral.validate();
    params.templ.validate();
    auto named = [](std::string name, StepSeries s) {
        s.detector_name = std::move(name);
        return s;
    };
    return {
        {"peak_original",
         [p = params.peak_original, named](const dsp::UniformSeries& vm) {
             return named("peak_original", detect_steps_peak(vm, p));
         }},
        {"peak_revised",
         [p = params.peak_revised, named](const dsp::UniformSeries& vm) {
             return named("peak_revised", detect_steps_peak(vm, p));
         }},
        {"spectral",
         [p = params.spectral, named](const dsp::UniformSeries& vm) {
             return named("spectral", detect_steps_spectral(vm, p));
         }},
        {"template",
         [p = params.templ, named](const dsp::UniformSeries& vm) {
             return named("template", detect_steps_template(vm, p));
         }},
    };
}

std::vector<DetectorEntry> select_detectors(const DetectorParams& params, const std::vector<std::string>& names) {
    auto all = builtin_registry(params);
    std::vector<DetectorEntry> out;
    for (const auto& name : names) {
        auto it = std::find_if(all.begin(), all.end(), [&](const DetectorEntry& e) { return e.name == name; });
        if (it == all.end()) throw ConfigError("unknown detector '" + name + "'");
        out.push_back(*it);
    }
    return out;
}

std::map<std::string, DetectorResult> run_detectors(const dsp::UniformSeries& vm,
                                                    const std::vector<DetectorEntry>& registry) {
    if (registry.empty()) throw ConfigError("detector registry is empty");
    std::map<std::string, DetectorResult> out;
    for (const auto& entry : registry) {
        DetectorResult res;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            res.series = entry.run(vm);
            res.series->detector_name = entry.name;
        } catch (const std::exception& e) {
            res.error = e.what();
        } catch (...) {
            res.error = "unknown failure";
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out[entry.name] = std::move(res);
    }
    return out;
}

std::map<std::string, DetectorResult> run_detectors(const TriaxialRecording& rec,
                                                    const std::vector<DetectorEntry>& registry) {
    return run_detectors(dsp::vector_magnitude(rec), registry);
}

}  // namespace stepforge::detectors
