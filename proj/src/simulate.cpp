#include "stepforge/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "stepforge/dsp.hpp"
#include "stepforge/rng.hpp"

namespace stepforge::simulate {

namespace {

std::array<double, 3> random_axis(Rng& rng) {
    for (;;) {
        std::array<double, 3> u{rng.normal(), rng.normal(), rng.normal()};
        const double n = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        if (n > 1e-6) return {u[0] / n, u[1] / n, u[2] / n};
    }
}

double draw(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

bool bernoulli(Rng& rng, double p) { return rng.uniform() < p; }

// Rounds to a fixed number of decimals so generated tables stay compact.
double rounded(double v, double scale) { return std::round(v * scale) / scale; }

std::string subject_name(int i) {
    std::string digits = std::to_string(i + 1);
    return "S" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
}

}  // namespace

double GaitSample::true_total() const { return dsp::compensated_sum(true_steps_per_second); }

GaitSample gen_gait(const std::vector<GaitSegment>& recipe, double rate_hz, std::uint64_t seed,
                    const std::string& subject_id) {
    if (!(rate_hz > 0.0)) throw InputError("gait generator: rate must be positive");
    for (const auto& s : recipe) {
        if (!(s.duration_s > 0.0)) throw InputError("gait generator: segment duration must be positive");
        if (!(s.noise_sd_g >= 0.0)) throw InputError("gait generator: noise sd must be >= 0");
        if (s.kind == GaitSegment::Kind::Walk) {
            if (s.cadence_hz < 0.5 || s.cadence_hz > 4.0) throw InputError("gait generator: cadence outside [0.5, 4] Hz");
            if (rate_hz < 4.0 * s.cadence_hz) throw InputError("gait generator: rate below 4x cadence");
        }
    }
    Rng rng(seed);
    GaitSample out;
    out.recording.subject_id = subject_id;
    out.recording.sample_rate_hz = rate_hz;

    double t_start = 0.0;
    double total_seconds = 0.0;
    for (const auto& s : recipe) total_seconds += s.duration_s;
    out.true_steps_per_second.assign(static_cast<std::size_t>(std::ceil(total_seconds - 1e-9)), 0.0);

    std::size_t emitted = 0;
    for (const auto& s : recipe) {
        const double t_end = t_start + s.duration_s;
        const auto end_sample = static_cast<std::size_t>(std::llround(t_end * rate_hz));
        const auto u = random_axis(rng);
        for (; emitted < end_sample; ++emitted) {
            const double t = static_cast<double>(emitted) / rate_hz - t_start;
            double g = 1.0;
            if (s.kind == GaitSegment::Kind::Walk) g += s.amplitude_g * std::sin(2.0 * std::numbers::pi * s.cadence_hz * t);
            out.recording.x.push_back(g * u[0] + s.noise_sd_g * rng.normal());
            out.recording.y.push_back(g * u[1] + s.noise_sd_g * rng.normal());
            out.recording.z.push_back(g * u[2] + s.noise_sd_g * rng.normal());
        }
        if (s.kind == GaitSegment::Kind::Walk) {
            for (std::size_t sec = static_cast<std::size_t>(std::floor(t_start)); sec < out.true_steps_per_second.size();
                 ++sec) {
                const double lo = std::max(t_start, static_cast<double>(sec));
                const double hi = std::min(t_end, static_cast<double>(sec + 1));
                if (hi <= lo) break;
                out.true_steps_per_second[sec] += s.cadence_hz * (hi - lo);
            }
        }
        t_start = t_end;
    }
    return out;
}

std::vector<MinuteRecord> gen_cohort(int n_subjects, int days, const CohortProfile& p, std::uint64_t seed) {
    if (n_subjects < 1 || days < 1) throw InputError("cohort generator: subjects and days must be >= 1");
    Rng rng(seed);
    std::vector<MinuteRecord> out;
    out.reserve(static_cast<std::size_t>(n_subjects) * static_cast<std::size_t>(days + 4) * 1440);
    for (int s = 0; s < n_subjects; ++s) {
        const std::string sid = subject_name(s);
        for (int d = 1; d <= days; ++d) {
            const double flag = draw(rng, p.flag_lo, p.flag_hi), nonwear = draw(rng, p.nonwear_lo, p.nonwear_hi),
                         unknown = draw(rng, p.unknown_lo, p.unknown_hi), sleep = draw(rng, p.sleep_lo, p.sleep_hi),
                         zero = draw(rng, p.zero_mims_lo, p.zero_mims_hi);
            for (int m = 0; m < 1440; ++m) {
                MinuteRecord r;
                r.subject_id = sid;
                r.day_index = d;
                r.minute_of_day = m;
                r.quality_flagged = bernoulli(rng, flag);
                if (bernoulli(rng, nonwear)) r.wear = WearState::NonWear;
                else if (bernoulli(rng, unknown)) r.wear = WearState::Unknown;
                else if (bernoulli(rng, sleep)) r.wear = WearState::SleepWear;
                else r.wear = WearState::WakeWear;
                if (r.wear == WearState::NonWear || bernoulli(rng, zero)) r.mims = 0.0;
                else if (bernoulli(rng, 0.002)) r.mims = kMimsSentinel;
                else r.mims = rounded(draw(rng, 0.05, 30.0), 1e4);
                const double steps = r.wear == WearState::WakeWear ? std::floor(draw(rng, 0.0, 40.0)) : 0.0;
                r.steps["peak_original"] = steps;
                r.ac = static_cast<std::int64_t>(std::llround(std::max(r.mims, 0.0) * 150.0));
                out.push_back(std::move(r));
            }
        }
        if (!p.boundary_days) continue;
        // Days sitting exactly on (and just below) the validity thresholds.
        struct Shape {
            int nonwear;
            int sleep;
        };
        const std::array<Shape, 4> shapes = {{{72, 0}, {73, 0}, {0, 1020}, {0, 1021}}};
        for (std::size_t k = 0; k < shapes.size(); ++k) {
            for (int m = 0; m < 1440; ++m) {
                MinuteRecord r;
                r.subject_id = sid;
                r.day_index = days + 1 + static_cast<int>(k);
                r.minute_of_day = m;
                if (m < shapes[k].nonwear) r.wear = WearState::NonWear;
                else if (m < shapes[k].sleep) r.wear = WearState::SleepWear;
                else r.wear = WearState::WakeWear;
                r.mims = r.wear == WearState::NonWear ? 0.0 : rounded(draw(rng, 0.05, 30.0), 1e4);
                r.steps["peak_original"] = r.wear == WearState::WakeWear ? 10.0 : 0.0;
                r.ac = static_cast<std::int64_t>(std::llround(r.mims * 150.0));
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

SimulatedSurvival gen_survival(const SurvivalSpec& spec, std::uint64_t seed) {
    if (spec.n < 10) throw InputError("survival generator: n must be >= 10");
    if (!(spec.baseline_rate > 0.0) || !(spec.censor_rate >= 0.0) || !(spec.steps_sd >= 0.0))
        throw InputError("survival generator: rates must be positive");
    Rng rng(seed);
    SimulatedSurvival out;
    out.true_beta = spec.beta_per_step;
    auto& d = out.data;
    d.names = {"steps"};
    d.x.resize(spec.n, 1);
    for (int i = 0; i < spec.n; ++i) {
        const double steps = std::max(0.0, spec.steps_mean + spec.steps_sd * rng.normal());
        const double hazard = spec.baseline_rate * std::exp(spec.beta_per_step * (steps - spec.steps_mean));
        const double t = rng.exponential(hazard);
        const double c = spec.censor_rate > 0.0 ? rng.exponential(spec.censor_rate) : INFINITY;
        d.x(i, 0) = steps;
        d.time.push_back(std::min(t, c));
        d.event.push_back(t <= c);
        d.weight.push_back(spec.random_weights ? draw(rng, 0.5, 3.0) : 1.0);
    }
    return out;
}

Study gen_study(const StudySpec& spec, std::uint64_t seed) {
    if (spec.n_subjects < 1 || spec.days < 1) throw InputError("study generator: subjects and days must be >= 1");
    Rng rng(seed);
    Study st;
    const std::array<std::pair<const char*, double>, 4> detectors = {
        {{"peak_original", 1.0}, {"peak_revised", 0.96}, {"spectral", 0.8}, {"template", 0.32}}};
    auto pick = [&](std::initializer_list<double> probs) {
        double u = rng.uniform(), acc = 0.0;
        int k = 0;
        for (double pr : probs) {
            acc += pr;
            if (u < acc) return k;
            ++k;
        }
        return k - 1;
    };

    for (int s = 0; s < spec.n_subjects; ++s) {
        SubjectCovariates c;
        c.subject_id = subject_name(s);
        c.wave = s % 2 == 0 ? "2011-2012" : "2013-2014";
        c.age_years = std::floor(draw(rng, spec.age_lo, spec.age_hi));
        if (c.age_years >= 80.0) {
            c.age_years = 80.0;
            c.age_topcoded = true;
        }
        c.sex = static_cast<Sex>(pick({0.48, 0.52}));
        c.race = static_cast<RaceEthnicity>(pick({0.62, 0.12, 0.09, 0.07, 0.10}));
        c.education = static_cast<Education>(pick({0.15, 0.25, 0.60}));
        c.bmi = static_cast<BmiCategory>(pick({0.30, 0.03, 0.33, 0.34}));
        c.diabetes = bernoulli(rng, 0.15);
        c.chd = bernoulli(rng, 0.06);
        c.chf = bernoulli(rng, 0.04);
        c.heart_attack = bernoulli(rng, 0.05);
        c.stroke = bernoulli(rng, 0.04);
        c.cancer = bernoulli(rng, 0.12);
        c.mobility_problem = bernoulli(rng, 0.15);
        c.alcohol = static_cast<Alcohol>(pick({0.12, 0.18, 0.45, 0.15, 0.10}));
        c.smoking = static_cast<Smoking>(pick({0.55, 0.27, 0.18}));
        c.health = static_cast<SelfRatedHealth>(pick({0.12, 0.28, 0.38, 0.18, 0.04}));
        if (bernoulli(rng, 0.03)) c.education.reset();
        c.survey_weight = rounded(draw(rng, 2000.0, 60000.0), 1.0);
        c.stratum_id = std::to_string(1 + s % 15);
        c.psu_id = std::to_string(1 + (s / 30) % 2);

        // Latent activity drives both the minute data and the hazard.
        const double z = rng.normal();
        const double daily_steps = std::max(800.0, 10000.0 - 90.0 * (c.age_years - 50.0) + 3000.0 * z);
        std::array<double, 4> det_scale{};
        for (std::size_t k = 0; k < detectors.size(); ++k)
            det_scale[k] = detectors[k].second * std::max(0.2, 1.0 + 0.08 * rng.normal());

        for (int d = 1; d <= spec.days; ++d) {
            const bool bad = bernoulli(rng, spec.p_bad_day);
            const int nonwear_start = static_cast<int>(rng.below(1440));
            const int nonwear_len = bad ? 200 + static_cast<int>(rng.below(600)) : 0;
            const double day_factor = std::exp(0.25 * rng.normal());
            for (int m = 0; m < 1440; ++m) {
                MinuteRecord r;
                r.subject_id = c.subject_id;
                r.day_index = d;
                r.minute_of_day = m;
                const bool night = m < 360 || m >= 1380;
                const int since = m - nonwear_start;
                if (since >= 0 && since < nonwear_len) r.wear = WearState::NonWear;
                else if (bernoulli(rng, 0.01)) r.wear = WearState::Unknown;
                else r.wear = night ? WearState::SleepWear : WearState::WakeWear;
                r.quality_flagged = bernoulli(rng, 0.001);
                double true_steps = 0.0;
                if (r.wear == WearState::WakeWear) true_steps = daily_steps * day_factor / 1020.0 * rng.exponential(1.0);
                if (r.wear == WearState::NonWear) {
                    r.mims = 0.0;
                } else {
                    const double base = r.wear == WearState::SleepWear ? draw(rng, 0.01, 1.5) : draw(rng, 0.5, 6.0);
                    r.mims = rounded(base + 0.9 * true_steps, 1e3);
                }
                for (std::size_t k = 0; k < detectors.size(); ++k)
                    r.steps[detectors[k].first] = std::max(0.0, std::round(true_steps * det_scale[k] + 0.5 * rng.normal()));
                if (spec.with_ac) r.ac = static_cast<std::int64_t>(std::llround(std::max(r.mims, 0.0) * 140.0));
                st.minutes.push_back(std::move(r));
            }
        }

        const double lp = 0.075 * (c.age_years - 65.0) + (c.sex == Sex::Male ? 0.3 : 0.0) + (*c.diabetes ? 0.4 : 0.0) +
                          (*c.chf ? 0.5 : 0.0) + (c.smoking == Smoking::Current ? 0.5 : 0.0) -
                          0.00012 * (daily_steps - 8000.0);
        const double t = rng.exponential(0.0025 * std::exp(lp));
        const double censor = 60.0 + draw(rng, 0.0, 60.0);
        st.mortality.push_back({c.subject_id, t <= censor, rounded(std::min(t, censor), 10.0)});
        st.covariates.push_back(std::move(c));
    }
    return st;
}

}  // namespace stepforge::simulate
