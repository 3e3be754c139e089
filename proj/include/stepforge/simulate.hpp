#pragma once

// Seeded generators with known ground truth.

#include <cstdint>
#include <string>
#include <vector>

#include "stepforge/model.hpp"
#include "stepforge/survival.hpp"

namespace stepforge::simulate {

struct GaitSegment {
    enum class Kind { Rest, Walk };
    Kind kind = Kind::Walk;
    double duration_s = 60.0;
    double cadence_hz = 2.0;
    double amplitude_g = 0.4;
    double noise_sd_g = 0.0;
};

struct GaitSample {
    TriaxialRecording recording;
    /// Ground truth: cadence times the overlap of walking with each second.
    std::vector<double> true_steps_per_second;
    double true_total() const;
};

/// Walk: (1 + A sin(2 pi f t)) along a random unit axis plus Gaussian noise
/// per axis. Rest: 1 g along a random unit axis plus noise.
GaitSample gen_gait(const std::vector<GaitSegment>& recipe, double rate_hz, std::uint64_t seed,
                    const std::string& subject_id = "sim");

/// Per-day marginal rates, each drawn uniformly from [lo, hi] for every day.
struct CohortProfile {
    double flag_lo = 0.0, flag_hi = 0.01;
    double nonwear_lo = 0.0, nonwear_hi = 0.08;
    double unknown_lo = 0.0, unknown_hi = 0.05;
    /// Share of worn minutes classified as sleep.
    double sleep_lo = 0.3, sleep_hi = 0.75;
    double zero_mims_lo = 0.0, zero_mims_hi = 0.1;
    /// Append four days per subject sitting on the validity thresholds:
    /// 1368 and 1367 valid minutes, 420 and 419 wake minutes.
    bool boundary_days = true;
};

std::vector<MinuteRecord> gen_cohort(int n_subjects, int days, const CohortProfile& profile, std::uint64_t seed);

struct SurvivalSpec {
    int n = 1000;
    double beta_per_step = 0.0;
    double baseline_rate = 0.005;  ///< events per month at steps = steps_mean
    double censor_rate = 0.004;    ///< 0 disables censoring
    double steps_mean = 8000.0;
    double steps_sd = 3000.0;
    bool random_weights = false;
};

struct SimulatedSurvival {
    survival::SurvivalDataset data;  ///< single covariate "steps"
    double true_beta = 0.0;
};

SimulatedSurvival gen_survival(const SurvivalSpec& spec, std::uint64_t seed);

struct StudySpec {
    int n_subjects = 200;
    int days = 7;
    double age_lo = 40.0;
    double age_hi = 85.0;
    /// Daily probability of a long non-wear block that voids the day.
    double p_bad_day = 0.1;
    bool with_ac = true;
};

struct Study {
    std::vector<MinuteRecord> minutes;
    std::vector<SubjectCovariates> covariates;
    std::vector<MortalityRecord> mortality;
};

/// Minute tables, covariates and mortality for a synthetic cohort in which
/// activity lowers the hazard.
Study gen_study(const StudySpec& spec, std::uint64_t seed);

}  // namespace stepforge::simulate
