#pragma once

// Core domain types shared by every stepforge module.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stepforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data.
class InputError : public Error {
public:
    using Error::Error;
};

/// Unknown configuration key or out-of-range configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Text parse failure; carries the 1-based line number of the offending row.
class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

using LocalTime = std::chrono::local_time<std::chrono::milliseconds>;

/// Raw three-axis acceleration in g at a fixed sampling rate.
struct TriaxialRecording {
    std::string subject_id;
    LocalTime start{};
    double sample_rate_hz = 80.0;
    std::vector<double> x, y, z;

    std::size_t size() const noexcept { return x.size(); }
    double duration_seconds() const noexcept { return static_cast<double>(size()) / sample_rate_hz; }

    /// Throws InputError when axes differ in length, the rate is not positive
    /// or any sample is non-finite.
    void validate() const;
};

enum class WearState { WakeWear, SleepWear, NonWear, Unknown };

std::string_view to_string(WearState s) noexcept;
/// Accepts wake/sleep/nonwear/unknown (case-insensitive, with the usual
/// "_wear" / " wear" spellings). Anything else throws InputError.
WearState parse_wear_state(std::string_view label);

/// Invalid-minute marker used by the NHANES minute files.
inline constexpr double kMimsSentinel = -0.01;

/// Negative MIMS values collapse onto the sentinel.
inline double normalize_mims(double v) noexcept { return v < 0.0 ? kMimsSentinel : v; }

struct MinuteRecord {
    std::string subject_id;
    int day_index = 1;
    int minute_of_day = 0;
    WearState wear = WearState::Unknown;
    bool quality_flagged = false;
    double mims = 0.0;
    std::optional<std::int64_t> ac;
    std::map<std::string, double> steps;

    /// log10(1 + mims); sentinel minutes contribute log10(1) = 0.
    double log10_mims() const;
    std::optional<double> log10_ac() const;

    bool operator==(const MinuteRecord&) const = default;
};

struct MinuteKey {
    std::string subject_id;
    int day_index;
    int minute_of_day;
    auto operator<=>(const MinuteKey&) const = default;
};

inline MinuteKey key_of(const MinuteRecord& m) { return {m.subject_id, m.day_index, m.minute_of_day}; }

/// Minute records with unique (subject, day, minute) keys, sorted by key.
class MinuteDataset {
public:
    MinuteDataset() = default;
    /// Throws InputError on a duplicate key or an out-of-range day/minute.
    explicit MinuteDataset(std::vector<MinuteRecord> records);

    std::span<const MinuteRecord> records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    /// Contiguous run of records belonging to one subject.
    std::vector<std::span<const MinuteRecord>> by_subject() const;

private:
    std::vector<MinuteRecord> records_;
};

/// Splits a subject's (key-sorted) minutes into per-day runs.
std::vector<std::span<const MinuteRecord>> split_days(std::span<const MinuteRecord> subject_minutes);

struct DaySummary {
    std::string subject_id;
    int day_index = 1;
    int n_valid_minutes = 0;
    int n_wake_minutes = 0;
    int n_nonzero_mims_minutes = 0;
    bool valid = false;
    std::map<std::string, double> totals;

    bool operator==(const DaySummary&) const = default;
};

struct SubjectSummary {
    std::string subject_id;
    int n_valid_days = 0;
    std::map<std::string, double> means;
    bool included = false;

    bool operator==(const SubjectSummary&) const = default;
};

// Covariate levels. The first enumerator of each is the reference level in
// regression designs.
enum class Sex { Male, Female };
enum class RaceEthnicity { NonHispanicWhite, NonHispanicBlack, MexicanAmerican, OtherHispanic, Other };
enum class Education { LessThanHighSchool, HighSchool, MoreThanHighSchool };
enum class BmiCategory { Normal, Underweight, Overweight, Obese };
enum class Alcohol { Never, Former, Moderate, Heavy, Missing };
enum class Smoking { Never, Former, Current };
enum class SelfRatedHealth { Excellent, VeryGood, Good, Fair, Poor };

std::string_view to_string(Sex v) noexcept;
std::string_view to_string(RaceEthnicity v) noexcept;
std::string_view to_string(Education v) noexcept;
std::string_view to_string(BmiCategory v) noexcept;
std::string_view to_string(Alcohol v) noexcept;
std::string_view to_string(Smoking v) noexcept;
std::string_view to_string(SelfRatedHealth v) noexcept;

Sex parse_sex(std::string_view s);
RaceEthnicity parse_race(std::string_view s);
Education parse_education(std::string_view s);
BmiCategory parse_bmi(std::string_view s);
Alcohol parse_alcohol(std::string_view s);
Smoking parse_smoking(std::string_view s);
SelfRatedHealth parse_health(std::string_view s);

/// Traditional predictors plus survey design fields. Optional members are
/// record-level missing; alcohol has an explicit Missing level instead.
struct SubjectCovariates {
    std::string subject_id;
    std::string wave;
    double age_years = 0.0;
    bool age_topcoded = false;
    std::optional<Sex> sex;
    std::optional<RaceEthnicity> race;
    std::optional<Education> education;
    std::optional<BmiCategory> bmi;
    std::optional<bool> diabetes, chd, chf, heart_attack, stroke, cancer, mobility_problem;
    Alcohol alcohol = Alcohol::Missing;
    std::optional<Smoking> smoking;
    std::optional<SelfRatedHealth> health;
    double survey_weight = 1.0;
    std::string stratum_id;
    std::string psu_id;

    /// True when every traditional predictor is present.
    bool complete() const noexcept;
    bool operator==(const SubjectCovariates&) const = default;
};

struct MortalityRecord {
    std::string subject_id;
    bool event = false;
    double followup_months = 0.0;
    bool operator==(const MortalityRecord&) const = default;
};

enum class QuantileRule { Type1, Type7 };

struct AnalysisConfig {
    int min_valid_minutes = 1368;
    int min_wake_minutes = 420;
    int min_nonzero_mims_minutes = 420;
    /// Count non-zero MIMS minutes among valid minutes only.
    bool nonzero_mims_valid_only = true;
    int min_valid_days = 3;
    double winsor_percentile = 0.99;
    QuantileRule winsor_rule = QuantileRule::Type1;
    double hr_step_increment = 500.0;
    int cv_folds = 10;
    int cv_repeats = 100;
    std::uint64_t rng_seed = 20240101;
    double age_min = 50.0;
    double age_max = 79.0;
    double loess_span = 0.75;
};

/// Applies key/value overrides on top of the defaults. Unknown keys and
/// out-of-range values throw ConfigError.
AnalysisConfig make_config(const std::map<std::string, std::string>& overrides = {});

/// Keys understood by make_config.
const std::vector<std::string>& analysis_config_keys();

}  // namespace stepforge
