#include "stepforge/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>

#include "stepforge/text.hpp"

namespace stepforge {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

void TriaxialRecording::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
        throw InputError("recording '" + subject_id + "': sample rate must be positive");
    if (x.size() != y.size() || x.size() != z.size())
        throw InputError("recording '" + subject_id + "': axes have different lengths");
    for (const auto* axis : {&x, &y, &z}) {
        for (double v : *axis) {
            if (!std::isfinite(v)) throw InputError("recording '" + subject_id + "': non-finite sample");
        }
    }
}

std::string_view to_string(WearState s) noexcept {
    switch (s) {
        case WearState::WakeWear: return "wake";
        case WearState::SleepWear: return "sleep";
        case WearState::NonWear: return "nonwear";
        case WearState::Unknown: return "unknown";
    }
    return "unknown";
}

WearState parse_wear_state(std::string_view label) {
    std::string s = text::lower(text::trim(label));
    std::erase_if(s, [](char c) { return c == ' ' || c == '_' || c == '-'; });
    if (s == "wake" || s == "wakewear") return WearState::WakeWear;
    if (s == "sleep" || s == "sleepwear") return WearState::SleepWear;
    if (s == "nonwear") return WearState::NonWear;
    if (s == "unknown") return WearState::Unknown;
    throw InputError("unknown wear state '" + std::string(label) + "'");
}

double MinuteRecord::log10_mims() const { return std::log10(1.0 + std::max(mims, 0.0)); }

std::optional<double> MinuteRecord::log10_ac() const {
    if (!ac) return std::nullopt;
    return std::log10(1.0 + static_cast<double>(*ac));
}

MinuteDataset::MinuteDataset(std::vector<MinuteRecord> records) : records_(std::move(records)) {
    for (const auto& r : records_) {
        if (r.day_index < 1)
            throw InputError("subject '" + r.subject_id + "': day index must be >= 1");
        if (r.minute_of_day < 0 || r.minute_of_day > 1439)
            throw InputError("subject '" + r.subject_id + "': minute of day outside [0,1439]");
    }
    std::stable_sort(records_.begin(), records_.end(),
                     [](const MinuteRecord& a, const MinuteRecord& b) { return key_of(a) < key_of(b); });
    auto dup = std::adjacent_find(records_.begin(), records_.end(), [](const MinuteRecord& a, const MinuteRecord& b) {
        return key_of(a) == key_of(b);
    });
    if (dup != records_.end()) {
        std::ostringstream os;
        os << "duplicate minute key (subject '" << dup->subject_id << "', day " << dup->day_index << ", minute "
           << dup->minute_of_day << ")";
        throw InputError(os.str());
    }
}

std::vector<std::span<const MinuteRecord>> MinuteDataset::by_subject() const {
    std::vector<std::span<const MinuteRecord>> out;
    std::span<const MinuteRecord> all(records_);
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= all.size(); ++i) {
        if (i == all.size() || all[i].subject_id != all[begin].subject_id) {
            out.push_back(all.subspan(begin, i - begin));
            begin = i;
        }
    }
    return out;
}

std::vector<std::span<const MinuteRecord>> split_days(std::span<const MinuteRecord> subject_minutes) {
    std::vector<std::span<const MinuteRecord>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= subject_minutes.size(); ++i) {
        if (i == subject_minutes.size() || subject_minutes[i].day_index != subject_minutes[begin].day_index) {
            out.push_back(subject_minutes.subspan(begin, i - begin));
            begin = i;
        }
    }
    return out;
}

namespace {

template <class E, std::size_t N>
E parse_level(std::string_view raw, const char* what, const std::pair<const char*, E> (&table)[N]) {
    std::string s = text::lower(text::trim(raw));
    for (char& c : s) {
        if (c == ' ' || c == '-') c = '_';
    }
    for (const auto& [label, value] : table) {
        if (s == label) return value;
    }
    throw InputError(std::string("unknown ") + what + " level '" + std::string(raw) + "'");
}

template <class E, std::size_t N>
std::string_view level_name(E v, const std::pair<const char*, E> (&table)[N]) noexcept {
    for (const auto& [label, value] : table) {
        if (value == v) return label;
    }
    return "?";
}

// First entry for each value is the canonical spelling used on output.
constexpr std::pair<const char*, Sex> kSex[] = {{"male", Sex::Male}, {"female", Sex::Female}, {"1", Sex::Male},
                                                {"2", Sex::Female}};
constexpr std::pair<const char*, RaceEthnicity> kRace[] = {
    {"nh_white", RaceEthnicity::NonHispanicWhite},     {"nh_black", RaceEthnicity::NonHispanicBlack},
    {"mexican_american", RaceEthnicity::MexicanAmerican}, {"other_hispanic", RaceEthnicity::OtherHispanic},
    {"other", RaceEthnicity::Other},
};
constexpr std::pair<const char*, Education> kEducation[] = {
    {"less_than_hs", Education::LessThanHighSchool},
    {"hs", Education::HighSchool},
    {"more_than_hs", Education::MoreThanHighSchool},
};
constexpr std::pair<const char*, BmiCategory> kBmi[] = {
    {"normal", BmiCategory::Normal},
    {"underweight", BmiCategory::Underweight},
    {"overweight", BmiCategory::Overweight},
    {"obese", BmiCategory::Obese},
};
constexpr std::pair<const char*, Alcohol> kAlcohol[] = {
    {"never", Alcohol::Never},     {"former", Alcohol::Former},   {"moderate", Alcohol::Moderate},
    {"heavy", Alcohol::Heavy},     {"missing", Alcohol::Missing}, {"missing_alcohol", Alcohol::Missing},
};
constexpr std::pair<const char*, Smoking> kSmoking[] = {
    {"never", Smoking::Never}, {"former", Smoking::Former}, {"current", Smoking::Current}};
constexpr std::pair<const char*, SelfRatedHealth> kHealth[] = {
    {"excellent", SelfRatedHealth::Excellent}, {"very_good", SelfRatedHealth::VeryGood},
    {"good", SelfRatedHealth::Good},           {"fair", SelfRatedHealth::Fair},
    {"poor", SelfRatedHealth::Poor},
};

}  // namespace

std::string_view to_string(Sex v) noexcept { return level_name(v, kSex); }
std::string_view to_string(RaceEthnicity v) noexcept { return level_name(v, kRace); }
std::string_view to_string(Education v) noexcept { return level_name(v, kEducation); }
std::string_view to_string(BmiCategory v) noexcept { return level_name(v, kBmi); }
std::string_view to_string(Alcohol v) noexcept { return level_name(v, kAlcohol); }
std::string_view to_string(Smoking v) noexcept { return level_name(v, kSmoking); }
std::string_view to_string(SelfRatedHealth v) noexcept { return level_name(v, kHealth); }

Sex parse_sex(std::string_view s) { return parse_level(s, "sex", kSex); }
RaceEthnicity parse_race(std::string_view s) { return parse_level(s, "race/ethnicity", kRace); }
Education parse_education(std::string_view s) { return parse_level(s, "education", kEducation); }
BmiCategory parse_bmi(std::string_view s) { return parse_level(s, "BMI category", kBmi); }
Alcohol parse_alcohol(std::string_view s) { return parse_level(s, "alcohol", kAlcohol); }
Smoking parse_smoking(std::string_view s) { return parse_level(s, "smoking", kSmoking); }
SelfRatedHealth parse_health(std::string_view s) { return parse_level(s, "self-reported health", kHealth); }

bool SubjectCovariates::complete() const noexcept {
    return sex && race && education && bmi && diabetes && chd && chf && heart_attack && stroke && cancer &&
           mobility_problem && smoking && health;
}

// ---------------------------------------------------------------------------
// Analysis configuration

namespace {

struct ConfigField {
    const char* key;
    std::function<void(AnalysisConfig&, std::string_view)> set;
};

int parse_int_in(std::string_view key, std::string_view v, long long lo, long long hi) {
    auto n = text::parse_int(text::trim(v));
    if (!n) throw ConfigError("config '" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
    if (*n < lo || *n > hi)
        throw ConfigError("config '" + std::string(key) + "': value " + std::to_string(*n) + " out of range [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(*n);
}

double parse_real_in(std::string_view key, std::string_view v, double lo, double hi, bool open_lo, bool open_hi) {
    auto d = text::parse_double(text::trim(v));
    if (!d || !std::isfinite(*d))
        throw ConfigError("config '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
    bool ok = (open_lo ? *d > lo : *d >= lo) && (open_hi ? *d < hi : *d <= hi);
    if (!ok) throw ConfigError("config '" + std::string(key) + "': value " + std::string(v) + " out of range");
    return *d;
}

bool parse_bool(std::string_view key, std::string_view v) {
    std::string s = text::lower(text::trim(v));
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("config '" + std::string(key) + "': expected a boolean, got '" + std::string(v) + "'");
}

const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = {
        {"min_valid_minutes",
         [](AnalysisConfig& c, std::string_view v) { c.min_valid_minutes = parse_int_in("min_valid_minutes", v, 1, 1440); }},
        {"min_wake_minutes",
         [](AnalysisConfig& c, std::string_view v) { c.min_wake_minutes = parse_int_in("min_wake_minutes", v, 1, 1440); }},
        {"min_nonzero_mims_minutes",
         [](AnalysisConfig& c, std::string_view v) {
             c.min_nonzero_mims_minutes = parse_int_in("min_nonzero_mims_minutes", v, 1, 1440);
         }},
        {"nonzero_mims_valid_only",
         [](AnalysisConfig& c, std::string_view v) { c.nonzero_mims_valid_only = parse_bool("nonzero_mims_valid_only", v); }},
        {"min_valid_days",
         [](AnalysisConfig& c, std::string_view v) { c.min_valid_days = parse_int_in("min_valid_days", v, 1, 366); }},
        {"winsor_percentile",
         [](AnalysisConfig& c, std::string_view v) {
             c.winsor_percentile = parse_real_in("winsor_percentile", v, 0.0, 1.0, true, true);
         }},
        {"winsor_rule",
         [](AnalysisConfig& c, std::string_view v) {
             std::string s = text::lower(text::trim(v));
             if (s == "type1" || s == "1") c.winsor_rule = QuantileRule::Type1;
             else if (s == "type7" || s == "7") c.winsor_rule = QuantileRule::Type7;
             else throw ConfigError("config 'winsor_rule': expected type1 or type7");
         }},
        {"hr_step_increment",
         [](AnalysisConfig& c, std::string_view v) {
             c.hr_step_increment = parse_real_in("hr_step_increment", v, 0.0, 1e9, true, false);
         }},
        {"cv_folds", [](AnalysisConfig& c, std::string_view v) { c.cv_folds = parse_int_in("cv_folds", v, 2, 1000); }},
        {"cv_repeats",
         [](AnalysisConfig& c, std::string_view v) { c.cv_repeats = parse_int_in("cv_repeats", v, 1, 100000); }},
        {"rng_seed",
         [](AnalysisConfig& c, std::string_view v) {
             std::string_view t = text::trim(v);
             std::uint64_t seed = 0;
             auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), seed);
             if (ec != std::errc{} || p != t.data() + t.size())
                 throw ConfigError("config 'rng_seed': expected an unsigned 64-bit integer");
             c.rng_seed = seed;
         }},
        {"age_min", [](AnalysisConfig& c, std::string_view v) { c.age_min = parse_real_in("age_min", v, 0, 130, false, false); }},
        {"age_max", [](AnalysisConfig& c, std::string_view v) { c.age_max = parse_real_in("age_max", v, 0, 130, false, false); }},
        {"loess_span",
         [](AnalysisConfig& c, std::string_view v) { c.loess_span = parse_real_in("loess_span", v, 0.0, 1.0, true, false); }},
    };
    return fields;
}

}  // namespace

const std::vector<std::string>& analysis_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : config_fields()) k.emplace_back(f.key);
        return k;
    }();
    return keys;
}

AnalysisConfig make_config(const std::map<std::string, std::string>& overrides) {
    AnalysisConfig cfg;
    for (const auto& [key, value] : overrides) {
        const auto& fields = config_fields();
        auto it = std::find_if(fields.begin(), fields.end(), [&](const ConfigField& f) { return key == f.key; });
        if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
        it->set(cfg, value);
    }
    if (cfg.age_min > cfg.age_max) throw ConfigError("config: age_min exceeds age_max");
    return cfg;
}

}  // namespace stepforge
