#include <doctest.h>

#include <cmath>

#include "stepforge/model.hpp"
#include "support.hpp"

using namespace stepforge;

TEST_CASE("make_config defaults") {
    const auto c = make_config();
    CHECK(c.min_valid_minutes == 1368);
    CHECK(c.min_wake_minutes == 420);
    CHECK(c.min_nonzero_mims_minutes == 420);
    CHECK(c.min_valid_days == 3);
    CHECK(c.winsor_percentile == 0.99);
    CHECK(c.hr_step_increment == 500.0);
    CHECK(c.cv_folds == 10);
    CHECK(c.cv_repeats == 100);
    CHECK(c.age_min == 50.0);
    CHECK(c.age_max == 79.0);
}

TEST_CASE("make_config overrides and rejects") {
    CHECK(make_config({{"min_valid_days", "1"}}).min_valid_days == 1);
    CHECK(make_config({{"rng_seed", "18446744073709551615"}}).rng_seed == 18446744073709551615ull);
    CHECK_THROWS_AS(make_config({{"cv_folds", "1"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"no_such_key", "1"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"winsor_percentile", "1.0"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"winsor_percentile", "0"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"min_valid_minutes", "0"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"min_valid_days", "two"}}), ConfigError);
    for (const auto& k : analysis_config_keys()) CHECK_FALSE(k.empty());
}

TEST_CASE("wear state labels") {
    CHECK(parse_wear_state("unknown") == WearState::Unknown);
    CHECK(parse_wear_state("Wake Wear") == WearState::WakeWear);
    CHECK(parse_wear_state("sleep_wear") == WearState::SleepWear);
    CHECK(parse_wear_state("NONWEAR") == WearState::NonWear);
    CHECK_THROWS_AS(parse_wear_state("asleep-ish"), InputError);
    for (auto s : {WearState::WakeWear, WearState::SleepWear, WearState::NonWear, WearState::Unknown})
        CHECK(parse_wear_state(to_string(s)) == s);
}

TEST_CASE("mims sentinel") {
    CHECK(normalize_mims(-3.0) == kMimsSentinel);
    CHECK(normalize_mims(-0.01) == kMimsSentinel);
    CHECK(normalize_mims(0.0) == 0.0);
    CHECK(normalize_mims(2.5) == 2.5);
    MinuteRecord m;
    m.mims = kMimsSentinel;
    CHECK(m.log10_mims() == 0.0);
    m.mims = 3.2;
    CHECK(m.log10_mims() == doctest::Approx(std::log10(4.2)).epsilon(1e-15));
    CHECK_FALSE(m.log10_ac().has_value());
    m.ac = 99;
    CHECK(*m.log10_ac() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("recording invariants") {
    TriaxialRecording r;
    r.x = {0.0, 1.0};
    r.y = {0.0, 1.0};
    r.z = {1.0, 1.0};
    CHECK_NOTHROW(r.validate());
    CHECK(r.duration_seconds() == doctest::Approx(2.0 / 80.0));
    r.z.pop_back();
    CHECK_THROWS_AS(r.validate(), InputError);
    r.z.push_back(NAN);
    CHECK_THROWS_AS(r.validate(), InputError);
    r.z.back() = 1.0;
    r.sample_rate_hz = 0.0;
    CHECK_THROWS_AS(r.validate(), InputError);
}

namespace {
MinuteRecord minute(const std::string& s, int d, int m) {
    MinuteRecord r;
    r.subject_id = s;
    r.day_index = d;
    r.minute_of_day = m;
    return r;
}
}  // namespace

TEST_CASE("minute dataset keys") {
    CHECK_THROWS_AS(MinuteDataset({minute("a", 1, 5), minute("b", 1, 5), minute("a", 1, 5)}), InputError);
    CHECK_THROWS_AS(MinuteDataset({minute("a", 0, 5)}), InputError);
    CHECK_THROWS_AS(MinuteDataset({minute("a", 1, 1440)}), InputError);
    CHECK_THROWS_AS(MinuteDataset({minute("a", 1, -1)}), InputError);

    // Sorted by (subject, day, minute) whatever the input order.
    testsupport::Gen g(7);
    std::vector<MinuteRecord> recs;
    for (const char* s : {"b", "a", "c"}) {
        for (int d = 1; d <= 3; ++d) {
            for (int m = 0; m < 20; ++m) recs.push_back(minute(s, d, m * 7));
        }
    }
    std::shuffle(recs.begin(), recs.end(), g.eng);
    const MinuteDataset ds(recs);
    CHECK(ds.size() == recs.size());
    for (std::size_t i = 1; i < ds.size(); ++i) CHECK(key_of(ds.records()[i - 1]) < key_of(ds.records()[i]));
    const auto subjects = ds.by_subject();
    REQUIRE(subjects.size() == 3);
    CHECK(subjects[0].front().subject_id == "a");
    CHECK(subjects[2].size() == 60);
    const auto days = split_days(subjects[1]);
    REQUIRE(days.size() == 3);
    for (const auto& d : days) {
        CHECK(d.size() == 20);
        for (const auto& m : d) CHECK(m.day_index == d.front().day_index);
    }
}

TEST_CASE("ParseError carries the line") {
    const ParseError e("f.csv", 17, "bad");
    CHECK(e.line() == 17);
    CHECK(std::string(e.what()).find("17") != std::string::npos);
}
