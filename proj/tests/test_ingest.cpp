#include <doctest.h>
#include <zlib.h>

#include <cstring>

#include "stepforge/ingest.hpp"
#include "stepforge/text.hpp"
#include "support.hpp"

using namespace stepforge;
using namespace stepforge::ingest;
using testsupport::TempDir;
using testsupport::write_text;

TEST_CASE("raw: minimal file with header") {
    TempDir d("raw3");
    write_text(d / "s1.csv", "x,y,z\n0.1,0.2,0.9\n0,0,1\n-0.5,0.25,1.5\n");
    const auto r = read_raw_recording(d / "s1.csv", {});
    CHECK(r.subject_id == "s1");
    CHECK(r.sample_rate_hz == 80.0);
    REQUIRE(r.size() == 3);
    CHECK(r.x == std::vector<double>{0.1, 0.0, -0.5});
    CHECK(r.y == std::vector<double>{0.2, 0.0, 0.25});
    CHECK(r.z == std::vector<double>{0.9, 1.0, 1.5});
}

TEST_CASE("raw: malformed value reports its line") {
    TempDir d("rawna");
    write_text(d / "s.csv", "x,y,z\n0,0,1\nNA,0,1\n0,0,1\n");
    try {
        (void)read_raw_recording(d / "s.csv", {});
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    write_text(d / "s.csv", "x,y,z\n0,0,1\n0,0\n");
    CHECK_THROWS_AS((void)read_raw_recording(d / "s.csv", {}), ParseError);
}

TEST_CASE("raw: timestamps, cadence and order") {
    TempDir d("rawts");
    RawFileSchema s;
    s.time_column = TimeColumn::Timestamp;
    s.sample_rate_hz = 10.0;
    std::string body = "t,x,y,z\n";
    for (int i = 0; i < 30; ++i) body += text::format_double(i * 0.1) + ",0,0,1\n";
    write_text(d / "a.csv", body);
    auto r = read_raw_recording(d / "a.csv", s);
    CHECK(r.size() == 30);

    // ISO local timestamps fix the start.
    body = "time,x,y,z\n2012-03-04 10:00:00.000,0,0,1\n2012-03-04 10:00:00.100,0,0,1\n2012-03-04T10:00:00.200,0,0,1\n";
    write_text(d / "b.csv", body);
    r = read_raw_recording(d / "b.csv", s);
    using namespace std::chrono;
    CHECK(r.start == local_days{year{2012} / 3 / 4} + hours{10});

    // Declared rate off by 1% -> mismatch.
    s.sample_rate_hz = 10.1;
    CHECK_THROWS_AS((void)read_raw_recording(d / "a.csv", s), ParseError);
    // Within 1 part in 10^4 is fine.
    s.sample_rate_hz = 10.0005;
    CHECK_NOTHROW((void)read_raw_recording(d / "a.csv", s));

    s.sample_rate_hz = 10.0;
    write_text(d / "c.csv", "t,x,y,z\n0,0,0,1\n0.1,0,0,1\n0.05,0,0,1\n");
    CHECK_THROWS_AS((void)read_raw_recording(d / "c.csv", s), ParseError);

    s.time_column = TimeColumn::SampleIndex;
    write_text(d / "e.csv", "i,x,y,z\n0,0,0,1\n1,0,0,1\n3,0,0,1\n");
    CHECK_THROWS_AS((void)read_raw_recording(d / "e.csv", s), ParseError);
}

TEST_CASE("raw: chunking preserves order and count") {
    TempDir d("rawchunk");
    RawFileSchema s;
    s.sample_rate_hz = 10.0;
    s.chunk_seconds = 2.0;
    std::string body = "x,y,z\n";
    for (int i = 0; i < 45; ++i) body += std::to_string(i) + ",0,1\n";
    write_text(d / "a.csv", body);
    RawRecordingReader rd(d / "a.csv", s);
    std::vector<double> xs;
    std::size_t chunks = 0;
    while (auto c = rd.next_chunk()) {
        ++chunks;
        CHECK(c->size() <= 20);
        CHECK(c->start == s.start + std::chrono::milliseconds{static_cast<long long>(xs.size()) * 100});
        xs.insert(xs.end(), c->x.begin(), c->x.end());
    }
    CHECK(chunks == 3);
    CHECK(rd.samples_read() == 45);
    for (int i = 0; i < 45; ++i) CHECK(xs[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("raw: seven days at 80 Hz, gzip, one-hour chunks") {
    TempDir d("raw7d");
    const auto path = d / "week.csv.gz";
    const std::size_t rows = 7ull * 86400ull * 80ull;
    {
        gzFile gz = gzopen(path.c_str(), "wb1");
        REQUIRE(gz != nullptr);
        gzputs(gz, "x,y,z\n");
        std::string block;
        for (int i = 0; i < 80; ++i) block += "0." + std::to_string(i % 10) + ",-0.25,1\n";
        for (std::size_t r = 0; r < rows; r += 80) gzwrite(gz, block.data(), static_cast<unsigned>(block.size()));
        gzclose(gz);
    }
    RawRecordingReader rd(path, {});
    std::size_t chunks = 0, total = 0, max_chunk = 0;
    while (auto c = rd.next_chunk()) {
        ++chunks;
        total += c->size();
        max_chunk = std::max(max_chunk, c->size());
    }
    CHECK(total == 48'384'000);
    CHECK(total == rows);
    CHECK(chunks == 168);
    CHECK(max_chunk == 3600 * 80);
}

TEST_CASE("binary cache layout and round trip") {
    TempDir d("cache");
    TriaxialRecording r;
    r.subject_id = "c";
    r.sample_rate_hz = 50.0;
    testsupport::Gen g(3);
    for (int i = 0; i < 257; ++i) {
        r.x.push_back(g.normal());
        r.y.push_back(g.normal());
        r.z.push_back(1.0 + g.normal(0, 0.1));
    }
    write_binary_cache(r, d / "c.sfg1");
    const std::string raw = testsupport::read_text(d / "c.sfg1");
    REQUIRE(raw.size() == 8 + 3 * 4 * 257);
    CHECK(raw.substr(0, 4) == "SFG1");
    CHECK(static_cast<unsigned char>(raw[4]) == 1);  // 257 little-endian
    CHECK(static_cast<unsigned char>(raw[5]) == 1);
    float first_y;
    std::memcpy(&first_y, raw.data() + 8 + 4 * 257, 4);
    CHECK(first_y == static_cast<float>(r.y[0]));

    const auto back = read_binary_cache(d / "c.sfg1", "c", 50.0, r.start);
    auto rounded = r;
    round_to_cache_precision(rounded);
    CHECK(back.x == rounded.x);
    CHECK(back.y == rounded.y);
    CHECK(back.z == rounded.z);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(rounded.x[i] == static_cast<double>(static_cast<float>(r.x[i])));

    write_text(d / "bad.sfg1", "XXXX\x01\0\0\0");
    CHECK_THROWS_AS((void)read_binary_cache(d / "bad.sfg1", "c", 50.0, r.start), InputError);
    write_text(d / "short.sfg1", std::string("SFG1\x05\0\0\0", 8) + "abc");
    CHECK_THROWS_AS((void)read_binary_cache(d / "short.sfg1", "c", 50.0, r.start), InputError);
}

TEST_CASE("minute files") {
    TempDir d("min");
    write_text(d / "m.csv",
               "subject,day,minute,wear,flag,mims\n"
               "S1,1,0,unknown,0,3.2\n"
               "S1,1,1,wake,1,-0.01\n"
               "S1,1,2,sleep,0,-7\n");
    const auto ds = read_minute_file(d / "m.csv");
    REQUIRE(ds.size() == 3);
    const auto& m0 = ds.records()[0];
    CHECK(m0.wear == WearState::Unknown);
    CHECK_FALSE(m0.quality_flagged);
    CHECK(m0.mims == 3.2);
    CHECK(ds.records()[1].mims == kMimsSentinel);
    CHECK(ds.records()[1].quality_flagged);
    CHECK(ds.records()[2].mims == kMimsSentinel);

    write_text(d / "dup.csv", "subject,day,minute,wear,flag,mims\nS1,1,0,wake,0,1\nS1,1,0,wake,0,2\n");
    CHECK_THROWS_AS((void)read_minute_file(d / "dup.csv"), InputError);
    write_text(d / "lab.csv", "subject,day,minute,wear,flag,mims\nS1,1,0,drowsy,0,1\n");
    CHECK_THROWS_AS((void)read_minute_file(d / "lab.csv"), InputError);
    write_text(d / "col.csv", "subject,day,minute,flag,mims\nS1,1,0,0,1\n");
    CHECK_THROWS_AS((void)read_minute_file(d / "col.csv"), InputError);
}

TEST_CASE("minute records round-trip bit-exactly (property)") {
    testsupport::Gen g(11);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<MinuteRecord> recs;
        const bool with_ac = g.coin();
        const int n = g.integer(1, 200);
        for (int i = 0; i < n; ++i) {
            MinuteRecord m;
            m.subject_id = "P" + std::to_string(g.integer(1, 3));
            m.day_index = g.integer(1, 9);
            m.minute_of_day = g.integer(0, 1439);
            m.wear = static_cast<WearState>(g.integer(0, 3));
            m.quality_flagged = g.coin(0.1);
            m.mims = g.coin(0.1) ? kMimsSentinel : std::exp(g.normal(1.0, 2.0));
            if (with_ac) m.ac = g.integer(0, 100000);
            m.steps["peak_original"] = g.integer(0, 200);
            m.steps["spectral"] = g.uniform(0, 150);
            recs.push_back(m);
        }
        std::sort(recs.begin(), recs.end(), [](auto& a, auto& b) { return key_of(a) < key_of(b); });
        recs.erase(std::unique(recs.begin(), recs.end(), [](auto& a, auto& b) { return key_of(a) == key_of(b); }),
                   recs.end());
        const auto back = minutes_from_table(minutes_to_table(recs));
        REQUIRE(back.size() == recs.size());
        for (std::size_t i = 0; i < recs.size(); ++i) CHECK(back[i] == recs[i]);

        TempDir d("mrt");
        write_minute_file(recs, d / "x.csv");
        const auto ds = read_minute_file(d / "x.csv");
        CHECK(std::equal(ds.records().begin(), ds.records().end(), recs.begin(), recs.end()));
    }
}

TEST_CASE("covariates and mortality") {
    TempDir d("cov");
    const std::string header =
        "subject,wave,age,sex,race,education,bmi,diabetes,chd,chf,heart_attack,stroke,cancer,mobility_problem,"
        "alcohol,smoking,health,weight,stratum,psu\n";
    write_text(d / "c.csv", header +
                                "A,2011-2012,64,female,nh_black,hs,obese,1,0,0,0,0,0,1,,former,good,12000.5,3,1\n"
                                "B,2013-2014,85,male,other,,normal,0,0,0,0,0,0,0,heavy,never,excellent,500,4,2\n");
    const auto c = read_covariates(d / "c.csv");
    REQUIRE(c.size() == 2);
    CHECK(c[0].alcohol == Alcohol::Missing);
    CHECK(c[0].sex == Sex::Female);
    CHECK(c[0].diabetes);
    CHECK(c[0].survey_weight == 12000.5);
    CHECK(c[1].age_years == 80.0);
    CHECK(c[1].age_topcoded);
    CHECK_FALSE(c[1].education.has_value());
    CHECK_FALSE(c[1].complete());
    CHECK(c[0].complete());

    write_text(d / "w.csv", header + "A,2011-2012,64,female,nh_black,hs,obese,1,0,0,0,0,0,1,,former,good,0,3,1\n");
    CHECK_THROWS_AS((void)read_covariates(d / "w.csv"), InputError);

    write_text(d / "m.csv", "subject,event,followup_months\nA,1,81\nB,0,12.5\n");
    const auto m = read_mortality(d / "m.csv");
    REQUIRE(m.size() == 2);
    CHECK(m[0].event);
    CHECK(m[0].followup_months == 81.0);
    write_text(d / "neg.csv", "subject,event,followup_months\nA,1,-1\n");
    CHECK_THROWS_AS((void)read_mortality(d / "neg.csv"), InputError);

    // Round trips.
    CHECK(covariates_from_table(covariates_to_table(c)) == c);
    CHECK(mortality_from_table(mortality_to_table(m)) == m);
}

TEST_CASE("external step series") {
    TempDir d("ext");
    write_text(d / "a.csv", "subject,day,minute,steps\nS1,1,0,12\nS1,1,1,0\nS1,2,5,7.5\n");
    const auto s = import_external_steps(d / "a.csv", "actilife");
    CHECK(s.detector_name == "actilife");
    CHECK(s.steps.size() == 3);
    std::vector<MinuteRecord> mins(3);
    for (int i = 0; i < 3; ++i) {
        mins[i].subject_id = i == 2 ? "S2" : "S1";
        mins[i].minute_of_day = i;
    }
    merge_external_steps(mins, s);
    CHECK(mins[0].steps.at("actilife") == 12.0);
    CHECK(mins[1].steps.at("actilife") == 0.0);
    CHECK_FALSE(mins[2].steps.count("actilife"));

    write_text(d / "empty.csv", "");
    const auto e = import_external_steps(d / "empty.csv", "actilife");
    CHECK(e.steps.empty());
    auto before = mins;
    merge_external_steps(mins, e);
    CHECK(mins == before);

    write_text(d / "neg.csv", "day,minute,steps\n1,0,-3\n");
    CHECK_THROWS_AS((void)import_external_steps(d / "neg.csv", "actilife"), InputError);
    write_text(d / "range.csv", "day,minute,steps\n1,1440,3\n");
    CHECK_THROWS_AS((void)import_external_steps(d / "range.csv", "actilife"), InputError);
    CHECK_THROWS_AS((void)import_external_steps(d / "a.csv", "spectral"), InputError);
    CHECK_THROWS_AS((void)import_external_steps(d / "a.csv", "peak_original"), InputError);
}

TEST_CASE("write_table shapes") {
    TempDir d("tab");
    Table t;
    t.columns = {"a", "b"};
    write_table(t, d / "empty.csv");
    CHECK(testsupport::read_text(d / "empty.csv") == "a,b\n");
    t.rows = {{"1", "x,y"}, {"2", "q\"uote"}, {"3", ""}};
    write_table(t, d / "three.csv");
    const auto body = testsupport::read_text(d / "three.csv");
    CHECK(std::count(body.begin(), body.end(), '\n') == 4);
    CHECK(read_table(d / "three.csv") == t);
    CHECK_THROWS_AS(write_table(t, d / "no_such_dir" / "x.csv"), InputError);
}

TEST_CASE("summary tables round-trip") {
    std::vector<SubjectSummary> ss(3);
    std::vector<DaySummary> ds(3);
    testsupport::Gen g(5);
    for (int i = 0; i < 3; ++i) {
        ss[i].subject_id = "S" + std::to_string(i);
        ss[i].n_valid_days = i + 2;
        ss[i].included = i > 0;
        ss[i].means = {{"steps_template", g.uniform(0, 1e4)}, {"mims", g.uniform(0, 2e4)}, {"log10_mims", 1.0 / 3.0}};
        ds[i].subject_id = "S0";
        ds[i].day_index = i + 1;
        ds[i].n_valid_minutes = 1368 + i;
        ds[i].n_wake_minutes = 419 + i;
        ds[i].n_nonzero_mims_minutes = 600;
        ds[i].valid = i == 2;
        ds[i].totals = {{"steps_spectral", g.uniform(0, 1e4)}, {"mims", 0.1 + 0.2}};
    }
    CHECK(subject_summaries_from_table(subject_summaries_to_table(ss)) == ss);
    CHECK(day_summaries_from_table(day_summaries_to_table(ds)) == ds);
    TempDir d("sumrt");
    write_table(subject_summaries_to_table(ss), d / "s.csv");
    CHECK(subject_summaries_from_table(read_table(d / "s.csv")) == ss);
}
