#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "stepforge/config.hpp"
#include "stepforge/design.hpp"
#include "stepforge/ingest.hpp"
#include "stepforge/pipeline.hpp"
#include "stepforge/table.hpp"
#include "support.hpp"

using namespace stepforge;
using namespace stepforge::pipeline;
namespace fs = std::filesystem;
using testsupport::read_text;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

config::PipelineConfig quick_config() {
    auto c = config::build_pipeline_config({{"cv_repeats", "3"}});
    return c;
}

fs::path simulate_raw(const fs::path& out, int n) {
    SimulateOptions s;
    s.kind = "raw";
    s.n_subjects = n;
    s.minutes = 3;
    s.rate_hz = 80;
    s.out_dir = out;
    std::ostringstream log;
    REQUIRE(run_simulate(s, log).exit_code == 0);
    return out / "raw";
}

fs::path simulate_study(const fs::path& out, int n, std::uint64_t seed = 1) {
    SimulateOptions s;
    s.kind = "study";
    s.n_subjects = n;
    s.days = 7;
    s.seed = seed;
    s.out_dir = out;
    std::ostringstream log;
    REQUIRE(run_simulate(s, log).exit_code == 0);
    return out;
}

}  // namespace

TEST_CASE("steps: two subjects, four detectors") {
    TempDir dir("steps");
    const auto raw = simulate_raw(dir.path(), 2);
    StepsOptions opt;
    opt.raw_dir = raw;
    opt.out_dir = dir / "out";
    opt.config = quick_config();
    std::ostringstream log;
    const auto rep = run_steps(opt, log);
    CHECK(rep.exit_code == 0);
    CHECK(rep.failures.empty());

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "out" / "minutes")) files.push_back(e.path());
    REQUIRE(files.size() == 2);
    for (const auto& f : files) {
        const auto t = read_table(f);
        int step_cols = 0;
        for (const auto& c : t.columns) step_cols += c.rfind("steps_", 0) == 0;
        CHECK(step_cols == 4);
        CHECK(t.find_column("mims"));
        CHECK(t.find_column("ac"));
        CHECK(t.rows.size() == 3);
        // Walking minutes carry steps.
        CHECK(std::stod(t.rows[0][t.column("steps_peak_original")]) > 50);
    }
    const auto timing = read_table(dir / "out" / "timing.csv");
    CHECK(timing.rows.size() == 8);
    CHECK(log.str().find("R0001") != std::string::npos);

    // A rerun served from the binary cache is byte-identical.
    CHECK(fs::exists(dir / "out" / "cache"));
    const std::string before = read_text(files[0]);
    const auto rep2 = run_steps(opt, log);
    CHECK(rep2.exit_code == 0);
    CHECK(read_text(files[0]) == before);
    opt.use_cache = false;
    run_steps(opt, log);
    CHECK(read_text(files[0]) == before);

    // Thread count does not change outputs.
    opt.jobs = 3;
    run_steps(opt, log);
    CHECK(read_text(files[0]) == before);
}

TEST_CASE("steps: failures are isolated") {
    TempDir dir("steps_fail");
    const auto raw = simulate_raw(dir.path(), 2);
    write_text(raw / "BAD.csv", "x,y,z\n1,2\n");
    StepsOptions opt;
    opt.raw_dir = raw;
    opt.out_dir = dir / "out";
    opt.config = quick_config();
    std::ostringstream log;
    const auto rep = run_steps(opt, log);
    CHECK(rep.exit_code == 1);
    REQUIRE(rep.failures.size() == 1);
    CHECK(rep.failures[0].find("BAD") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "minutes" / "R0001.csv"));
    CHECK(fs::exists(dir / "out" / "minutes" / "R0002.csv"));
}

TEST_CASE("steps: empty input") {
    TempDir dir("steps_empty");
    fs::create_directories(dir / "raw");
    StepsOptions opt;
    opt.raw_dir = dir / "raw";
    opt.out_dir = dir / "out";
    std::ostringstream log;
    try {
        (void)run_steps(opt, log);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("no subjects") != std::string::npos);
    }
    opt.raw_dir = dir / "missing";
    CHECK_THROWS_AS((void)run_steps(opt, log), InputError);
}

TEST_CASE("analyze: synthetic cohort of 200") {
    TempDir dir("analyze");
    const auto in = simulate_study(dir.path(), 200);
    AnalyzeOptions opt;
    opt.minutes = in / "minutes";
    opt.covariates = in / "covariates.csv";
    opt.mortality = in / "mortality.csv";
    opt.out_dir = dir / "out";
    opt.config = quick_config();
    std::ostringstream log;
    const auto rep = run_analyze(opt, log);
    INFO(log.str());
    CHECK(rep.exit_code == 0);

    const auto out = dir / "out";
    for (const char* name : {"validity_report.csv", "subject_summaries.csv", "day_summaries.csv",
                             "fig2_correlations.csv", "wear_transitions.csv", "table3_means.csv",
                             "table3_wave_diff.csv", "fig1_curves.csv", "univariate_cvc.csv", "table4_models.csv",
                             "table5_hr.csv"})
        CHECK_MESSAGE(fs::exists(out / name), name);

    const auto validity = read_table(out / "validity_report.csv");
    CHECK(validity.rows.size() == 200);
    const auto subjects = read_table(out / "subject_summaries.csv");
    CHECK(subjects.rows.size() == 200);
    const auto days = read_table(out / "day_summaries.csv");
    CHECK(days.rows.size() == 200u * 7);
    std::size_t included = 0;
    for (const auto& r : validity.rows) included += r[validity.column("included")] == "1";
    CHECK(included > 100);

    // Six activity variables: four detectors, mims and ac.
    const auto fig2 = read_table(out / "fig2_correlations.csv");
    CHECK(fig2.rows.size() == 6u * 6);
    const auto t3 = read_table(out / "table3_means.csv");
    CHECK(t3.rows.size() == 6u * 2 * 2);
    const auto t3d = read_table(out / "table3_wave_diff.csv");
    CHECK(t3d.rows.size() == 6u * 2);
    const auto uni = read_table(out / "univariate_cvc.csv");
    CHECK(uni.rows.size() == 6 + 1);
    const auto t4 = read_table(out / "table4_models.csv");
    CHECK(t4.rows.size() == 4);
    const auto t5 = read_table(out / "table5_hr.csv");
    CHECK(t5.rows.size() == 4);
    for (const auto& r : t5.rows) {
        const double hr = std::stod(r[t5.column("hr_raw")]);
        CHECK(hr > 0);
        CHECK(std::stod(r[t5.column("lo_raw")]) <= hr);
    }

    // Same inputs twice, and with more threads: identical bytes.
    const std::string t4_bytes = read_text(out / "table4_models.csv"), fig1_bytes = read_text(out / "fig1_curves.csv");
    opt.out_dir = dir / "again";
    opt.jobs = 4;
    CHECK(run_analyze(opt, log).exit_code == 0);
    CHECK(read_text(dir / "again" / "table4_models.csv") == t4_bytes);
    CHECK(read_text(dir / "again" / "fig1_curves.csv") == fig1_bytes);

    // Sensitivity run writes suffixed files.
    opt.config.analysis.min_valid_days = 1;
    opt.out_dir = out;
    CHECK(output_suffix(opt.config.analysis) == "_mvd1");
    CHECK(run_analyze(opt, log).exit_code == 0);
    CHECK(fs::exists(out / "validity_report_mvd1.csv"));
    CHECK(fs::exists(out / "table4_models_mvd1.csv"));
    std::size_t included1 = 0;
    const auto v1 = read_table(out / "validity_report_mvd1.csv");
    for (const auto& r : v1.rows) included1 += r[v1.column("included")] == "1";
    CHECK(included1 >= included);

    // Without mortality the survival tables are skipped with a warning.
    opt.config.analysis.min_valid_days = 3;
    opt.out_dir = dir / "nomort";
    opt.mortality = dir / "absent.csv";
    const auto partial = run_analyze(opt, log);
    CHECK(partial.exit_code == 0);
    CHECK(fs::exists(dir / "nomort" / "table3_means.csv"));
    CHECK_FALSE(fs::exists(dir / "nomort" / "table4_models.csv"));
    bool warned = false;
    for (const auto& w : partial.warnings) warned = warned || w.find("mortality") != std::string::npos;
    CHECK(warned);
}

TEST_CASE("analyze: join mismatches are warnings") {
    TempDir dir("join");
    const auto in = simulate_study(dir.path(), 30, 4);
    auto covs = ingest::read_covariates(in / "covariates.csv");
    covs.erase(covs.begin());
    SubjectCovariates extra = covs.back();
    extra.subject_id = "ZZZZ";
    covs.push_back(extra);
    write_table(ingest::covariates_to_table(covs), in / "covariates.csv");
    AnalyzeOptions opt;
    opt.minutes = in / "minutes";
    opt.covariates = in / "covariates.csv";
    opt.out_dir = dir / "out";
    opt.config = quick_config();
    std::ostringstream log;
    const auto rep = run_analyze(opt, log);
    CHECK(rep.exit_code == 0);
    int mismatches = 0;
    for (const auto& w : rep.warnings) mismatches += w.find("S0001") != std::string::npos || w.find("ZZZZ") != std::string::npos;
    CHECK(mismatches == 2);
}

TEST_CASE("bench") {
    TempDir dir("bench");
    BenchOptions opt;
    opt.n_subjects = 1;
    opt.days = 0.05;
    opt.detectors = ingest::builtin_detector_names();
    opt.out_dir = dir.path();
    std::ostringstream log;
    const auto rows = run_bench(opt, log);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK(r.seconds >= 0);
        CHECK(r.minutes_per_10_subjects >= 0);
    }
    CHECK(read_table(dir / "bench.csv").rows.size() == 4);
    opt.detectors.clear();
    CHECK_THROWS_AS((void)run_bench(opt, log), ConfigError);
    opt.detectors = {"nope"};
    CHECK_THROWS_AS((void)run_bench(opt, log), ConfigError);
}

TEST_CASE("simulate: unknown kind") {
    TempDir dir("sim");
    SimulateOptions s;
    s.kind = "other";
    s.out_dir = dir.path();
    std::ostringstream log;
    CHECK_THROWS_AS((void)run_simulate(s, log), ConfigError);
}

TEST_CASE("configuration files and environment") {
    const auto kv = config::parse_config("# comment\nmin_valid_days = 1\n\n peak.k_neighbors=3  # trailing\n");
    CHECK(kv.at("min_valid_days") == "1");
    CHECK(kv.at("peak.k_neighbors") == "3");
    try {
        (void)config::parse_config("a = 1\nbroken line\n", "cfg");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    const auto pc = config::build_pipeline_config(kv);
    CHECK(pc.analysis.min_valid_days == 1);
    CHECK_THROWS_AS((void)config::build_pipeline_config({{"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS((void)config::build_pipeline_config({{"min_valid_days", "x"}}), ConfigError);

    ::setenv("STEPFORGE_MIN_WAKE_MINUTES", "300", 1);
    ::setenv("STEPFORGE_MIMS__BAND_HIGH_HZ", "4.5", 1);
    ::setenv("STEPFORGE_NHANES_DIR", "/nowhere", 1);
    const auto env = config::environment_overrides();
    CHECK(env.at("min_wake_minutes") == "300");
    CHECK(env.at("mims.band_high_hz") == "4.5");
    CHECK_FALSE(env.count("nhanes_dir"));
    const auto merged = config::merge({kv, env, {{"min_valid_days", "2"}}});
    const auto cfg = config::build_pipeline_config(merged);
    CHECK(cfg.analysis.min_wake_minutes == 300);
    CHECK(cfg.analysis.min_valid_days == 2);
    CHECK(cfg.summaries.mims.band_high_hz == 4.5);
    ::unsetenv("STEPFORGE_MIN_WAKE_MINUTES");
    ::unsetenv("STEPFORGE_MIMS__BAND_HIGH_HZ");
    ::unsetenv("STEPFORGE_NHANES_DIR");

    TempDir dir("cfg");
    write_text(dir / "a.cfg", "cv_folds = 5\n");
    CHECK(config::read_config_file(dir / "a.cfg").at("cv_folds") == "5");
    CHECK_THROWS_AS((void)config::read_config_file(dir / "none.cfg"), ConfigError);
}

TEST_CASE("design rows") {
    SubjectCovariates c;
    c.subject_id = "A";
    c.age_years = 61;
    c.sex = Sex::Female;
    c.race = RaceEthnicity::MexicanAmerican;
    c.education = Education::LessThanHighSchool;
    c.bmi = BmiCategory::Obese;
    c.diabetes = true;
    c.chd = c.chf = c.heart_attack = c.stroke = c.cancer = c.mobility_problem = false;
    c.alcohol = Alcohol::Missing;
    c.smoking = Smoking::Current;
    c.health = SelfRatedHealth::Excellent;
    const auto row = design::traditional_row(c);
    const auto& cols = design::traditional_columns();
    REQUIRE(row.size() == cols.size());
    std::map<std::string, double> named;
    for (std::size_t i = 0; i < cols.size(); ++i) named[cols[i]] = row[i];
    CHECK(named["age"] == 61);
    CHECK(named["sex_female"] == 1);
    CHECK(named["race_mexican_american"] == 1);
    CHECK(named["race_nh_black"] == 0);
    CHECK(named["education_hs"] == 0);
    CHECK(named["education_more_than_hs"] == 0);
    CHECK(named["bmi_obese"] == 1);
    CHECK(named["diabetes"] == 1);
    CHECK(named["alcohol_missing"] == 1);
    CHECK(named["smoking_current"] == 1);
    double health = 0;
    for (const char* h : {"health_very_good", "health_good", "health_fair", "health_poor"}) health += named[h];
    CHECK(health == 0);

    c.smoking.reset();
    CHECK_THROWS_AS((void)design::traditional_row(c), InputError);
}
