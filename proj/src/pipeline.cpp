#include "stepforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "stepforge/design.hpp"
#include "stepforge/dsp.hpp"
#include "stepforge/ingest.hpp"
#include "stepforge/parallel.hpp"
#include "stepforge/simulate.hpp"
#include "stepforge/stats.hpp"
#include "stepforge/summaries.hpp"
#include "stepforge/text.hpp"
#include "stepforge/validity.hpp"

namespace stepforge::pipeline {

namespace fs = std::filesystem;
using text::format_double;

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::string stem_of(const fs::path& p) {
    std::string name = p.filename().string();
    auto dot = name.find('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

std::vector<fs::path> list_files(const fs::path& dir, const std::vector<std::string>& suffixes) {
    if (!fs::is_directory(dir)) throw InputError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string name = text::lower(e.path().filename().string());
        if (std::any_of(suffixes.begin(), suffixes.end(), [&](const std::string& s) { return has_suffix(name, s); }))
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

const std::vector<std::string> kTableSuffixes = {".csv", ".csv.gz", ".txt", ".txt.gz", ".tsv", ".gz"};

std::string na_or(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

std::chrono::milliseconds minutes_cast(std::size_t k) {
    return std::chrono::milliseconds{static_cast<long long>(k) * 60000};
}

void write_out(RunReport& rep, const Table& t, const fs::path& path) {
    write_table(t, path);
    rep.outputs.push_back(path);
}

// ---------------------------------------------------------------------------
// steps

struct WearEntry {
    WearState wear;
    bool flag;
};

std::map<std::pair<int, int>, WearEntry> read_wear_file(const fs::path& path) {
    const Table t = read_table(path);
    std::map<std::pair<int, int>, WearEntry> out;
    if (t.columns.empty()) return out;
    const std::size_t cd = t.column("day"), cm = t.column("minute"), cw = t.column("wear");
    const auto cf = t.find_column("flag");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        auto day = text::parse_int(text::trim(t.rows[r][cd]));
        auto minute = text::parse_int(text::trim(t.rows[r][cm]));
        const std::size_t line = r < t.lines.size() ? t.lines[r] : r + 2;
        if (!day || !minute) throw ParseError(t.source, line, "malformed day/minute");
        WearEntry e{WearState::Unknown, false};
        try {
            e.wear = parse_wear_state(t.rows[r][cw]);
        } catch (const InputError& err) {
            throw ParseError(t.source, line, err.what());
        }
        if (cf) {
            const std::string f(text::trim(t.rows[r][*cf]));
            e.flag = f == "1" || text::lower(f) == "true";
        }
        out[{static_cast<int>(*day), static_cast<int>(*minute)}] = e;
    }
    return out;
}

struct SubjectOutcome {
    std::string subject;
    std::vector<std::string> failures;
    std::vector<std::pair<std::string, double>> timings;
    std::string note;
};

TriaxialRecording load_recording(const fs::path& file, const std::string& sid, const StepsOptions& opt,
                                 std::string& note) {
    const fs::path cache = opt.out_dir / "cache" / (sid + ".sfg1");
    const fs::path meta = opt.out_dir / "cache" / (sid + ".meta");
    if (opt.use_cache && fs::exists(cache) && fs::exists(meta)) {
        const Table m = read_table(meta);
        if (m.rows.size() == 1) {
            auto start_ms = text::parse_int(m.rows[0][m.column("start_ms")]);
            auto rate = text::parse_double(m.rows[0][m.column("rate_hz")]);
            if (start_ms && rate) {
                note = "cache";
                return ingest::read_binary_cache(cache, sid, *rate, LocalTime{std::chrono::milliseconds{*start_ms}});
            }
        }
    }
    ingest::RawFileSchema schema = opt.config.raw;
    schema.subject_id = sid;
    TriaxialRecording rec = ingest::read_raw_recording(file, schema);
    ingest::round_to_cache_precision(rec);
    if (opt.use_cache) {
        ingest::write_binary_cache(rec, cache);
        Table m;
        m.columns = {"start_ms", "rate_hz"};
        m.rows.push_back({std::to_string(rec.start.time_since_epoch().count()), format_double(rec.sample_rate_hz)});
        write_table(m, meta);
    }
    note = "raw";
    return rec;
}

SubjectOutcome process_subject(const fs::path& file, const StepsOptions& opt,
                               const std::vector<detectors::DetectorEntry>& registry) {
    SubjectOutcome res;
    const std::string sid = stem_of(file);
    res.subject = sid;
    try {
        TriaxialRecording rec = load_recording(file, sid, opt, res.note);
        rec.validate();
        const auto t0 = std::chrono::steady_clock::now();
        const auto vm = dsp::vector_magnitude(rec);
        const double vm_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto detected = detectors::run_detectors(vm, registry);

        const auto& sp = opt.config.summaries;
        if (sp.ac.epoch_seconds != 60.0 || sp.mims.epoch_seconds != 60.0)
            throw ConfigError("minute output needs 60 s AC and MIMS epochs");
        const auto ac = summaries::activity_counts(rec, sp.ac);
        const auto mims = summaries::mims_units(rec, sp.mims);
        const std::size_t n_min = std::min(ac.size(), mims.size());

        std::map<std::string, std::vector<double>> steps;
        for (const auto& [name, r] : detected) {
            res.timings.emplace_back(name, vm_seconds + r.seconds);
            if (!r.series) {
                res.failures.push_back(sid + ": detector " + name + " failed: " + r.error);
                continue;
            }
            auto per_min = detectors::to_minutes(r.series->per_second);
            per_min.resize(n_min, 0.0);
            steps[name] = std::move(per_min);
        }

        std::map<std::pair<int, int>, WearEntry> wear;
        if (opt.wear_dir) {
            for (const auto& suf : {".csv", ".csv.gz"}) {
                const fs::path p = *opt.wear_dir / (sid + suf);
                if (fs::exists(p)) {
                    wear = read_wear_file(p);
                    break;
                }
            }
        }

        using namespace std::chrono;
        const auto first_day = floor<days>(rec.start);
        std::vector<MinuteRecord> minutes(n_min);
        for (std::size_t k = 0; k < n_min; ++k) {
            const LocalTime t = rec.start + minutes_cast(k);
            const auto day = floor<days>(t);
            auto& m = minutes[k];
            m.subject_id = sid;
            m.day_index = static_cast<int>((day - first_day).count()) + 1;
            m.minute_of_day = static_cast<int>(floor<std::chrono::minutes>(t - day).count());
            if (auto it = wear.find({m.day_index, m.minute_of_day}); it != wear.end()) {
                m.wear = it->second.wear;
                m.quality_flagged = it->second.flag;
            }
        }
        std::vector<std::int64_t> ac_n(ac.begin(), ac.begin() + static_cast<std::ptrdiff_t>(n_min));
        std::vector<double> mims_n(mims.begin(), mims.begin() + static_cast<std::ptrdiff_t>(n_min));
        const auto enriched = summaries::attach_minute_summaries(std::move(minutes), ac_n, mims_n, steps);
        ingest::write_minute_file(enriched, opt.out_dir / "minutes" / (sid + ".csv"));
    } catch (const std::exception& e) {
        res.failures.push_back(sid + ": " + e.what());
    }
    return res;
}

}  // namespace

RunReport run_steps(const StepsOptions& opt, std::ostream& log) {
    const auto files = list_files(opt.raw_dir, kTableSuffixes);
    if (files.empty()) throw InputError("no subjects in '" + opt.raw_dir.string() + "'");
    const auto registry = detectors::select_detectors(opt.config.detectors, opt.config.detector_names);
    if (registry.empty()) throw ConfigError("no detectors selected");
    fs::create_directories(opt.out_dir / "minutes");
    if (opt.use_cache) fs::create_directories(opt.out_dir / "cache");

    std::vector<SubjectOutcome> outcomes(files.size());
    parallel_for(files.size(), opt.jobs, [&](std::size_t i) { outcomes[i] = process_subject(files[i], opt, registry); });

    RunReport rep;
    Table timing;
    timing.columns = {"subject", "detector", "seconds"};
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        log << "[steps] " << (i + 1) << "/" << outcomes.size() << " " << o.subject << " (" << o.note << ")";
        for (const auto& [d, s] : o.timings) {
            log << " " << d << "=" << text::format_fixed(s, 3) << "s";
            timing.rows.push_back({o.subject, d, format_double(s)});
        }
        log << (o.failures.empty() ? "" : " FAILED") << "\n";
        for (const auto& f : o.failures) rep.failures.push_back(f);
        rep.outputs.push_back(opt.out_dir / "minutes" / (o.subject + ".csv"));
    }
    write_table(timing, opt.out_dir / "timing.csv");
    rep.exit_code = rep.failures.empty() ? 0 : 1;
    return rep;
}

// ---------------------------------------------------------------------------
// analyze

std::string output_suffix(const AnalysisConfig& cfg) {
    return cfg.min_valid_days == 3 ? std::string() : "_mvd" + std::to_string(cfg.min_valid_days);
}

namespace {

MinuteDataset read_minutes(const fs::path& p) {
    std::vector<fs::path> files;
    if (fs::is_directory(p)) files = list_files(p, kTableSuffixes);
    else files.push_back(p);
    if (files.empty()) throw InputError("no minute files in '" + p.string() + "'");
    std::vector<MinuteRecord> all;
    for (const auto& f : files) {
        auto recs = ingest::minutes_from_table(read_table(f));
        all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    return MinuteDataset(std::move(all));
}

std::vector<std::string> activity_variables(const std::vector<validity::SubjectValidity>& subjects) {
    std::set<std::string> steps;
    bool has_mims = false, has_ac = false;
    for (const auto& s : subjects) {
        for (const auto& [k, v] : s.summary.means) {
            if (k.rfind("steps_", 0) == 0) steps.insert(k);
            has_mims = has_mims || k == "mims";
            has_ac = has_ac || k == "ac";
        }
    }
    std::vector<std::string> out(steps.begin(), steps.end());
    if (has_mims) out.push_back("mims");
    if (has_ac) out.push_back("ac");
    return out;
}

struct Joined {
    const SubjectSummary* summary;
    const SubjectCovariates* cov;
};

Table table3(const std::vector<Joined>& rows, const std::vector<std::string>& vars, Table& diff) {
    Table t;
    t.columns = {"variable", "wave", "age_group", "n", "mean", "sd", "se"};
    diff.columns = {"variable", "age_group", "wave_a", "mean_a", "wave_b", "mean_b", "percent_diff"};
    std::set<std::string> wave_set;
    for (const auto& r : rows) wave_set.insert(r.cov->wave);
    const std::vector<std::string> waves(wave_set.begin(), wave_set.end());
    const std::vector<std::pair<std::string, double>> groups = {{"All adults", -1.0}, {"Age 50+", 50.0}};
    for (const auto& v : vars) {
        for (const auto& [group, min_age] : groups) {
            std::vector<double> wave_means;
            for (const auto& w : waves) {
                std::vector<double> x, wt;
                std::vector<std::string> strata, psu;
                for (const auto& r : rows) {
                    if (r.cov->wave != w || r.cov->age_years < min_age) continue;
                    auto it = r.summary->means.find(v);
                    if (it == r.summary->means.end()) continue;
                    x.push_back(it->second);
                    wt.push_back(r.cov->survey_weight);
                    strata.push_back(r.cov->stratum_id);
                    psu.push_back(r.cov->stratum_id + "/" + r.cov->psu_id);
                }
                if (x.empty()) {
                    wave_means.push_back(NAN);
                    continue;
                }
                const auto ms = stats::weighted_mean_se(x, wt, strata, psu);
                double sw = 0.0, ss = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    sw += wt[i];
                    ss += wt[i] * (x[i] - ms.mean) * (x[i] - ms.mean);
                }
                t.rows.push_back({v, w, group, std::to_string(x.size()), format_double(ms.mean),
                                  format_double(std::sqrt(ss / sw)), format_double(ms.se)});
                wave_means.push_back(ms.mean);
            }
            if (waves.size() == 2 && wave_means[0] > 0.0 && wave_means[1] > 0.0) {
                diff.rows.push_back({v, group, waves[0], format_double(wave_means[0]), waves[1],
                                     format_double(wave_means[1]),
                                     format_double(stats::between_wave_percent_diff(wave_means[0], wave_means[1]))});
            }
        }
    }
    return t;
}

Table fig1(const std::vector<Joined>& rows, const std::vector<std::string>& vars, const AnalysisConfig& cfg,
           RunReport& rep) {
    Table t;
    t.columns = {"variable", "age", "n", "mean", "se", "smoothed", "lo", "hi", "percent_change"};
    for (const auto& v : vars) {
        std::map<int, std::vector<const Joined*>> by_age;
        for (const auto& r : rows) {
            if (r.cov->age_topcoded || !r.summary->means.count(v)) continue;
            by_age[static_cast<int>(std::floor(r.cov->age_years))].push_back(&r);
        }
        std::vector<double> ages, means, ses;
        std::vector<int> counts;
        for (const auto& [age, group] : by_age) {
            std::vector<double> x, w;
            std::vector<std::string> strata, psu;
            for (const auto* r : group) {
                x.push_back(r->summary->means.at(v));
                w.push_back(r->cov->survey_weight);
                strata.push_back(r->cov->stratum_id);
                psu.push_back(r->cov->stratum_id + "/" + r->cov->psu_id);
            }
            const auto ms = stats::weighted_mean_se(x, w, strata, psu);
            ages.push_back(age);
            means.push_back(ms.mean);
            ses.push_back(ms.se);
            counts.push_back(static_cast<int>(x.size()));
        }
        std::vector<stats::CurvePoint> curve;
        try {
            curve = stats::local_weighted_smooth(ages, means, ses, cfg.loess_span, ages);
        } catch (const InputError& e) {
            rep.warnings.push_back("fig1 " + v + ": " + e.what());
            continue;
        }
        for (std::size_t i = 0; i < curve.size(); ++i) {
            std::string pct = "NA";
            if (i > 0 && ages[i] == ages[i - 1] + 1.0 && curve[i - 1].estimate != 0.0)
                pct = format_double(100.0 * (curve[i].estimate - curve[i - 1].estimate) / curve[i - 1].estimate);
            t.rows.push_back({v, format_double(ages[i]), std::to_string(counts[i]), format_double(means[i]),
                              format_double(ses[i]), format_double(curve[i].estimate), format_double(curve[i].lo),
                              format_double(curve[i].hi), pct});
        }
    }
    return t;
}

std::string hr_cell(const survival::HazardRatio& h) { return format_double(h.hr); }

}  // namespace

RunReport run_analyze(const AnalyzeOptions& opt, std::ostream& log) {
    const AnalysisConfig& cfg = opt.config.analysis;
    const std::string sfx = output_suffix(cfg);
    fs::create_directories(opt.out_dir);
    RunReport rep;

    const MinuteDataset data = read_minutes(opt.minutes);
    const auto subjects_spans = data.by_subject();
    std::vector<validity::SubjectValidity> subjects(subjects_spans.size());
    parallel_for(subjects_spans.size(), opt.jobs, [&](std::size_t i) {
        auto& sv = subjects[i];
        for (auto day : split_days(subjects_spans[i])) sv.days.push_back(validity::is_valid_day(day, cfg));
        sv.summary = validity::summarize_subject(sv.days, cfg);
        sv.summary.subject_id = subjects_spans[i].front().subject_id;
    });
    log << "[analyze] " << subjects.size() << " subjects, " << data.size() << " minutes\n";

    write_out(rep, validity::validity_report(subjects, cfg), opt.out_dir / ("validity_report" + sfx + ".csv"));
    std::vector<SubjectSummary> summaries;
    std::vector<DaySummary> days;
    for (const auto& s : subjects) {
        summaries.push_back(s.summary);
        days.insert(days.end(), s.days.begin(), s.days.end());
    }
    write_out(rep, ingest::subject_summaries_to_table(summaries), opt.out_dir / ("subject_summaries" + sfx + ".csv"));
    write_out(rep, ingest::day_summaries_to_table(days), opt.out_dir / ("day_summaries" + sfx + ".csv"));

    {
        const auto tm = validity::unknown_bout_transition_matrix(data.records());
        Table t;
        t.columns = {"following", "preceding", "proportion", "n_bouts"};
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 4; ++c)
                t.rows.push_back({std::string(to_string(validity::kTransitionOrder[r])),
                                  std::string(to_string(validity::kTransitionOrder[c])), format_double(tm.proportion[r][c]),
                                  std::to_string(tm.n_bouts)});
        }
        write_out(rep, t, opt.out_dir / "wear_transitions.csv");
    }

    const auto vars = activity_variables(subjects);
    std::vector<std::string> steps_vars;
    for (const auto& v : vars) {
        if (v.rfind("steps_", 0) == 0) steps_vars.push_back(v);
    }

    // Correlations between subject means (included subjects, unweighted).
    {
        std::vector<SubjectSummary> included;
        for (const auto& s : summaries) {
            if (s.included) included.push_back(s);
        }
        const auto sp = stats::correlation_matrix(included, vars, stats::CorrelationMethod::Spearman);
        const auto pe = stats::correlation_matrix(included, vars, stats::CorrelationMethod::Pearson);
        Table t;
        t.columns = {"variable_a", "variable_b", "n", "spearman", "pearson"};
        for (std::size_t a = 0; a < vars.size(); ++a) {
            for (std::size_t b = 0; b < vars.size(); ++b)
                t.rows.push_back({vars[a], vars[b], std::to_string(sp.n_pairs[a][b]), format_double(sp.values[a][b]),
                                  format_double(pe.values[a][b])});
        }
        write_out(rep, t, opt.out_dir / ("fig2_correlations" + sfx + ".csv"));
    }

    if (!opt.covariates) {
        rep.warnings.push_back("no covariate file: weighted tables and survival analysis skipped");
    } else {
        const auto covs = ingest::read_covariates(*opt.covariates);
        std::map<std::string, const SubjectCovariates*> cov_by_id;
        for (const auto& c : covs) {
            if (!cov_by_id.emplace(c.subject_id, &c).second)
                throw InputError("duplicate subject '" + c.subject_id + "' in covariates");
        }
        std::vector<Joined> joined;
        std::set<std::string> with_minutes;
        for (const auto& s : summaries) {
            with_minutes.insert(s.subject_id);
            auto it = cov_by_id.find(s.subject_id);
            if (it == cov_by_id.end()) {
                rep.warnings.push_back("subject " + s.subject_id + " has minutes but no covariates");
                continue;
            }
            if (s.included) joined.push_back({&s, it->second});
        }
        for (const auto& c : covs) {
            if (!with_minutes.count(c.subject_id))
                rep.warnings.push_back("subject " + c.subject_id + " has covariates but no minutes");
        }

        Table diff;
        write_out(rep, table3(joined, vars, diff), opt.out_dir / ("table3_means" + sfx + ".csv"));
        write_out(rep, diff, opt.out_dir / ("table3_wave_diff" + sfx + ".csv"));
        write_out(rep, fig1(joined, steps_vars, cfg, rep), opt.out_dir / ("fig1_curves" + sfx + ".csv"));

        if (!opt.mortality || !fs::exists(*opt.mortality)) {
            rep.warnings.push_back("no mortality file: survival tables skipped");
        } else if (steps_vars.empty() || std::find(vars.begin(), vars.end(), "mims") == vars.end()) {
            rep.warnings.push_back("survival tables need step and MIMS variables; skipped");
        } else {
            const auto morts = ingest::read_mortality(*opt.mortality);
            std::map<std::string, const MortalityRecord*> mort_by_id;
            for (const auto& m : morts) mort_by_id.emplace(m.subject_id, &m);
            std::vector<design::AnalysisSubject> linked;
            for (const auto& j : joined) {
                auto it = mort_by_id.find(j.summary->subject_id);
                if (it == mort_by_id.end()) {
                    rep.warnings.push_back("subject " + j.summary->subject_id + " has no mortality record");
                    continue;
                }
                linked.push_back({*j.cov, *it->second, *j.summary});
            }
            try {
                const auto sd = design::build_survival_data(linked, vars, cfg);
                log << "[analyze] survival: " << sd.rows() << " subjects, " << sd.n_events() << " events\n";
                Table uni;
                uni.columns = {"variable", "cv_concordance"};
                std::vector<std::string> uni_vars = vars;
                for (const auto& u : design::univariate_cvc(sd, uni_vars, cfg, opt.jobs))
                    uni.rows.push_back({u.variable, format_double(u.cv_concordance)});
                {
                    const auto trad = sd.select(design::traditional_columns());
                    const double c = survival::repeated_cv_concordance(trad, design::cv_options(cfg, opt.jobs)).mean;
                    uni.rows.push_back({"traditional", format_double(c)});
                }
                write_out(rep, uni, opt.out_dir / ("univariate_cvc" + sfx + ".csv"));

                const auto suite = design::model_suite(sd, steps_vars, "mims", cfg, opt.jobs);
                Table t4;
                t4.columns = {"model", "steps_variable", "hr_per_increment", "hr_lo", "hr_hi", "p_value", "cv_concordance"};
                for (const auto& row : suite.rows) {
                    const bool has = row.steps_hr.has_value();
                    t4.rows.push_back({row.model, has ? suite.best_steps : "NA",
                                       has ? hr_cell(*row.steps_hr) : "NA", has ? format_double(row.steps_hr->lo) : "NA",
                                       has ? format_double(row.steps_hr->hi) : "NA", na_or(row.steps_p),
                                       format_double(row.cv_concordance)});
                    if (!row.converged) rep.warnings.push_back("model " + row.model + " did not converge");
                }
                write_out(rep, t4, opt.out_dir / ("table4_models" + sfx + ".csv"));

                Table t5;
                t5.columns = {"variable", "hr_raw", "lo_raw", "hi_raw", "hr_scaled", "lo_scaled", "hi_scaled",
                              "sd_thousands"};
                for (const auto& h : design::hazard_ratio_table(sd, steps_vars, cfg))
                    t5.rows.push_back({h.variable, format_double(h.raw.hr), format_double(h.raw.lo),
                                       format_double(h.raw.hi), format_double(h.scaled.hr), format_double(h.scaled.lo),
                                       format_double(h.scaled.hi), format_double(h.sd_thousands)});
                write_out(rep, t5, opt.out_dir / ("table5_hr" + sfx + ".csv"));
            } catch (const InputError& e) {
                rep.failures.push_back(std::string("survival analysis: ") + e.what());
            }
        }
    }
    for (const auto& w : rep.warnings) log << "[analyze] warning: " << w << "\n";
    rep.exit_code = rep.failures.empty() ? 0 : 1;
    return rep;
}

// ---------------------------------------------------------------------------
// bench

std::vector<BenchRow> run_bench(const BenchOptions& opt, std::ostream& log) {
    if (opt.detectors.empty()) throw ConfigError("bench needs at least one detector");
    if (opt.n_subjects < 1 || !(opt.days > 0.0)) throw ConfigError("bench needs subjects >= 1 and days > 0");
    const auto registry = detectors::select_detectors(opt.params, opt.detectors);
    std::vector<double> seconds(registry.size(), 0.0);
    for (int s = 0; s < opt.n_subjects; ++s) {
        std::vector<simulate::GaitSegment> recipe;
        Rng rng(opt.seed + static_cast<std::uint64_t>(s));
        const int hours = static_cast<int>(std::ceil(opt.days * 24.0));
        double left = opt.days * 86400.0;
        for (int h = 0; h < hours && left > 0.0; ++h) {
            const double walk = std::min(left, 600.0);
            recipe.push_back({simulate::GaitSegment::Kind::Walk, walk, 1.6 + 0.5 * rng.uniform(), 0.3, 0.03});
            left -= walk;
            if (left <= 0.0) break;
            const double rest = std::min(left, 3000.0);
            recipe.push_back({simulate::GaitSegment::Kind::Rest, rest, 2.0, 0.0, 0.01});
            left -= rest;
        }
        const auto rec = simulate::gen_gait(recipe, opt.rate_hz, opt.seed * 7919 + static_cast<std::uint64_t>(s),
                                            "bench" + std::to_string(s + 1)).recording;
        for (std::size_t d = 0; d < registry.size(); ++d) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto vm = dsp::vector_magnitude(rec);
            const auto series = registry[d].run(vm);
            seconds[d] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            log << "[bench] subject " << (s + 1) << " " << registry[d].name << " steps=" << format_double(series.total())
                << "\n";
        }
    }
    std::vector<BenchRow> rows;
    Table t;
    t.columns = {"detector", "subjects", "days", "rate_hz", "seconds", "minutes_per_10_subjects", "estimated_cohort_days"};
    for (std::size_t d = 0; d < registry.size(); ++d) {
        const double per10 = seconds[d] / 60.0 * 10.0 / static_cast<double>(opt.n_subjects);
        const double cohort_days = per10 / 10.0 * 14693.0 / 1440.0;
        rows.push_back({registry[d].name, seconds[d], per10, cohort_days});
        t.rows.push_back({registry[d].name, std::to_string(opt.n_subjects), format_double(opt.days),
                          format_double(opt.rate_hz), format_double(seconds[d]), format_double(per10),
                          format_double(cohort_days)});
    }
    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        write_table(t, opt.out_dir / "bench.csv");
    }
    return rows;
}

// ---------------------------------------------------------------------------
// simulate

RunReport run_simulate(const SimulateOptions& opt, std::ostream& log) {
    RunReport rep;
    if (opt.kind == "study") {
        simulate::StudySpec spec;
        spec.n_subjects = opt.n_subjects;
        spec.days = opt.days;
        const auto st = simulate::gen_study(spec, opt.seed);
        fs::create_directories(opt.out_dir / "minutes");
        const MinuteDataset ds(st.minutes);
        for (auto subj : ds.by_subject()) {
            const fs::path p = opt.out_dir / "minutes" / (subj.front().subject_id + ".csv");
            ingest::write_minute_file(subj, p);
            rep.outputs.push_back(p);
        }
        write_out(rep, ingest::covariates_to_table(st.covariates), opt.out_dir / "covariates.csv");
        write_out(rep, ingest::mortality_to_table(st.mortality), opt.out_dir / "mortality.csv");
        log << "[simulate] study: " << opt.n_subjects << " subjects x " << opt.days << " days\n";
    } else if (opt.kind == "raw") {
        fs::create_directories(opt.out_dir / "raw");
        for (int s = 0; s < opt.n_subjects; ++s) {
            Rng rng(opt.seed + static_cast<std::uint64_t>(s));
            std::vector<simulate::GaitSegment> recipe;
            for (double t = 0.0; t < opt.minutes * 60.0; t += 60.0) {
                const double len = std::min(60.0, opt.minutes * 60.0 - t);
                const bool walk = static_cast<int>(t / 60.0) % 2 == 0;
                recipe.push_back({walk ? simulate::GaitSegment::Kind::Walk : simulate::GaitSegment::Kind::Rest, len,
                                  1.7 + 0.4 * rng.uniform(), walk ? 0.4 : 0.0, 0.02});
            }
            std::string digits = std::to_string(s + 1);
            const std::string sid = "R" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
            const auto g = simulate::gen_gait(recipe, opt.rate_hz, opt.seed * 31 + static_cast<std::uint64_t>(s), sid);
            const fs::path p = opt.out_dir / "raw" / (sid + ".csv");
            std::ofstream os(p, std::ios::binary | std::ios::trunc);
            if (!os) throw InputError("cannot write '" + p.string() + "'");
            os << "x,y,z\n";
            const auto& r = g.recording;
            for (std::size_t i = 0; i < r.size(); ++i)
                os << text::format_fixed(r.x[i], 5) << ',' << text::format_fixed(r.y[i], 5) << ','
                   << text::format_fixed(r.z[i], 5) << '\n';
            if (!os) throw InputError("write failed for '" + p.string() + "'");
            rep.outputs.push_back(p);
        }
        log << "[simulate] raw: " << opt.n_subjects << " recordings x " << opt.minutes << " min\n";
    } else {
        throw ConfigError("unknown simulate kind '" + opt.kind + "' (expected study or raw)");
    }
    return rep;
}

}  // namespace stepforge::pipeline
