#include "stepforge/validity.hpp"

#include <algorithm>
#include <map>

#include "stepforge/dsp.hpp"

namespace stepforge::validity {

bool effective_wear(WearState s) noexcept { return s != WearState::NonWear; }

std::vector<bool> impute_unknown_as_wear(std::span<const MinuteRecord> minutes) {
    std::vector<bool> out(minutes.size());
    for (std::size_t i = 0; i < minutes.size(); ++i) out[i] = effective_wear(minutes[i].wear);
    return out;
}

bool is_valid_minute(const MinuteRecord& m) noexcept { return !m.quality_flagged && effective_wear(m.wear); }

namespace {

std::size_t state_index(WearState s) {
    return static_cast<std::size_t>(std::find(kTransitionOrder.begin(), kTransitionOrder.end(), s) -
                                    kTransitionOrder.begin());
}

bool follows(const MinuteRecord& prev, const MinuteRecord& next) {
    if (next.day_index == prev.day_index) return next.minute_of_day == prev.minute_of_day + 1;
    return next.day_index == prev.day_index + 1 && prev.minute_of_day == 1439 && next.minute_of_day == 0;
}

}  // namespace

TransitionMatrix unknown_bout_transition_matrix(std::span<const MinuteRecord> minutes) {
    std::map<std::string, std::vector<const MinuteRecord*>> by_subject;
    for (const auto& m : minutes) by_subject[m.subject_id].push_back(&m);

    std::array<std::array<double, 4>, 4> counts{};
    TransitionMatrix tm;
    for (auto& [sid, seq] : by_subject) {
        std::sort(seq.begin(), seq.end(), [](const MinuteRecord* a, const MinuteRecord* b) {
            return std::pair{a->day_index, a->minute_of_day} < std::pair{b->day_index, b->minute_of_day};
        });
        std::size_t i = 0;
        while (i < seq.size()) {
            if (seq[i]->wear != WearState::Unknown) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < seq.size() && seq[j + 1]->wear == WearState::Unknown && follows(*seq[j], *seq[j + 1])) ++j;
            const bool has_prev = i > 0 && follows(*seq[i - 1], *seq[i]);
            const bool has_next = j + 1 < seq.size() && follows(*seq[j], *seq[j + 1]);
            if (has_prev && has_next) {
                counts[state_index(seq[j + 1]->wear)][state_index(seq[i - 1]->wear)] += 1.0;
                ++tm.n_bouts;
            }
            i = j + 1;
        }
    }
    if (tm.n_bouts > 0) {
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 4; ++c) tm.proportion[r][c] = counts[r][c] / static_cast<double>(tm.n_bouts);
        }
    }
    return tm;
}

DaySummary is_valid_day(std::span<const MinuteRecord> day_minutes, const AnalysisConfig& cfg) {
    DaySummary d;
    if (!day_minutes.empty()) {
        d.subject_id = day_minutes.front().subject_id;
        d.day_index = day_minutes.front().day_index;
    }
    std::vector<const MinuteRecord*> ordered;
    for (const auto& m : day_minutes) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(),
              [](const MinuteRecord* a, const MinuteRecord* b) { return a->minute_of_day < b->minute_of_day; });

    bool any_ac = false;
    std::map<std::string, std::vector<double>> steps;
    std::vector<double> mims, log_mims, ac, log_ac;
    for (const auto* m : ordered) {
        for (const auto& [name, v] : m->steps) steps.try_emplace(name);
        any_ac = any_ac || m->ac.has_value();
    }
    for (const auto* m : ordered) {
        const bool valid = is_valid_minute(*m);
        const bool nonzero = m->mims > 0.0;
        if (valid || !cfg.nonzero_mims_valid_only) d.n_nonzero_mims_minutes += nonzero;
        if (!valid) continue;
        ++d.n_valid_minutes;
        d.n_wake_minutes += m->wear == WearState::WakeWear;
        for (auto& [name, vals] : steps) {
            auto it = m->steps.find(name);
            vals.push_back(it == m->steps.end() ? 0.0 : it->second);
        }
        mims.push_back(std::max(m->mims, 0.0));
        log_mims.push_back(m->log10_mims());
        if (any_ac) {
            ac.push_back(m->ac ? static_cast<double>(*m->ac) : 0.0);
            log_ac.push_back(m->log10_ac().value_or(0.0));
        }
    }
    d.valid = d.n_valid_minutes >= cfg.min_valid_minutes && d.n_wake_minutes >= cfg.min_wake_minutes &&
              d.n_nonzero_mims_minutes >= cfg.min_nonzero_mims_minutes;
    for (const auto& [name, vals] : steps) d.totals["steps_" + name] = dsp::compensated_sum(vals);
    d.totals["mims"] = dsp::compensated_sum(mims);
    d.totals["log10_mims"] = dsp::compensated_sum(log_mims);
    if (any_ac) {
        d.totals["ac"] = dsp::compensated_sum(ac);
        d.totals["log10_ac"] = dsp::compensated_sum(log_ac);
    }
    return d;
}

SubjectSummary summarize_subject(std::span<const DaySummary> days, const AnalysisConfig& cfg) {
    SubjectSummary s;
    if (!days.empty()) s.subject_id = days.front().subject_id;
    std::vector<const DaySummary*> valid;
    for (const auto& d : days) {
        if (d.valid) valid.push_back(&d);
    }
    std::sort(valid.begin(), valid.end(),
              [](const DaySummary* a, const DaySummary* b) { return a->day_index < b->day_index; });
    s.n_valid_days = static_cast<int>(valid.size());
    s.included = s.n_valid_days >= cfg.min_valid_days;
    std::map<std::string, std::vector<double>> values;
    for (const auto* d : valid) {
        for (const auto& [name, v] : d->totals) values[name].push_back(v);
    }
    for (const auto& [name, vals] : values) s.means[name] = dsp::compensated_sum(vals) / static_cast<double>(vals.size());
    return s;
}

std::vector<SubjectValidity> summarize_dataset(const MinuteDataset& data, const AnalysisConfig& cfg) {
    std::vector<SubjectValidity> out;
    for (auto subject : data.by_subject()) {
        SubjectValidity sv;
        for (auto day : split_days(subject)) sv.days.push_back(is_valid_day(day, cfg));
        sv.summary = summarize_subject(sv.days, cfg);
        sv.summary.subject_id = subject.front().subject_id;
        out.push_back(std::move(sv));
    }
    return out;
}

Table validity_report(std::span<const SubjectValidity> subjects, const AnalysisConfig& cfg) {
    Table t;
    t.columns = {"subject", "n_days", "n_valid_days", "included", "reason"};
    for (const auto& s : subjects) {
        std::string reason;
        if (!s.summary.included) {
            reason = s.summary.n_valid_days == 0 ? "no valid days"
                                                 : "fewer than " + std::to_string(cfg.min_valid_days) + " valid days";
        }
        t.rows.push_back({s.summary.subject_id, std::to_string(s.days.size()), std::to_string(s.summary.n_valid_days),
                          s.summary.included ? "1" : "0", reason});
    }
    return t;
}

}  // namespace stepforge::validity
