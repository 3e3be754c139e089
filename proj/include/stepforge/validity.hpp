#pragma once

// Valid minutes, valid days, day totals and subject means.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "stepforge/model.hpp"
#include "stepforge/table.hpp"

namespace stepforge::validity {

/// Effective wear per minute: Unknown counts as wear, NonWear does not.
bool effective_wear(WearState s) noexcept;
std::vector<bool> impute_unknown_as_wear(std::span<const MinuteRecord> minutes);

/// Unflagged and effectively worn.
bool is_valid_minute(const MinuteRecord& m) noexcept;

/// Row/column order of the transition matrix.
inline constexpr std::array<WearState, 4> kTransitionOrder = {WearState::Unknown, WearState::NonWear,
                                                              WearState::SleepWear, WearState::WakeWear};

struct TransitionMatrix {
    /// proportion[following][preceding], indices per kTransitionOrder.
    std::array<std::array<double, 4>, 4> proportion{};
    std::size_t n_bouts = 0;
};

/// Joint distribution of (preceding, following) states around maximal Unknown
/// bouts. Bouts touching a subject's first/last minute or a time gap are skipped.
TransitionMatrix unknown_bout_transition_matrix(std::span<const MinuteRecord> minutes);

/// Day summary of one subject-day; `valid` applies all three thresholds.
/// Totals use valid minutes only; the sentinel MIMS value contributes 0.
DaySummary is_valid_day(std::span<const MinuteRecord> day_minutes, const AnalysisConfig& cfg);

/// Means of day totals over valid days (in day order).
SubjectSummary summarize_subject(std::span<const DaySummary> days, const AnalysisConfig& cfg);

struct SubjectValidity {
    std::vector<DaySummary> days;
    SubjectSummary summary;
};

std::vector<SubjectValidity> summarize_dataset(const MinuteDataset& data, const AnalysisConfig& cfg);

/// subject, n_days, n_valid_days, included, reason
Table validity_report(std::span<const SubjectValidity> subjects, const AnalysisConfig& cfg);

}  // namespace stepforge::validity
