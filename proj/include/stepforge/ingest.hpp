#pragma once

// Readers and writers for raw recordings, minute files, covariate and
// mortality tables, externally computed step series and report tables.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stepforge/model.hpp"
#include "stepforge/table.hpp"

namespace stepforge::ingest {

enum class TimeColumn {
    None,         ///< rows are `x,y,z`
    SampleIndex,  ///< rows are `i,x,y,z` with i = 0,1,2,...
    Timestamp,    ///< rows are `t,x,y,z`; t is ISO-8601 local time or seconds since `start`
};

struct RawFileSchema {
    TimeColumn time_column = TimeColumn::None;
    char delimiter = ',';
    bool header = true;
    /// Informational only: compression is detected from the byte stream.
    bool gzip = false;
    double sample_rate_hz = 80.0;
    /// Defaults to the file name without extensions.
    std::string subject_id;
    /// Recording start when the file carries no absolute timestamps.
    LocalTime start{};
    double chunk_seconds = 3600.0;
};

/// Streams a raw text recording as consecutive chunks of at most
/// `chunk_seconds` worth of samples. Memory use is bounded by one chunk.
class RawRecordingReader {
public:
    RawRecordingReader(const std::filesystem::path& path, RawFileSchema schema);
    ~RawRecordingReader();
    RawRecordingReader(RawRecordingReader&&) noexcept;
    RawRecordingReader& operator=(RawRecordingReader&&) noexcept;

    /// Next chunk, or nullopt once the file is exhausted. Throws ParseError
    /// on malformed rows, non-monotone time and rate mismatch.
    std::optional<TriaxialRecording> next_chunk();
    std::size_t samples_read() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience: concatenation of every chunk.
TriaxialRecording read_raw_recording(const std::filesystem::path& path, const RawFileSchema& schema);

/// Binary sample cache: "SFG1", u32 sample count, then f32 x, y and z blocks,
/// all little-endian. Only samples are stored; rate and start come from the
/// caller.
void write_binary_cache(const TriaxialRecording& rec, const std::filesystem::path& path);
TriaxialRecording read_binary_cache(const std::filesystem::path& path, std::string subject_id, double sample_rate_hz,
                                    LocalTime start);
/// Rounds every sample to single precision, i.e. to what the cache stores.
void round_to_cache_precision(TriaxialRecording& rec);

/// Names reserved for the built-in detectors.
const std::vector<std::string>& builtin_detector_names();

// Minute files: subject,day,minute,wear,flag,mims[,ac][,steps_<detector>...]
Table minutes_to_table(std::span<const MinuteRecord> minutes);
std::vector<MinuteRecord> minutes_from_table(const Table& table);
MinuteDataset read_minute_file(const std::filesystem::path& path);
void write_minute_file(std::span<const MinuteRecord> minutes, const std::filesystem::path& path);

Table covariates_to_table(std::span<const SubjectCovariates> rows);
std::vector<SubjectCovariates> covariates_from_table(const Table& table);
std::vector<SubjectCovariates> read_covariates(const std::filesystem::path& path);

Table mortality_to_table(std::span<const MortalityRecord> rows);
std::vector<MortalityRecord> mortality_from_table(const Table& table);
std::vector<MortalityRecord> read_mortality(const std::filesystem::path& path);

Table day_summaries_to_table(std::span<const DaySummary> rows);
std::vector<DaySummary> day_summaries_from_table(const Table& table);
Table subject_summaries_to_table(std::span<const SubjectSummary> rows);
std::vector<SubjectSummary> subject_summaries_from_table(const Table& table);

/// Per-minute step values produced outside this toolkit (e.g. a proprietary
/// algorithm), keyed by (day, minute of day).
struct ExternalStepSeries {
    std::string detector_name;
    std::string subject_id;  ///< empty when the file has no subject column
    std::map<std::pair<int, int>, double> steps;
};

/// Columns: [subject,]day,minute,steps. An empty file yields an empty series.
/// Throws InputError on negative steps, minutes outside [0,1439], duplicate
/// keys, or a detector name that collides with a built-in detector.
ExternalStepSeries import_external_steps(const std::filesystem::path& path, const std::string& detector_name);

/// Adds the series under its detector name to every matching minute.
/// Records of other subjects are left alone when the series names a subject.
void merge_external_steps(std::vector<MinuteRecord>& minutes, const ExternalStepSeries& series);

}  // namespace stepforge::ingest
