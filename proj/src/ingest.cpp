#include "stepforge/ingest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "line_reader.hpp"
#include "stepforge/text.hpp"

namespace stepforge::ingest {

namespace {

using namespace std::chrono;

std::string stem_of(const std::filesystem::path& p) {
    std::string name = p.filename().string();
    auto dot = name.find('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

// "YYYY-MM-DD HH:MM:SS[.fff]" (or with a 'T' separator).
std::optional<LocalTime> parse_iso_local(std::string_view s) {
    s = text::trim(s);
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' ||
        s[16] != ':')
        return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) { return text::parse_int(s.substr(pos, len)); };
    auto Y = num(0, 4), M = num(5, 2), D = num(8, 2), h = num(11, 2), m = num(14, 2), sec = num(17, 2);
    if (!Y || !M || !D || !h || !m || !sec) return std::nullopt;
    year_month_day ymd{year{static_cast<int>(*Y)}, month{static_cast<unsigned>(*M)}, day{static_cast<unsigned>(*D)}};
    if (!ymd.ok() || *h > 23 || *m > 59 || *sec > 60) return std::nullopt;
    double frac = 0.0;
    if (s.size() > 19) {
        if (s[19] != '.') return std::nullopt;
        auto f = text::parse_double(std::string("0") + std::string(s.substr(19)));
        if (!f) return std::nullopt;
        frac = *f;
    }
    LocalTime t = time_point_cast<milliseconds>(local_days{ymd}) + hours{*h} + minutes{*m} + seconds{*sec} +
                  milliseconds{static_cast<long long>(std::llround(frac * 1000.0))};
    return t;
}

LocalTime offset_by(LocalTime start, double seconds_offset) {
    return start + milliseconds{static_cast<long long>(std::llround(seconds_offset * 1000.0))};
}

}  // namespace

// ---------------------------------------------------------------------------
// Raw recordings

struct RawRecordingReader::Impl {
    Impl(const std::filesystem::path& path, RawFileSchema s) : reader(path), schema(std::move(s)) {
        if (!(schema.sample_rate_hz > 0.0)) throw InputError("raw schema: sample rate must be positive");
        if (!(schema.chunk_seconds > 0.0)) throw InputError("raw schema: chunk length must be positive");
        if (schema.subject_id.empty()) schema.subject_id = stem_of(path);
        chunk_samples = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(schema.chunk_seconds * schema.sample_rate_hz)));
        expected_fields = schema.time_column == TimeColumn::None ? 3 : 4;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(reader.path(), reader.line_number(), what); }

    double field_value(std::string_view f, const char* axis) const {
        auto v = text::parse_double(text::trim(f));
        if (!v || !std::isfinite(*v)) fail(std::string("malformed ") + axis + " value '" + std::string(f) + "'");
        return *v;
    }

    void check_rate() const {
        if (!have_time || total < 2) return;
        const double span = last_time - first_time;
        const double expected = static_cast<double>(total - 1) / schema.sample_rate_hz;
        if (std::abs(span - expected) > 1e-4 * expected + 1e-3)
            fail("row cadence does not match the declared " + text::format_double(schema.sample_rate_hz) + " Hz");
    }

    std::optional<TriaxialRecording> next_chunk() {
        if (done) return std::nullopt;
        TriaxialRecording chunk;
        chunk.subject_id = schema.subject_id;
        chunk.sample_rate_hz = schema.sample_rate_hz;
        chunk.x.reserve(chunk_samples);
        chunk.y.reserve(chunk_samples);
        chunk.z.reserve(chunk_samples);
        const std::size_t chunk_first = total;

        std::string_view line;
        std::array<std::string_view, 4> fields;
        while (chunk.x.size() < chunk_samples && reader.next(line)) {
            if (schema.header && !header_skipped) {
                header_skipped = true;
                continue;
            }
            if (text::trim(line).empty()) continue;
            std::size_t n = 0, begin = 0;
            for (std::size_t i = 0; i <= line.size(); ++i) {
                if (i == line.size() || line[i] == schema.delimiter) {
                    if (n < fields.size()) fields[n] = line.substr(begin, i - begin);
                    ++n;
                    begin = i + 1;
                }
            }
            if (n != expected_fields)
                fail("expected " + std::to_string(expected_fields) + " fields, found " + std::to_string(n));
            std::size_t axis0 = 0;
            if (schema.time_column == TimeColumn::SampleIndex) {
                auto idx = text::parse_int(text::trim(fields[0]));
                if (!idx) fail("malformed sample index '" + std::string(fields[0]) + "'");
                if (*idx != static_cast<long long>(total)) fail("sample index is not consecutive");
                axis0 = 1;
            } else if (schema.time_column == TimeColumn::Timestamp) {
                double t = 0.0;
                if (auto iso = parse_iso_local(fields[0])) {
                    if (!have_time) origin = *iso;
                    t = duration<double>(*iso - (have_time ? origin : *iso)).count();
                } else if (auto secs = text::parse_double(text::trim(fields[0]))) {
                    if (!have_time) origin = offset_by(schema.start, *secs);
                    t = *secs - (have_time ? first_seconds : *secs);
                    if (!have_time) first_seconds = *secs;
                } else {
                    fail("malformed timestamp '" + std::string(fields[0]) + "'");
                }
                if (have_time && !(t > last_time)) fail("non-monotone timestamp");
                if (!have_time) {
                    first_time = t;
                    have_time = true;
                }
                last_time = t;
                axis0 = 1;
            }
            chunk.x.push_back(field_value(fields[axis0], "x"));
            chunk.y.push_back(field_value(fields[axis0 + 1], "y"));
            chunk.z.push_back(field_value(fields[axis0 + 2], "z"));
            ++total;
        }
        check_rate();
        if (chunk.x.empty()) {
            done = true;
            return std::nullopt;
        }
        if (chunk.x.size() < chunk_samples) done = true;
        LocalTime base = have_time ? origin : schema.start;
        chunk.start = offset_by(base, static_cast<double>(chunk_first) / schema.sample_rate_hz);
        return chunk;
    }

    detail::LineReader reader;
    RawFileSchema schema;
    std::size_t chunk_samples = 0;
    std::size_t expected_fields = 3;
    std::size_t total = 0;
    bool header_skipped = false;
    bool done = false;
    bool have_time = false;
    LocalTime origin{};
    double first_seconds = 0.0;
    double first_time = 0.0;
    double last_time = 0.0;
};

RawRecordingReader::RawRecordingReader(const std::filesystem::path& path, RawFileSchema schema)
    : impl_(std::make_unique<Impl>(path, std::move(schema))) {}
RawRecordingReader::~RawRecordingReader() = default;
RawRecordingReader::RawRecordingReader(RawRecordingReader&&) noexcept = default;
RawRecordingReader& RawRecordingReader::operator=(RawRecordingReader&&) noexcept = default;

std::optional<TriaxialRecording> RawRecordingReader::next_chunk() { return impl_->next_chunk(); }
std::size_t RawRecordingReader::samples_read() const noexcept { return impl_->total; }

TriaxialRecording read_raw_recording(const std::filesystem::path& path, const RawFileSchema& schema) {
    RawRecordingReader reader(path, schema);
    TriaxialRecording all;
    bool first = true;
    while (auto chunk = reader.next_chunk()) {
        if (first) {
            all.subject_id = chunk->subject_id;
            all.start = chunk->start;
            all.sample_rate_hz = chunk->sample_rate_hz;
            first = false;
        }
        all.x.insert(all.x.end(), chunk->x.begin(), chunk->x.end());
        all.y.insert(all.y.end(), chunk->y.begin(), chunk->y.end());
        all.z.insert(all.z.end(), chunk->z.begin(), chunk->z.end());
    }
    if (first) {
        all.subject_id = schema.subject_id.empty() ? stem_of(path) : schema.subject_id;
        all.start = schema.start;
        all.sample_rate_hz = schema.sample_rate_hz;
    }
    return all;
}

// ---------------------------------------------------------------------------
// Binary cache

namespace {

constexpr char kMagic[4] = {'S', 'F', 'G', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_binary_cache(const TriaxialRecording& rec, const std::filesystem::path& path) {
    rec.validate();
    if (rec.size() > 0xFFFFFFFFull) throw InputError("recording too long for the binary cache");
    std::string out;
    out.reserve(8 + 12 * rec.size());
    out.append(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(rec.size()));
    for (const auto* axis : {&rec.x, &rec.y, &rec.z}) {
        for (double v : *axis) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw InputError("write failed for '" + path.string() + "'");
}

TriaxialRecording read_binary_cache(const std::filesystem::path& path, std::string subject_id, double sample_rate_hz,
                                    LocalTime start) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw InputError("'" + path.string() + "' is not an SFG1 cache file");
    const std::size_t n = get_u32(bytes.data() + 4);
    if (bytes.size() != 8 + 12 * n) throw InputError("'" + path.string() + "': truncated SFG1 cache");
    TriaxialRecording rec;
    rec.subject_id = std::move(subject_id);
    rec.sample_rate_hz = sample_rate_hz;
    rec.start = start;
    const unsigned char* p = bytes.data() + 8;
    for (auto* axis : {&rec.x, &rec.y, &rec.z}) {
        axis->resize(n);
        for (std::size_t i = 0; i < n; ++i, p += 4) (*axis)[i] = std::bit_cast<float>(get_u32(p));
    }
    return rec;
}

void round_to_cache_precision(TriaxialRecording& rec) {
    for (auto* axis : {&rec.x, &rec.y, &rec.z}) {
        for (double& v : *axis) v = static_cast<float>(v);
    }
}

const std::vector<std::string>& builtin_detector_names() {
    static const std::vector<std::string> names = {"peak_original", "peak_revised", "spectral", "template"};
    return names;
}

// ---------------------------------------------------------------------------
// Typed tables

namespace {

[[noreturn]] void row_error(const Table& t, std::size_t row, const std::string& what) {
    std::size_t line = row < t.lines.size() ? t.lines[row] : row + 2;
    throw ParseError(t.source.empty() ? "table" : t.source, line, what);
}

double cell_double(const Table& t, std::size_t row, std::size_t col) {
    const std::string& s = t.rows[row][col];
    if (text::is_missing(s)) return std::numeric_limits<double>::quiet_NaN();
    auto v = text::parse_double(text::trim(s));
    if (!v) row_error(t, row, "malformed number '" + s + "' in column '" + t.columns[col] + "'");
    return *v;
}

long long cell_int(const Table& t, std::size_t row, std::size_t col) {
    const std::string& s = t.rows[row][col];
    auto v = text::parse_int(text::trim(s));
    if (!v) row_error(t, row, "malformed integer '" + s + "' in column '" + t.columns[col] + "'");
    return *v;
}

bool cell_bool(const Table& t, std::size_t row, std::size_t col) {
    std::string s = text::lower(text::trim(t.rows[row][col]));
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    row_error(t, row, "malformed flag '" + t.rows[row][col] + "' in column '" + t.columns[col] + "'");
}

std::optional<bool> cell_opt_bool(const Table& t, std::size_t row, std::size_t col) {
    if (text::is_missing(t.rows[row][col])) return std::nullopt;
    return cell_bool(t, row, col);
}

template <class E, class F>
std::optional<E> cell_level(const Table& t, std::size_t row, std::size_t col, F parse) {
    if (text::is_missing(t.rows[row][col])) return std::nullopt;
    try {
        return parse(t.rows[row][col]);
    } catch (const InputError& e) {
        row_error(t, row, e.what());
    }
}

std::string opt_bool_str(const std::optional<bool>& b) { return b ? (*b ? "1" : "0") : "NA"; }

template <class E>
std::string opt_level_str(const std::optional<E>& v) {
    return v ? std::string(to_string(*v)) : "NA";
}

const std::string kStepsPrefix = "steps_";

}  // namespace

Table minutes_to_table(std::span<const MinuteRecord> minutes) {
    Table t;
    t.columns = {"subject", "day", "minute", "wear", "flag", "mims"};
    bool any_ac = std::any_of(minutes.begin(), minutes.end(), [](const MinuteRecord& m) { return m.ac.has_value(); });
    if (any_ac) t.columns.push_back("ac");
    std::set<std::string> detectors;
    for (const auto& m : minutes) {
        for (const auto& [name, v] : m.steps) detectors.insert(name);
    }
    for (const auto& d : detectors) t.columns.push_back(kStepsPrefix + d);
    t.rows.reserve(minutes.size());
    for (const auto& m : minutes) {
        std::vector<std::string> row = {m.subject_id,
                                        std::to_string(m.day_index),
                                        std::to_string(m.minute_of_day),
                                        std::string(to_string(m.wear)),
                                        m.quality_flagged ? "1" : "0",
                                        text::format_double(m.mims)};
        if (any_ac) row.push_back(m.ac ? std::to_string(*m.ac) : "NA");
        for (const auto& d : detectors) {
            auto it = m.steps.find(d);
            row.push_back(it == m.steps.end() ? "NA" : text::format_double(it->second));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<MinuteRecord> minutes_from_table(const Table& t) {
    const std::size_t c_subject = t.column("subject"), c_day = t.column("day"), c_minute = t.column("minute"),
                      c_wear = t.column("wear"), c_flag = t.column("flag"), c_mims = t.column("mims");
    const auto c_ac = t.find_column("ac");
    std::vector<std::pair<std::size_t, std::string>> step_cols;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (t.columns[c].rfind(kStepsPrefix, 0) == 0 && t.columns[c].size() > kStepsPrefix.size())
            step_cols.emplace_back(c, t.columns[c].substr(kStepsPrefix.size()));
    }
    std::vector<MinuteRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        MinuteRecord m;
        m.subject_id = std::string(text::trim(t.rows[r][c_subject]));
        long long day = cell_int(t, r, c_day);
        long long minute = cell_int(t, r, c_minute);
        if (day < 1) row_error(t, r, "day index must be >= 1");
        if (minute < 0 || minute > 1439) row_error(t, r, "minute of day outside [0,1439]");
        m.day_index = static_cast<int>(day);
        m.minute_of_day = static_cast<int>(minute);
        try {
            m.wear = parse_wear_state(t.rows[r][c_wear]);
        } catch (const InputError& e) {
            row_error(t, r, e.what());
        }
        m.quality_flagged = cell_bool(t, r, c_flag);
        double mims = cell_double(t, r, c_mims);
        m.mims = std::isnan(mims) ? kMimsSentinel : normalize_mims(mims);
        if (c_ac && !text::is_missing(t.rows[r][*c_ac])) {
            long long ac = cell_int(t, r, *c_ac);
            if (ac < 0) row_error(t, r, "activity count must be non-negative");
            m.ac = ac;
        }
        for (const auto& [c, name] : step_cols) {
            if (text::is_missing(t.rows[r][c])) continue;
            double v = cell_double(t, r, c);
            if (!(v >= 0.0)) row_error(t, r, "step count must be non-negative");
            m.steps[name] = v;
        }
        out.push_back(std::move(m));
    }
    return out;
}

MinuteDataset read_minute_file(const std::filesystem::path& path) {
    return MinuteDataset(minutes_from_table(read_table(path)));
}

void write_minute_file(std::span<const MinuteRecord> minutes, const std::filesystem::path& path) {
    write_table(minutes_to_table(minutes), path);
}

Table covariates_to_table(std::span<const SubjectCovariates> rows) {
    Table t;
    t.columns = {"subject", "wave",   "age",          "age_topcoded", "sex",       "race",    "education",
                 "bmi",     "diabetes", "chd",        "chf",          "heart_attack", "stroke", "cancer",
                 "mobility_problem", "alcohol", "smoking", "health", "weight", "stratum", "psu"};
    for (const auto& c : rows) {
        t.rows.push_back({c.subject_id,
                          c.wave,
                          text::format_double(c.age_years),
                          c.age_topcoded ? "1" : "0",
                          opt_level_str(c.sex),
                          opt_level_str(c.race),
                          opt_level_str(c.education),
                          opt_level_str(c.bmi),
                          opt_bool_str(c.diabetes),
                          opt_bool_str(c.chd),
                          opt_bool_str(c.chf),
                          opt_bool_str(c.heart_attack),
                          opt_bool_str(c.stroke),
                          opt_bool_str(c.cancer),
                          opt_bool_str(c.mobility_problem),
                          std::string(to_string(c.alcohol)),
                          opt_level_str(c.smoking),
                          opt_level_str(c.health),
                          text::format_double(c.survey_weight),
                          c.stratum_id,
                          c.psu_id});
    }
    return t;
}

std::vector<SubjectCovariates> covariates_from_table(const Table& t) {
    const std::size_t c_subject = t.column("subject"), c_age = t.column("age"), c_weight = t.column("weight");
    auto opt = [&](const char* name) { return t.find_column(name); };
    const auto c_wave = opt("wave"), c_top = opt("age_topcoded"), c_stratum = opt("stratum"), c_psu = opt("psu");
    std::vector<SubjectCovariates> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SubjectCovariates c;
        c.subject_id = std::string(text::trim(t.rows[r][c_subject]));
        if (c_wave) c.wave = std::string(text::trim(t.rows[r][*c_wave]));
        c.age_years = cell_double(t, r, c_age);
        if (std::isnan(c.age_years)) row_error(t, r, "missing age");
        if (c_top) c.age_topcoded = cell_bool(t, r, *c_top);
        if (c.age_years >= 80.0) {
            c.age_years = 80.0;
            c.age_topcoded = true;
        }
        auto level = [&]<class E>(const char* name, E (*parse)(std::string_view)) -> std::optional<E> {
            auto col = t.find_column(name);
            if (!col) return std::nullopt;
            return cell_level<E>(t, r, *col, parse);
        };
        auto flag = [&](const char* name) -> std::optional<bool> {
            auto col = t.find_column(name);
            if (!col) return std::nullopt;
            return cell_opt_bool(t, r, *col);
        };
        c.sex = level("sex", &parse_sex);
        c.race = level("race", &parse_race);
        c.education = level("education", &parse_education);
        c.bmi = level("bmi", &parse_bmi);
        c.diabetes = flag("diabetes");
        c.chd = flag("chd");
        c.chf = flag("chf");
        c.heart_attack = flag("heart_attack");
        c.stroke = flag("stroke");
        c.cancer = flag("cancer");
        c.mobility_problem = flag("mobility_problem");
        c.alcohol = level("alcohol", &parse_alcohol).value_or(Alcohol::Missing);
        c.smoking = level("smoking", &parse_smoking);
        c.health = level("health", &parse_health);
        c.survey_weight = cell_double(t, r, c_weight);
        if (!(c.survey_weight > 0.0)) row_error(t, r, "survey weight must be positive");
        if (c_stratum) c.stratum_id = std::string(text::trim(t.rows[r][*c_stratum]));
        if (c_psu) c.psu_id = std::string(text::trim(t.rows[r][*c_psu]));
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<SubjectCovariates> read_covariates(const std::filesystem::path& path) {
    return covariates_from_table(read_table(path));
}

Table mortality_to_table(std::span<const MortalityRecord> rows) {
    Table t;
    t.columns = {"subject", "event", "followup_months"};
    for (const auto& m : rows)
        t.rows.push_back({m.subject_id, m.event ? "1" : "0", text::format_double(m.followup_months)});
    return t;
}

std::vector<MortalityRecord> mortality_from_table(const Table& t) {
    const std::size_t c_subject = t.column("subject"), c_event = t.column("event"),
                      c_follow = t.column("followup_months");
    std::vector<MortalityRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        MortalityRecord m;
        m.subject_id = std::string(text::trim(t.rows[r][c_subject]));
        m.event = cell_bool(t, r, c_event);
        m.followup_months = cell_double(t, r, c_follow);
        if (std::isnan(m.followup_months)) row_error(t, r, "missing follow-up time");
        if (m.followup_months < 0.0) row_error(t, r, "negative follow-up time");
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<MortalityRecord> read_mortality(const std::filesystem::path& path) {
    return mortality_from_table(read_table(path));
}

namespace {

std::set<std::string> variable_union(auto const& rows, auto member) {
    std::set<std::string> vars;
    for (const auto& r : rows) {
        for (const auto& [k, v] : r.*member) vars.insert(k);
    }
    return vars;
}

}  // namespace

Table day_summaries_to_table(std::span<const DaySummary> rows) {
    Table t;
    t.columns = {"subject", "day", "n_valid_minutes", "n_wake_minutes", "n_nonzero_mims_minutes", "valid"};
    auto vars = variable_union(rows, &DaySummary::totals);
    for (const auto& v : vars) t.columns.push_back(v);
    for (const auto& d : rows) {
        std::vector<std::string> row = {d.subject_id,
                                        std::to_string(d.day_index),
                                        std::to_string(d.n_valid_minutes),
                                        std::to_string(d.n_wake_minutes),
                                        std::to_string(d.n_nonzero_mims_minutes),
                                        d.valid ? "1" : "0"};
        for (const auto& v : vars) {
            auto it = d.totals.find(v);
            row.push_back(it == d.totals.end() ? "NA" : text::format_double(it->second));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<DaySummary> day_summaries_from_table(const Table& t) {
    const std::size_t c_subject = t.column("subject"), c_day = t.column("day"),
                      c_valid_min = t.column("n_valid_minutes"), c_wake = t.column("n_wake_minutes"),
                      c_nz = t.column("n_nonzero_mims_minutes"), c_valid = t.column("valid");
    std::vector<DaySummary> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        DaySummary d;
        d.subject_id = t.rows[r][c_subject];
        d.day_index = static_cast<int>(cell_int(t, r, c_day));
        d.n_valid_minutes = static_cast<int>(cell_int(t, r, c_valid_min));
        d.n_wake_minutes = static_cast<int>(cell_int(t, r, c_wake));
        d.n_nonzero_mims_minutes = static_cast<int>(cell_int(t, r, c_nz));
        d.valid = cell_bool(t, r, c_valid);
        for (std::size_t c = c_valid + 1; c < t.columns.size(); ++c) {
            if (!text::is_missing(t.rows[r][c])) d.totals[t.columns[c]] = cell_double(t, r, c);
        }
        out.push_back(std::move(d));
    }
    return out;
}

Table subject_summaries_to_table(std::span<const SubjectSummary> rows) {
    Table t;
    t.columns = {"subject", "n_valid_days", "included"};
    auto vars = variable_union(rows, &SubjectSummary::means);
    for (const auto& v : vars) t.columns.push_back(v);
    for (const auto& s : rows) {
        std::vector<std::string> row = {s.subject_id, std::to_string(s.n_valid_days), s.included ? "1" : "0"};
        for (const auto& v : vars) {
            auto it = s.means.find(v);
            row.push_back(it == s.means.end() ? "NA" : text::format_double(it->second));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<SubjectSummary> subject_summaries_from_table(const Table& t) {
    const std::size_t c_subject = t.column("subject"), c_n = t.column("n_valid_days"), c_inc = t.column("included");
    std::vector<SubjectSummary> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SubjectSummary s;
        s.subject_id = t.rows[r][c_subject];
        s.n_valid_days = static_cast<int>(cell_int(t, r, c_n));
        s.included = cell_bool(t, r, c_inc);
        for (std::size_t c = c_inc + 1; c < t.columns.size(); ++c) {
            if (!text::is_missing(t.rows[r][c])) s.means[t.columns[c]] = cell_double(t, r, c);
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// External step series

ExternalStepSeries import_external_steps(const std::filesystem::path& path, const std::string& detector_name) {
    const auto& builtin = builtin_detector_names();
    if (detector_name.empty()) throw InputError("external step series needs a detector name");
    if (std::find(builtin.begin(), builtin.end(), detector_name) != builtin.end())
        throw InputError("detector name '" + detector_name + "' collides with a built-in detector");

    ExternalStepSeries series;
    series.detector_name = detector_name;
    Table t = read_table(path);
    if (t.columns.empty()) return series;
    const std::size_t c_day = t.column("day"), c_minute = t.column("minute"), c_steps = t.column("steps");
    const auto c_subject = t.find_column("subject");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (c_subject) {
            std::string sid(text::trim(t.rows[r][*c_subject]));
            if (series.subject_id.empty()) series.subject_id = sid;
            else if (sid != series.subject_id) row_error(t, r, "external step file mixes subjects");
        }
        long long day = cell_int(t, r, c_day), minute = cell_int(t, r, c_minute);
        if (day < 1) row_error(t, r, "day index must be >= 1");
        if (minute < 0 || minute > 1439) row_error(t, r, "minute of day outside [0,1439]");
        double v = cell_double(t, r, c_steps);
        if (!(v >= 0.0)) row_error(t, r, "step count must be non-negative");
        auto [it, inserted] = series.steps.emplace(std::pair{static_cast<int>(day), static_cast<int>(minute)}, v);
        if (!inserted) row_error(t, r, "duplicate minute in external step file");
    }
    return series;
}

void merge_external_steps(std::vector<MinuteRecord>& minutes, const ExternalStepSeries& series) {
    const auto& builtin = builtin_detector_names();
    if (std::find(builtin.begin(), builtin.end(), series.detector_name) != builtin.end())
        throw InputError("detector name '" + series.detector_name + "' collides with a built-in detector");
    if (series.steps.empty()) return;
    for (auto& m : minutes) {
        if (!series.subject_id.empty() && m.subject_id != series.subject_id) continue;
        auto it = series.steps.find({m.day_index, m.minute_of_day});
        if (it != series.steps.end()) m.steps[series.detector_name] = it->second;
    }
}

}  // namespace stepforge::ingest
