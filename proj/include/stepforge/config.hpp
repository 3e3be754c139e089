#pragma once

// Flat `key = value` configuration files and environment overrides.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stepforge/detectors.hpp"
#include "stepforge/ingest.hpp"
#include "stepforge/model.hpp"
#include "stepforge/summaries.hpp"

namespace stepforge::config {

using KeyValues = std::map<std::string, std::string>;

/// UTF-8 text, one `key = value` per line, `#` starts a comment. Throws
/// ParseError on a line without '='.
KeyValues parse_config(std::string_view text, const std::string& source = "config");
KeyValues read_config_file(const std::filesystem::path& path);

/// Variables named `<prefix>KEY` become key "key"; a double underscore maps to
/// '.', so STEPFORGE_PEAK__MAG_THRESHOLD_G sets "peak.mag_threshold_g".
/// Names listed in `reserved` are skipped.
KeyValues environment_overrides(const std::string& prefix = "STEPFORGE_",
                                const std::vector<std::string>& reserved = {"STEPFORGE_NHANES_DIR"});

struct PipelineConfig {
    AnalysisConfig analysis;
    detectors::DetectorParams detectors;
    summaries::SummaryParams summaries;
    ingest::RawFileSchema raw;
    std::vector<std::string> detector_names = ingest::builtin_detector_names();
};

/// Routes prefixed keys to detector, summary and raw-schema parameters and the
/// rest to make_config. Throws ConfigError on unknown keys or bad values.
PipelineConfig build_pipeline_config(const KeyValues& kv);

/// Later maps override earlier ones.
KeyValues merge(std::initializer_list<KeyValues> layers);

}  // namespace stepforge::config
