#include "stepforge/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "stepforge/text.hpp"

extern char** environ;

namespace stepforge::config {

KeyValues parse_config(std::string_view body, const std::string& source) {
    KeyValues kv;
    std::size_t line_no = 0, pos = 0;
    while (pos <= body.size()) {
        const std::size_t nl = body.find('\n', pos);
        std::string_view line = body.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? body.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
        const std::string key = text::lower(text::trim(line.substr(0, eq)));
        if (key.empty()) throw ParseError(source, line_no, "empty key");
        kv[key] = std::string(text::trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.string());
}

KeyValues environment_overrides(const std::string& prefix, const std::vector<std::string>& reserved) {
    KeyValues kv;
    for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
        const std::string_view entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        const std::string name(entry.substr(0, eq));
        if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) continue;
        if (std::find(reserved.begin(), reserved.end(), name) != reserved.end()) continue;
        std::string key = text::lower(name.substr(prefix.size()));
        for (std::size_t p = key.find("__"); p != std::string::npos; p = key.find("__", p + 1)) key.replace(p, 2, ".");
        kv[key] = std::string(entry.substr(eq + 1));
    }
    return kv;
}

KeyValues merge(std::initializer_list<KeyValues> layers) {
    KeyValues out;
    for (const auto& l : layers) {
        for (const auto& [k, v] : l) out[k] = v;
    }
    return out;
}

namespace {

bool set_raw(ingest::RawFileSchema& raw, const std::string& key, const std::string& value) {
    if (key.rfind("raw.", 0) != 0) return false;
    const std::string f = key.substr(4);
    const std::string v = std::string(text::trim(value));
    auto num = [&] {
        auto d = text::parse_double(v);
        if (!d || !(*d > 0.0)) throw ConfigError("'" + key + "' expects a positive number");
        return *d;
    };
    if (f == "time_column") {
        const std::string l = text::lower(v);
        if (l == "none") raw.time_column = ingest::TimeColumn::None;
        else if (l == "index" || l == "sample_index") raw.time_column = ingest::TimeColumn::SampleIndex;
        else if (l == "timestamp" || l == "time") raw.time_column = ingest::TimeColumn::Timestamp;
        else throw ConfigError("'" + key + "' must be none, index or timestamp");
    } else if (f == "delimiter") {
        if (v == "\\t" || text::lower(v) == "tab") raw.delimiter = '\t';
        else if (v.size() == 1) raw.delimiter = v[0];
        else throw ConfigError("'" + key + "' must be a single character");
    } else if (f == "header") {
        const std::string l = text::lower(v);
        if (l == "1" || l == "true" || l == "yes") raw.header = true;
        else if (l == "0" || l == "false" || l == "no") raw.header = false;
        else throw ConfigError("'" + key + "' expects a boolean");
    } else if (f == "sample_rate_hz") {
        raw.sample_rate_hz = num();
    } else if (f == "chunk_seconds") {
        raw.chunk_seconds = num();
    } else if (f == "gzip") {
        raw.gzip = text::lower(v) == "true" || v == "1";
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
    return true;
}

}  // namespace

PipelineConfig build_pipeline_config(const KeyValues& kv) {
    PipelineConfig pc;
    KeyValues analysis;
    for (const auto& [key, value] : kv) {
        if (key == "detectors") {
            std::vector<std::string> names;
            for (auto& n : text::split_row(value)) {
                std::string t(text::trim(n));
                if (!t.empty()) names.push_back(t);
            }
            pc.detector_names = names;
            continue;
        }
        if (pc.detectors.set(key, value) || pc.summaries.set(key, value) || set_raw(pc.raw, key, value)) continue;
        if (key.find('.') != std::string::npos) throw ConfigError("unknown configuration key '" + key + "'");
        analysis[key] = value;
    }
    pc.analysis = make_config(analysis);
    (void)detectors::select_detectors(pc.detectors, pc.detector_names);  // validates names and parameters
    pc.summaries.ac.validate();
    pc.summaries.mims.validate();
    return pc;
}

}  // namespace stepforge::config
