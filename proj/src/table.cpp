#include "stepforge/table.hpp"

#include <fstream>

#include "line_reader.hpp"
#include "stepforge/model.hpp"
#include "stepforge/text.hpp"

namespace stepforge {

std::optional<std::size_t> Table::find_column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t Table::column(const std::string& name) const {
    auto i = find_column(name);
    if (!i) throw InputError((source.empty() ? std::string("table") : source) + ": missing column '" + name + "'");
    return *i;
}

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw InputError("table row width does not match header");
    rows.push_back(std::move(row));
}

std::string to_csv(const Table& table) {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out.push_back(',');
            out += text::quote_field(cells[i]);
        }
        out.push_back('\n');
    };
    emit(table.columns);
    for (const auto& r : table.rows) emit(r);
    return out;
}

void write_table(const Table& table, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    const std::string body = to_csv(table);
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!os) throw InputError("write failed for '" + path.string() + "'");
}

Table read_table(const std::filesystem::path& path) {
    detail::LineReader reader(path);
    Table t;
    t.source = path.string();
    std::string_view line;
    bool header = false;
    while (reader.next(line)) {
        if (text::trim(line).empty()) continue;
        auto cells = text::split_row(line);
        if (!header) {
            for (auto& c : cells) c = std::string(text::trim(c));
            t.columns = std::move(cells);
            header = true;
            continue;
        }
        if (cells.size() != t.columns.size())
            throw ParseError(t.source, reader.line_number(),
                             "expected " + std::to_string(t.columns.size()) + " fields, found " +
                                 std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.lines.push_back(reader.line_number());
    }
    return t;
}

}  // namespace stepforge
