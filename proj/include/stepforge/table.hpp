#pragma once

// Delimiter-separated tables with a header row.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stepforge {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    /// Source line of each row when read from a file (1-based); empty otherwise.
    std::vector<std::size_t> lines;
    std::string source;

    std::optional<std::size_t> find_column(const std::string& name) const;
    /// Throws InputError naming the missing column.
    std::size_t column(const std::string& name) const;
    void add_row(std::vector<std::string> row);

    bool operator==(const Table& o) const { return columns == o.columns && rows == o.rows; }
};

/// UTF-8, comma-delimited, header first, "\n" line endings. Throws InputError
/// if the path cannot be written.
void write_table(const Table& table, const std::filesystem::path& path);
std::string to_csv(const Table& table);

/// Reads a table written by write_table (or any header-first CSV, optionally
/// gzip-compressed). A completely empty file yields a table with no columns.
Table read_table(const std::filesystem::path& path);

}  // namespace stepforge
