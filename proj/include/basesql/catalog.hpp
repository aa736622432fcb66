#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace basesql {

struct ColumnInfo {
    std::string name;
    std::string data_type;
    std::optional<std::string> description;
    bool is_primary_key = false;
    std::vector<std::string> sample_values;  // rendered literals, distinct
};

struct ForeignKey {
    std::string local_column;
    std::string referenced_table;
    std::string referenced_column;
};

struct TableInfo {
    std::string name;
    std::vector<ColumnInfo> columns;
    std::vector<ForeignKey> foreign_keys;
    std::vector<std::vector<std::string>> sample_rows;  // rendered literals, arity = |columns|

    const ColumnInfo* find_column(std::string_view column_name) const;
};

struct DatabaseCatalog {
    std::string db_id;
    std::vector<TableInfo> tables;
    std::string source_path;

    const TableInfo* find_table(std::string_view table_name) const;  // case-insensitive
    std::vector<std::string> table_names() const;
};

struct SamplingOptions {
    int sample_value_limit = 3;
    int sample_row_limit = 3;
    std::uint64_t seed = 0;
    std::size_t literal_max_chars = 80;
};

using CatalogProvider = std::function<const DatabaseCatalog&(const std::string& db_id)>;

DatabaseCatalog introspect(const std::filesystem::path& db_path, const SamplingOptions& opts = {});

/// Merges BIRD-style per-table description CSVs into the catalog. Missing
/// directory or files leave the catalog unchanged; malformed files are
/// skipped with a warning on stderr.
DatabaseCatalog attach_descriptions(DatabaseCatalog catalog, const std::filesystem::path& desc_dir);

}  // namespace basesql
