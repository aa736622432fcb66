#pragma once

#include <set>
#include <string>
#include <utility>

#include "basesql/catalog.hpp"

namespace basesql {

struct SqlIdentifiers {
    std::set<std::string> tables;                            // canonical catalog casing
    std::set<std::pair<std::string, std::string>> columns;   // (table or "", column)
    bool parse_ok = false;
};

/// Pulls the SQL statement out of raw model output: the last fenced code
/// block when one holds SQL, otherwise everything from the first SELECT/WITH
/// token. Prose after the terminating semicolon is dropped. Throws NoSqlFound
/// when the output contains neither a fence nor a SELECT/WITH token.
std::string extract_sql(const std::string& raw);

/// Tables and columns a statement actually reads, resolved through SQLite's
/// own name resolution (aliases dereferenced, CTE names excluded). A statement
/// SQLite cannot compile against the catalog's database yields parse_ok=false
/// and empty sets.
SqlIdentifiers referenced_objects(const std::string& sql, const DatabaseCatalog& catalog);

/// Table projection of referenced_objects. On parse failure falls back to the
/// catalog tables whose names occur as standalone tokens in the SQL text.
std::set<std::string> tables_only(const std::string& sql, const DatabaseCatalog& catalog);

}  // namespace basesql
