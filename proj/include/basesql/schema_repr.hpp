#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "basesql/catalog.hpp"

namespace basesql {

enum class SerializationKind {
    kCode,
    kCodeWithSample,
    kMSchema,
    kMSchemaWithSample,
};

SerializationKind serialization_from_string(std::string_view name);
std::string_view to_string(SerializationKind kind);

/// The table header line a serialization emits for table `name`
/// ("CREATE TABLE name" / "# Table: name"); useful for prompt checks.
std::string table_header(SerializationKind kind, std::string_view name);

/// A case-insensitive selection of tables from a catalog. Empty selections
/// are rejected at render time; callers wanting everything use all().
struct SchemaSubset {
    const DatabaseCatalog* catalog = nullptr;
    std::vector<std::string> table_names;

    static SchemaSubset all(const DatabaseCatalog& catalog);
    static SchemaSubset of(const DatabaseCatalog& catalog, std::vector<std::string> names);
};

/// Renders the subset's tables in catalog order. Pure: byte-identical output
/// for identical inputs. Throws UnknownTable for names missing from the
/// catalog and Error for an empty subset.
std::string render(const SchemaSubset& subset, SerializationKind kind);

/// Same serializations over an explicit table order (trainprep appends noisy
/// tables after the gold ones).
std::string render_tables(const DatabaseCatalog& catalog, std::span<const std::string> ordered_names,
                          SerializationKind kind);

}  // namespace basesql
