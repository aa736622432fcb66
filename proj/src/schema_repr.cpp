#include "basesql/schema_repr.hpp"

#include <algorithm>
#include <set>

#include "basesql/errors.hpp"
#include "basesql/text_util.hpp"

namespace basesql {
namespace {

bool with_sample(SerializationKind kind) {
    return kind == SerializationKind::kCodeWithSample ||
           kind == SerializationKind::kMSchemaWithSample;
}

bool is_code(SerializationKind kind) {
    return kind == SerializationKind::kCode || kind == SerializationKind::kCodeWithSample;
}

std::string single_line(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
    return out;
}

void append_sample_fence(std::string& out, const TableInfo& table) {
    out += "```\n-- " + table.name + " sample rows\n";
    std::vector<std::string> header;
    header.reserve(table.columns.size());
    for (const auto& c : table.columns) header.push_back(c.name);
    out += join(header, " | ") + "\n";
    for (const auto& row : table.sample_rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (const auto& cell : row) cells.push_back(single_line(cell));
        out += join(cells, " | ") + "\n";
    }
    out += "```\n";
}

void append_code_table(std::string& out, const TableInfo& table,
                       const std::set<std::string>& subset_lower) {
    std::vector<std::string> items;
    for (const auto& col : table.columns) {
        std::string line = "  " + col.name;
        if (!col.data_type.empty()) line += " " + col.data_type;
        items.push_back(std::move(line));
    }
    std::vector<std::string> pk;
    for (const auto& col : table.columns) {
        if (col.is_primary_key) pk.push_back(col.name);
    }
    if (!pk.empty()) items.push_back("  PRIMARY KEY (" + join(pk, ", ") + ")");
    for (const auto& fk : table.foreign_keys) {
        if (!subset_lower.count(to_lower(fk.referenced_table))) continue;
        items.push_back("  FOREIGN KEY (" + fk.local_column + ") REFERENCES " +
                        fk.referenced_table + "(" + fk.referenced_column + ")");
    }
    out += "CREATE TABLE " + table.name + " (\n" + join(items, ",\n") + "\n);\n";
}

void append_mschema_table(std::string& out, const TableInfo& table) {
    out += "# Table: " + table.name + "\n[\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        const auto& col = table.columns[i];
        std::string line = "(" + col.name + ":" + col.data_type;
        if (col.description && !col.description->empty()) {
            line += ", " + single_line(*col.description);
        }
        if (col.is_primary_key) line += ", Primary key";
        if (!col.sample_values.empty()) {
            std::vector<std::string> values;
            values.reserve(col.sample_values.size());
            for (const auto& v : col.sample_values) values.push_back(single_line(v));
            line += ", Examples: [" + join(values, ", ") + "]";
        }
        line += ")";
        if (i + 1 < table.columns.size()) line += ",";
        out += line + "\n";
    }
    out += "]\n";
}

std::vector<const TableInfo*> resolve_tables(const DatabaseCatalog& catalog,
                                             std::span<const std::string> names) {
    if (names.empty()) throw Error("empty schema subset");
    std::vector<const TableInfo*> tables;
    tables.reserve(names.size());
    std::set<std::string> seen;
    for (const auto& name : names) {
        const TableInfo* t = catalog.find_table(name);
        if (!t) throw UnknownTable(name);
        if (seen.insert(to_lower(t->name)).second) tables.push_back(t);
    }
    return tables;
}

std::string render_impl(const DatabaseCatalog& catalog, std::span<const std::string> names,
                        SerializationKind kind) {
    std::vector<const TableInfo*> tables = resolve_tables(catalog, names);
    std::set<std::string> subset_lower;
    for (const auto* t : tables) subset_lower.insert(to_lower(t->name));

    std::string out;
    if (is_code(kind)) {
        bool first = true;
        for (const auto* table : tables) {
            if (!first) out += "\n";
            first = false;
            append_code_table(out, *table, subset_lower);
            if (with_sample(kind)) {
                out += "\n";
                append_sample_fence(out, *table);
            }
        }
        return out;
    }

    out += "【DB_ID】 " + catalog.db_id + "\n【Schema】\n";
    for (const auto* table : tables) {
        append_mschema_table(out, *table);
        if (with_sample(kind)) append_sample_fence(out, *table);
    }
    out += "【Foreign keys】\n";
    for (const auto* table : tables) {
        for (const auto& fk : table->foreign_keys) {
            if (!subset_lower.count(to_lower(fk.referenced_table))) continue;
            out += table->name + "." + fk.local_column + "=" + fk.referenced_table + "." +
                   fk.referenced_column + "\n";
        }
    }
    return out;
}

}  // namespace

SerializationKind serialization_from_string(std::string_view name) {
    std::string n = to_lower(name);
    std::replace(n.begin(), n.end(), '_', '-');
    if (n == "code") return SerializationKind::kCode;
    if (n == "code+sample" || n == "code-sample") return SerializationKind::kCodeWithSample;
    if (n == "m-schema" || n == "mschema") return SerializationKind::kMSchema;
    if (n == "m-schema+sample" || n == "m-schema-sample" || n == "mschema+sample") {
        return SerializationKind::kMSchemaWithSample;
    }
    throw ConfigError("unknown serialization kind: " + std::string(name));
}

std::string_view to_string(SerializationKind kind) {
    switch (kind) {
        case SerializationKind::kCode: return "code";
        case SerializationKind::kCodeWithSample: return "code+sample";
        case SerializationKind::kMSchema: return "m-schema";
        case SerializationKind::kMSchemaWithSample: return "m-schema+sample";
    }
    return "?";
}

std::string table_header(SerializationKind kind, std::string_view name) {
    if (is_code(kind)) return "CREATE TABLE " + std::string(name);
    return "# Table: " + std::string(name);
}

SchemaSubset SchemaSubset::all(const DatabaseCatalog& catalog) {
    return SchemaSubset{&catalog, catalog.table_names()};
}

SchemaSubset SchemaSubset::of(const DatabaseCatalog& catalog, std::vector<std::string> names) {
    return SchemaSubset{&catalog, std::move(names)};
}

std::string render(const SchemaSubset& subset, SerializationKind kind) {
    if (!subset.catalog) throw Error("schema subset without catalog");
    // Catalog order, restricted to the subset.
    std::set<std::string> wanted;
    for (const auto& n : subset.table_names) {
        if (!subset.catalog->find_table(n)) throw UnknownTable(n);
        wanted.insert(to_lower(n));
    }
    std::vector<std::string> ordered;
    for (const auto& t : subset.catalog->tables) {
        if (wanted.count(to_lower(t.name))) ordered.push_back(t.name);
    }
    return render_impl(*subset.catalog, ordered, kind);
}

std::string render_tables(const DatabaseCatalog& catalog, std::span<const std::string> ordered_names,
                          SerializationKind kind) {
    return render_impl(catalog, ordered_names, kind);
}

}  // namespace basesql
