#include "basesql/catalog.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "basesql/errors.hpp"
#include "basesql/text_util.hpp"

namespace basesql {
namespace {

void warn(const std::string& msg) {
    std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

struct DbCloser {
    void operator()(sqlite3* db) const { sqlite3_close(db); }
};
using DbHandle = std::unique_ptr<sqlite3, DbCloser>;

struct StmtCloser {
    void operator()(sqlite3_stmt* st) const { sqlite3_finalize(st); }
};
using Stmt = std::unique_ptr<sqlite3_stmt, StmtCloser>;

Stmt prepare(sqlite3* db, const std::string& sql) {
    sqlite3_stmt* st = nullptr;
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &st, nullptr) != SQLITE_OK) {
        throw IntrospectionFailed(sql, sqlite3_errmsg(db));
    }
    return Stmt(st);
}

std::string quote_ident(std::string_view name) {
    std::string out = "\"";
    for (char c : name) {
        out.push_back(c);
        if (c == '"') out.push_back('"');
    }
    out.push_back('"');
    return out;
}

std::string render_column(sqlite3_stmt* st, int col, std::size_t max_chars) {
    switch (sqlite3_column_type(st, col)) {
        case SQLITE_NULL:
            return "NULL";
        case SQLITE_INTEGER:
            return std::to_string(sqlite3_column_int64(st, col));
        case SQLITE_FLOAT:
            return format_double(sqlite3_column_double(st, col));
        case SQLITE_BLOB:
            return "<blob " + std::to_string(sqlite3_column_bytes(st, col)) + " bytes>";
        default: {
            const unsigned char* text = sqlite3_column_text(st, col);
            std::string s = text ? reinterpret_cast<const char*>(text) : "";
            return truncate_with_ellipsis(s, max_chars);
        }
    }
}

std::vector<std::string> collect_sample_values(sqlite3* db, const std::string& table,
                                               const std::string& column,
                                               const SamplingOptions& opts) {
    std::vector<std::string> values;
    if (opts.sample_value_limit <= 0) return values;
    auto st = prepare(db, "SELECT DISTINCT " + quote_ident(column) + " FROM " +
                              quote_ident(table) + " WHERE " + quote_ident(column) +
                              " IS NOT NULL");
    // Distinct raw values can still collide after rendering (e.g. 80-char
    // truncation), so dedupe the rendered literals; scan is capped so a
    // pathological column cannot stall introspection.
    int scanned = 0;
    while (sqlite3_step(st.get()) == SQLITE_ROW && scanned < 64) {
        ++scanned;
        std::string rendered = render_column(st.get(), 0, opts.literal_max_chars);
        if (std::find(values.begin(), values.end(), rendered) == values.end()) {
            values.push_back(std::move(rendered));
            if (values.size() == static_cast<std::size_t>(opts.sample_value_limit)) break;
        }
    }
    return values;
}

std::vector<std::vector<std::string>> collect_sample_rows(sqlite3* db, const TableInfo& table,
                                                          const SamplingOptions& opts) {
    std::vector<std::vector<std::string>> reservoir;
    if (opts.sample_row_limit <= 0) return reservoir;
    const auto k = static_cast<std::size_t>(opts.sample_row_limit);

    auto st = prepare(db, "SELECT * FROM " + quote_ident(table.name));
    std::mt19937_64 rng(opts.seed ^ fnv1a(table.name));
    std::vector<std::size_t> picked_index;  // original row numbers, for stable output order

    std::size_t row_no = 0;
    while (sqlite3_step(st.get()) == SQLITE_ROW) {
        const int ncol = sqlite3_column_count(st.get());
        auto render_row = [&] {
            std::vector<std::string> row;
            row.reserve(static_cast<std::size_t>(ncol));
            for (int c = 0; c < ncol; ++c) {
                row.push_back(render_column(st.get(), c, opts.literal_max_chars));
            }
            return row;
        };
        if (reservoir.size() < k) {
            reservoir.push_back(render_row());
            picked_index.push_back(row_no);
        } else {
            std::size_t j = rng() % (row_no + 1);
            if (j < k) {
                reservoir[j] = render_row();
                picked_index[j] = row_no;
            }
        }
        ++row_no;
    }

    // Present sampled rows in their table order.
    std::vector<std::size_t> order(reservoir.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return picked_index[a] < picked_index[b]; });
    std::vector<std::vector<std::string>> rows;
    rows.reserve(reservoir.size());
    for (std::size_t i : order) rows.push_back(std::move(reservoir[i]));
    return rows;
}

// RFC-4180-ish CSV reader: quoted fields, doubled quotes, embedded newlines.
// Throws Error on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            if (row.size() > 1 || !row[0].empty()) rows.push_back(std::move(row));
            row.clear();
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw Error("unterminated quote in " + file.string());
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

void apply_description_csv(DatabaseCatalog& catalog, TableInfo& table,
                           const std::filesystem::path& file) {
    (void)catalog;
    auto rows = parse_csv(file);
    if (rows.empty()) throw Error("empty description file " + file.string());

    const auto& header = rows.front();
    int name_col = -1, desc_col = -1, value_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string h = to_lower(trim(header[i]));
        if (h == "original_column_name") name_col = static_cast<int>(i);
        else if (h == "column_description") desc_col = static_cast<int>(i);
        else if (h == "value_description") value_col = static_cast<int>(i);
    }
    if (name_col < 0) throw Error("no original_column_name column in " + file.string());

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (static_cast<std::size_t>(name_col) >= row.size()) continue;
        std::string column_name = trim(row[static_cast<std::size_t>(name_col)]);
        if (column_name.empty()) continue;

        auto* column = const_cast<ColumnInfo*>(table.find_column(column_name));
        if (!column) {
            warn("description for unknown column " + table.name + "." + column_name + " ignored");
            continue;
        }
        std::string desc;
        if (desc_col >= 0 && static_cast<std::size_t>(desc_col) < row.size()) {
            desc = trim(row[static_cast<std::size_t>(desc_col)]);
        }
        std::string value_desc;
        if (value_col >= 0 && static_cast<std::size_t>(value_col) < row.size()) {
            value_desc = trim(row[static_cast<std::size_t>(value_col)]);
        }
        if (!value_desc.empty()) {
            desc = desc.empty() ? value_desc : desc + "; " + value_desc;
        }
        if (!desc.empty()) column->description = desc;
    }
}

}  // namespace

const ColumnInfo* TableInfo::find_column(std::string_view column_name) const {
    for (const auto& c : columns) {
        if (iequals(c.name, column_name)) return &c;
    }
    return nullptr;
}

const TableInfo* DatabaseCatalog::find_table(std::string_view table_name) const {
    for (const auto& t : tables) {
        if (iequals(t.name, table_name)) return &t;
    }
    return nullptr;
}

std::vector<std::string> DatabaseCatalog::table_names() const {
    std::vector<std::string> names;
    names.reserve(tables.size());
    for (const auto& t : tables) names.push_back(t.name);
    return names;
}

DatabaseCatalog introspect(const std::filesystem::path& db_path, const SamplingOptions& opts) {
    if (!std::filesystem::exists(db_path)) throw FileNotFound(db_path.string());

    sqlite3* raw = nullptr;
    if (sqlite3_open_v2(db_path.string().c_str(), &raw, SQLITE_OPEN_READONLY, nullptr) !=
        SQLITE_OK) {
        sqlite3_close(raw);
        throw NotADatabase(db_path.string());
    }
    DbHandle db(raw);

    DatabaseCatalog catalog;
    catalog.db_id = db_path.stem().string();
    catalog.source_path = db_path.string();

    // SQLite reads the file lazily; a corrupt or non-database file surfaces here.
    {
        sqlite3_stmt* st = nullptr;
        int rc = sqlite3_prepare_v2(db.get(),
                                    "SELECT name FROM sqlite_master WHERE type='table' "
                                    "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY rowid",
                                    -1, &st, nullptr);
        if (rc != SQLITE_OK) {
            throw NotADatabase(db_path.string());
        }
        Stmt tables_stmt(st);
        while (sqlite3_step(tables_stmt.get()) == SQLITE_ROW) {
            TableInfo table;
            table.name = reinterpret_cast<const char*>(sqlite3_column_text(tables_stmt.get(), 0));
            catalog.tables.push_back(std::move(table));
        }
    }
    if (catalog.tables.empty()) throw EmptyDatabase(db_path.string());

    for (auto& table : catalog.tables) {
        {
            auto st = prepare(db.get(), "PRAGMA table_info(" + quote_ident(table.name) + ")");
            while (sqlite3_step(st.get()) == SQLITE_ROW) {
                ColumnInfo col;
                col.name = reinterpret_cast<const char*>(sqlite3_column_text(st.get(), 1));
                const unsigned char* type = sqlite3_column_text(st.get(), 2);
                col.data_type = type ? reinterpret_cast<const char*>(type) : "";
                col.is_primary_key = sqlite3_column_int(st.get(), 5) > 0;
                table.columns.push_back(std::move(col));
            }
        }
        if (table.columns.empty()) {
            throw IntrospectionFailed(table.name, "table has no columns");
        }
        {
            auto st = prepare(db.get(), "PRAGMA foreign_key_list(" + quote_ident(table.name) + ")");
            while (sqlite3_step(st.get()) == SQLITE_ROW) {
                ForeignKey fk;
                fk.local_column = reinterpret_cast<const char*>(sqlite3_column_text(st.get(), 3));
                fk.referenced_table =
                    reinterpret_cast<const char*>(sqlite3_column_text(st.get(), 2));
                const unsigned char* to = sqlite3_column_text(st.get(), 4);
                fk.referenced_column = to ? reinterpret_cast<const char*>(to) : "";
                table.foreign_keys.push_back(std::move(fk));
            }
        }
        for (auto& col : table.columns) {
            try {
                col.sample_values = collect_sample_values(db.get(), table.name, col.name, opts);
            } catch (const Error& e) {
                throw IntrospectionFailed(table.name + "." + col.name, e.what());
            }
        }
        try {
            table.sample_rows = collect_sample_rows(db.get(), table, opts);
        } catch (const Error& e) {
            throw IntrospectionFailed(table.name, e.what());
        }
    }

    // A foreign key declared without an explicit referenced column points at
    // the referenced table's primary key.
    for (auto& table : catalog.tables) {
        for (auto& fk : table.foreign_keys) {
            if (!fk.referenced_column.empty()) continue;
            if (const TableInfo* ref = catalog.find_table(fk.referenced_table)) {
                for (const auto& c : ref->columns) {
                    if (c.is_primary_key) {
                        fk.referenced_column = c.name;
                        break;
                    }
                }
            }
            if (fk.referenced_column.empty()) fk.referenced_column = "rowid";
        }
    }
    return catalog;
}

DatabaseCatalog attach_descriptions(DatabaseCatalog catalog,
                                    const std::filesystem::path& desc_dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(desc_dir, ec)) return catalog;

    for (auto& table : catalog.tables) {
        std::filesystem::path matched;
        for (const auto& entry : std::filesystem::directory_iterator(desc_dir, ec)) {
            if (!entry.is_regular_file()) continue;
            const auto& p = entry.path();
            if (to_lower(p.extension().string()) != ".csv") continue;
            if (iequals(trim(p.stem().string()), table.name)) {
                matched = p;
                break;
            }
        }
        if (matched.empty()) continue;
        try {
            apply_description_csv(catalog, table, matched);
        } catch (const Error& e) {
            warn(std::string("skipping malformed description file: ") + e.what());
        }
    }
    return catalog;
}

}  // namespace basesql
