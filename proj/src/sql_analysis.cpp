#include "basesql/sql_analysis.hpp"

#include <sqlite3.h>

#include <cctype>
#include <memory>

#include "basesql/errors.hpp"
#include "basesql/text_util.hpp"

namespace basesql {
namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Position of the first standalone SELECT or WITH token, or npos.
std::size_t find_sql_start(std::string_view text) {
    std::string lower = to_lower(text);
    std::size_t best = std::string::npos;
    for (std::string_view kw : {"select", "with"}) {
        std::size_t pos = 0;
        while ((pos = lower.find(kw, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || !is_ident_char(lower[pos - 1]);
            std::size_t end = pos + kw.size();
            bool right_ok = end >= lower.size() || !is_ident_char(lower[end]);
            if (left_ok && right_ok) {
                best = std::min(best, pos);
                break;
            }
            pos = end;
        }
    }
    return best;
}

// Cuts everything after the semicolon that ends the statement, skipping
// semicolons inside quoted strings or identifiers.
std::string strip_after_terminator(std::string_view sql) {
    char quote = 0;
    for (std::size_t i = 0; i < sql.size(); ++i) {
        char c = sql[i];
        if (quote) {
            if (c == quote) {
                if (i + 1 < sql.size() && sql[i + 1] == quote) {
                    ++i;  // escaped quote
                } else {
                    quote = 0;
                }
            }
        } else if (c == '\'' || c == '"' || c == '`') {
            quote = c;
        } else if (c == ';') {
            return std::string(sql.substr(0, i + 1));
        }
    }
    return std::string(sql);
}

struct Fence {
    std::size_t begin;  // content start
    std::size_t end;    // content end
};

std::vector<Fence> find_fences(std::string_view text) {
    std::vector<Fence> fences;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t content = open + 3;
        // Skip an info string like "sql" up to end of line.
        std::size_t nl = text.find('\n', content);
        if (nl != std::string_view::npos) {
            std::string_view info = text.substr(content, nl - content);
            bool word_only = !info.empty();
            for (char c : info) {
                if (!is_ident_char(c) && c != '-' && c != '+') word_only = false;
            }
            if (word_only || trim(info).empty()) content = nl + 1;
        }
        std::size_t close = text.find("```", content);
        if (close == std::string_view::npos) break;
        fences.push_back({content, close});
        pos = close + 3;
    }
    return fences;
}

std::string finalize(std::string_view candidate) {
    return trim(strip_after_terminator(candidate));
}

SqlIdentifiers extract_via_sqlite(const std::string& sql, const DatabaseCatalog& catalog) {
    SqlIdentifiers ids;

    sqlite3* raw = nullptr;
    if (sqlite3_open_v2(catalog.source_path.c_str(), &raw, SQLITE_OPEN_READONLY, nullptr) !=
        SQLITE_OK) {
        sqlite3_close(raw);
        return ids;
    }
    struct Closer {
        void operator()(sqlite3* db) const { sqlite3_close(db); }
    };
    std::unique_ptr<sqlite3, Closer> db(raw);

    struct Collected {
        std::set<std::pair<std::string, std::string>> reads;
    } collected;

    sqlite3_set_authorizer(
        db.get(),
        [](void* ud, int action, const char* a, const char* b, const char*, const char*) -> int {
            if (action == SQLITE_READ && a) {
                auto* c = static_cast<Collected*>(ud);
                c->reads.emplace(a, b ? b : "");
            }
            return SQLITE_OK;
        },
        &collected);

    sqlite3_stmt* st = nullptr;
    int rc = sqlite3_prepare_v2(db.get(), sql.c_str(), -1, &st, nullptr);
    if (rc != SQLITE_OK || st == nullptr) {
        sqlite3_finalize(st);
        return ids;
    }
    sqlite3_finalize(st);

    ids.parse_ok = true;
    for (const auto& [table, column] : collected.reads) {
        const TableInfo* t = catalog.find_table(table);
        if (!t) continue;  // temp/internal object; never invent names
        ids.tables.insert(t->name);
        if (!column.empty()) ids.columns.emplace(t->name, column);
    }
    return ids;
}

}  // namespace

std::string extract_sql(const std::string& raw) {
    const auto fences = find_fences(raw);

    // Last fenced block that carries SQL wins.
    for (auto it = fences.rbegin(); it != fences.rend(); ++it) {
        std::string_view content(raw.data() + it->begin, it->end - it->begin);
        std::size_t start = find_sql_start(content);
        if (start != std::string_view::npos) {
            return finalize(content.substr(start));
        }
    }

    std::size_t start = find_sql_start(raw);
    if (start != std::string::npos) {
        // Never begin inside a fence tail; the token rule applies to the raw text.
        return finalize(std::string_view(raw).substr(start));
    }

    if (!fences.empty()) {
        const Fence& f = fences.back();
        return trim(std::string_view(raw.data() + f.begin, f.end - f.begin));
    }
    throw NoSqlFound();
}

SqlIdentifiers referenced_objects(const std::string& sql, const DatabaseCatalog& catalog) {
    if (trim(sql).empty()) return {};
    return extract_via_sqlite(sql, catalog);
}

std::set<std::string> tables_only(const std::string& sql, const DatabaseCatalog& catalog) {
    SqlIdentifiers ids = referenced_objects(sql, catalog);
    if (ids.parse_ok) return ids.tables;

    // Lexical fallback: catalog table names occurring as standalone tokens,
    // with quoted identifiers unwrapped ("t", `t`, [t]).
    std::set<std::string> found;
    std::string lower = to_lower(sql);
    for (const auto& table : catalog.tables) {
        std::string needle = to_lower(table.name);
        std::size_t pos = 0;
        while ((pos = lower.find(needle, pos)) != std::string::npos) {
            std::size_t end = pos + needle.size();
            char before = pos > 0 ? lower[pos - 1] : ' ';
            char after = end < lower.size() ? lower[end] : ' ';
            bool quoted = (before == '"' && after == '"') || (before == '`' && after == '`') ||
                          (before == '[' && after == ']');
            bool standalone = !is_ident_char(before) && !is_ident_char(after);
            if (quoted || standalone) {
                found.insert(table.name);
                break;
            }
            pos = end;
        }
    }
    return found;
}

}  // namespace basesql
