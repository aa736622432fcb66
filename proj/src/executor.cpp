#include "basesql/executor.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>

#include "basesql/errors.hpp"
#include "basesql/text_util.hpp"

namespace basesql {
namespace {

using Clock = std::chrono::steady_clock;

struct DbCloser {
    void operator()(sqlite3* db) const { sqlite3_close(db); }
};

struct StmtCloser {
    void operator()(sqlite3_stmt* st) const { sqlite3_finalize(st); }
};

struct Deadline {
    Clock::time_point at;
};

int progress_callback(void* ud) {
    auto* deadline = static_cast<Deadline*>(ud);
    return Clock::now() >= deadline->at ? 1 : 0;
}

Value read_value(sqlite3_stmt* st, int col) {
    switch (sqlite3_column_type(st, col)) {
        case SQLITE_NULL:
            return std::monostate{};
        case SQLITE_INTEGER:
            return static_cast<std::int64_t>(sqlite3_column_int64(st, col));
        case SQLITE_FLOAT:
            return sqlite3_column_double(st, col);
        case SQLITE_BLOB: {
            const void* data = sqlite3_column_blob(st, col);
            int n = sqlite3_column_bytes(st, col);
            BlobDigest d;
            d.size = static_cast<std::uint64_t>(n);
            d.hash = fnv1a({static_cast<const char*>(data), static_cast<std::size_t>(n)});
            return d;
        }
        default: {
            const unsigned char* text = sqlite3_column_text(st, col);
            return std::string(text ? reinterpret_cast<const char*>(text) : "");
        }
    }
}

// Total order over normalized values: type tag first, then value.
bool value_less(const Value& a, const Value& b) {
    if (a.index() != b.index()) return a.index() < b.index();
    switch (a.index()) {
        case 1: return std::get<1>(a) < std::get<1>(b);
        case 2: return std::get<2>(a) < std::get<2>(b);
        case 3: return std::get<3>(a) < std::get<3>(b);
        case 4: return std::get<4>(a) < std::get<4>(b);
        default: return false;  // both NULL
    }
}

bool row_less(const Row& a, const Row& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), value_less);
}

std::vector<Row> normalized_sorted_rows(const ExecResult& r, bool dedup) {
    std::vector<Row> rows;
    rows.reserve(r.rows.size());
    for (const auto& row : r.rows) {
        Row n;
        n.reserve(row.size());
        for (const auto& v : row) n.push_back(normalize_value(v));
        rows.push_back(std::move(n));
    }
    std::sort(rows.begin(), rows.end(), row_less);
    if (dedup) rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
}

}  // namespace

ExecResult ExecResult::failure(std::string message) {
    ExecResult r;
    r.status = ExecStatus::kError;
    r.error_message = std::move(message);
    return r;
}

Value normalize_value(const Value& v) {
    if (const double* d = std::get_if<double>(&v)) {
        if (*d == std::floor(*d) && std::abs(*d) <= 9007199254740992.0) {
            return static_cast<std::int64_t>(*d);
        }
    }
    return v;
}

std::string value_to_string(const Value& v) {
    switch (v.index()) {
        case 1: return std::to_string(std::get<1>(v));
        case 2: return format_double(std::get<2>(v));
        case 3: return std::get<3>(v);
        case 4: return "<blob " + std::to_string(std::get<4>(v).size) + " bytes>";
        default: return "NULL";
    }
}

ExecResult execute(const std::filesystem::path& db_path, const std::string& sql,
                   std::int64_t timeout_ms, std::int64_t row_cap) {
    if (!std::filesystem::exists(db_path)) throw InvalidDbPath(db_path.string());

    sqlite3* raw = nullptr;
    if (sqlite3_open_v2(db_path.string().c_str(), &raw, SQLITE_OPEN_READONLY, nullptr) !=
        SQLITE_OK) {
        sqlite3_close(raw);
        throw InvalidDbPath(db_path.string());
    }
    std::unique_ptr<sqlite3, DbCloser> db(raw);

    const auto start = Clock::now();
    Deadline deadline{start + std::chrono::milliseconds(timeout_ms)};
    sqlite3_progress_handler(db.get(), 1000, progress_callback, &deadline);

    auto elapsed_ms = [&start] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    };

    ExecResult result;

    sqlite3_stmt* st_raw = nullptr;
    if (sqlite3_prepare_v2(db.get(), sql.c_str(), -1, &st_raw, nullptr) != SQLITE_OK) {
        result = ExecResult::failure(sqlite3_errmsg(db.get()));
        result.elapsed_ms = elapsed_ms();
        return result;
    }
    std::unique_ptr<sqlite3_stmt, StmtCloser> st(st_raw);
    if (!st) {
        result = ExecResult::failure("empty statement");
        result.elapsed_ms = elapsed_ms();
        return result;
    }
    if (!sqlite3_stmt_readonly(st.get())) {
        result = ExecResult::failure("write statements are not allowed");
        result.elapsed_ms = elapsed_ms();
        return result;
    }

    const int ncol = sqlite3_column_count(st.get());
    for (int c = 0; c < ncol; ++c) {
        const char* name = sqlite3_column_name(st.get(), c);
        result.column_names.push_back(name ? name : "");
    }

    while (true) {
        int rc = sqlite3_step(st.get());
        if (rc == SQLITE_ROW) {
            if (static_cast<std::int64_t>(result.rows.size()) >= row_cap) {
                result.truncated = true;
                break;
            }
            Row row;
            row.reserve(static_cast<std::size_t>(ncol));
            for (int c = 0; c < ncol; ++c) row.push_back(read_value(st.get(), c));
            result.rows.push_back(std::move(row));
        } else if (rc == SQLITE_DONE) {
            break;
        } else if (rc == SQLITE_INTERRUPT || (rc == SQLITE_ERROR && Clock::now() >= deadline.at)) {
            result = ExecResult::failure("timeout");
            result.status = ExecStatus::kTimeout;
            break;
        } else {
            result = ExecResult::failure(sqlite3_errmsg(db.get()));
            break;
        }
    }

    result.elapsed_ms = elapsed_ms();
    return result;
}

bool results_match(const ExecResult& pred, const ExecResult& gold, const MatchOptions& opts) {
    if (pred.truncated || gold.truncated) throw TruncatedComparison();
    if (!pred.ok() || !gold.ok()) return false;

    auto a = normalized_sorted_rows(pred, !opts.multiset);
    auto b = normalized_sorted_rows(gold, !opts.multiset);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (row_less(a[i], b[i]) || row_less(b[i], a[i])) return false;
    }
    return true;
}

std::string format_for_prompt(const ExecResult& res, std::size_t max_rows, std::size_t max_chars) {
    std::string out;
    if (!res.ok()) {
        out = "Error: " + res.error_message.value_or("unknown error");
        return truncate_with_ellipsis(out, max_chars);
    }
    out = join(res.column_names, " | ") + "\n";
    const std::size_t shown = std::min(max_rows, res.rows.size());
    for (std::size_t i = 0; i < shown; ++i) {
        std::vector<std::string> cells;
        cells.reserve(res.rows[i].size());
        for (const auto& v : res.rows[i]) cells.push_back(value_to_string(v));
        out += join(cells, " | ") + "\n";
    }
    if (shown < res.rows.size()) {
        out += "... (" + std::to_string(res.rows.size()) + " rows total)\n";
    }
    return truncate_with_ellipsis(out, max_chars);
}

}  // namespace basesql
