#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace basesql {

struct BlobDigest {
    std::uint64_t size = 0;
    std::uint64_t hash = 0;
    auto operator<=>(const BlobDigest&) const = default;
};

/// One normalized cell: NULL, integer, real, text, or a blob digest.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, BlobDigest>;
using Row = std::vector<Value>;

enum class ExecStatus { kOk, kError, kTimeout };

struct ExecResult {
    ExecStatus status = ExecStatus::kOk;
    std::optional<std::string> error_message;
    std::vector<std::string> column_names;
    std::vector<Row> rows;
    bool truncated = false;
    std::int64_t elapsed_ms = 0;

    bool ok() const { return status == ExecStatus::kOk; }
    static ExecResult failure(std::string message);
};

/// Runs one statement read-only. SQL-level failures come back in-band as
/// status ERROR/TIMEOUT; only a missing/unopenable file throws.
ExecResult execute(const std::filesystem::path& db_path, const std::string& sql,
                   std::int64_t timeout_ms, std::int64_t row_cap);

struct MatchOptions {
    bool multiset = false;  // default: set semantics, matching the official EX evaluator
};

/// Execution-accuracy comparison: both OK and equal row sets after scalar
/// normalization (integral reals unify with integers); column names and row
/// order are ignored. Throws TruncatedComparison when either side is
/// truncated.
bool results_match(const ExecResult& pred, const ExecResult& gold, const MatchOptions& opts = {});

/// Renders a result for prompt embedding: column-name header, up to max_rows
/// pipe-separated rows, a "... (N rows total)" marker when rows were elided,
/// the whole thing capped at max_chars.
std::string format_for_prompt(const ExecResult& res, std::size_t max_rows, std::size_t max_chars);

/// Integral reals become integers; everything else is unchanged.
Value normalize_value(const Value& v);
std::string value_to_string(const Value& v);

}  // namespace basesql
