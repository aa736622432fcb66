#include <doctest.h>

#include <algorithm>
#include <random>

#include "basesql/errors.hpp"
#include "basesql/executor.hpp"
#include "support/fixtures.hpp"

using namespace basesql;
namespace bt = basesql::testing;

namespace {

ExecResult ok_result(std::vector<Row> rows, std::vector<std::string> columns = {"c0"}) {
    ExecResult r;
    r.column_names = std::move(columns);
    r.rows = std::move(rows);
    return r;
}

// Independent oracle: render every row to a canonical string after the same
// scalar normalization, then sort + dedup + compare.
bool oracle_match(const ExecResult& pred, const ExecResult& gold) {
    if (!pred.ok() || !gold.ok()) return false;
    auto canon = [](const ExecResult& r) {
        std::vector<std::string> rows;
        for (const auto& row : r.rows) {
            std::string s;
            for (const auto& v : row) {
                Value n = normalize_value(v);
                s += std::to_string(n.index()) + ":" + value_to_string(n) + "\x1f";
            }
            rows.push_back(std::move(s));
        }
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        return rows;
    };
    return canon(pred) == canon(gold);
}

Value random_value(std::mt19937_64& rng) {
    switch (rng() % 5) {
        case 0: return std::monostate{};
        case 1: return static_cast<std::int64_t>(rng() % 4);
        case 2: return static_cast<double>(rng() % 8) / 2.0;  // often integral
        case 3: return std::string(1, static_cast<char>('a' + rng() % 3));
        default: return std::string("word");
    }
}

ExecResult random_result(std::mt19937_64& rng, std::size_t max_rows = 20) {
    std::size_t nrows = rng() % (max_rows + 1);
    std::size_t ncols = 1 + rng() % 3;
    ExecResult r;
    for (std::size_t c = 0; c < ncols; ++c) r.column_names.push_back("c" + std::to_string(c));
    for (std::size_t i = 0; i < nrows; ++i) {
        Row row;
        for (std::size_t c = 0; c < ncols; ++c) row.push_back(random_value(rng));
        r.rows.push_back(std::move(row));
    }
    return r;
}

}  // namespace

TEST_CASE("execute basics") {
    auto dir = bt::temp_dir("exec");
    auto db = dir / "sales_demo.sqlite";
    bt::create_sales_db(db);

    SUBCASE("SELECT 1") {
        ExecResult r = execute(db, "SELECT 1", 1000, 100);
        REQUIRE(r.ok());
        REQUIRE(r.rows.size() == 1);
        CHECK(r.rows[0][0] == Value{std::int64_t{1}});
        CHECK_FALSE(r.truncated);
    }

    SUBCASE("missing table is an in-band error") {
        ExecResult r = execute(db, "SELECT * FROM no_such_table", 1000, 100);
        CHECK(r.status == ExecStatus::kError);
        REQUIRE(r.error_message);
        CHECK(r.error_message->find("no_such_table") != std::string::npos);
        CHECK(r.rows.empty());
    }

    SUBCASE("write statements are refused") {
        for (const char* sql :
             {"INSERT INTO customers VALUES (9,'Mallory','2022-01-01')",
              "UPDATE customers SET name='x'", "DELETE FROM orders", "DROP TABLE customers"}) {
            ExecResult r = execute(db, sql, 1000, 100);
            CHECK(r.status == ExecStatus::kError);
        }
    }

    SUBCASE("execution never mutates the file, error paths included") {
        std::string before = bt::file_digest(db);
        (void)execute(db, "SELECT * FROM customers", 1000, 100);
        (void)execute(db, "DELETE FROM orders", 1000, 100);
        (void)execute(db, "SELEC nonsense", 1000, 100);
        CHECK(bt::file_digest(db) == before);
    }

    SUBCASE("row cap sets truncated") {
        ExecResult r = execute(db, "SELECT * FROM customers", 1000, 2);
        CHECK(r.ok());
        CHECK(r.rows.size() == 2);
        CHECK(r.truncated);
    }

    SUBCASE("missing database throws") {
        CHECK_THROWS_AS(execute(dir / "nope.sqlite", "SELECT 1", 1000, 100), InvalidDbPath);
    }
}

TEST_CASE("unbounded recursive CTE hits the timeout") {
    auto dir = bt::temp_dir("exec_timeout");
    auto db = dir / "t.sqlite";
    bt::exec_all(db, {"CREATE TABLE t (x INTEGER)", "INSERT INTO t VALUES (1)"});
    ExecResult r = execute(db,
                           "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) "
                           "SELECT sum(x) FROM c",
                           100, 1000000);
    CHECK(r.status == ExecStatus::kTimeout);
    REQUIRE(r.error_message);
    CHECK(*r.error_message == "timeout");
    CHECK(r.elapsed_ms >= 100);
}

TEST_CASE("results_match semantics") {
    ExecResult a = ok_result({{std::int64_t{1}, std::string("a")},
                              {std::int64_t{2}, std::string("b")}},
                             {"x", "y"});
    ExecResult b = ok_result({{std::int64_t{2}, std::string("b")},
                              {std::int64_t{1}, std::string("a")}},
                             {"p", "q"});

    SUBCASE("row order and column names are ignored") { CHECK(results_match(a, b)); }

    SUBCASE("set semantics collapse duplicates") {
        ExecResult one = ok_result({{std::int64_t{1}}});
        ExecResult two = ok_result({{std::int64_t{1}}, {std::int64_t{1}}});
        CHECK(results_match(one, two));
        MatchOptions strict;
        strict.multiset = true;
        CHECK_FALSE(results_match(one, two, strict));
    }

    SUBCASE("error vs ok never matches") {
        ExecResult err = ExecResult::failure("boom");
        CHECK_FALSE(results_match(err, a));
        CHECK_FALSE(results_match(a, err));
        CHECK_FALSE(results_match(err, err));
    }

    SUBCASE("integral reals unify with integers") {
        ExecResult ints = ok_result({{std::int64_t{2}}});
        ExecResult reals = ok_result({{2.0}});
        CHECK(results_match(ints, reals));
        ExecResult frac = ok_result({{2.5}});
        CHECK_FALSE(results_match(ints, frac));
    }

    SUBCASE("null equals null, text is byte-exact") {
        CHECK(results_match(ok_result({{std::monostate{}}}), ok_result({{std::monostate{}}})));
        CHECK_FALSE(results_match(ok_result({{std::string("A")}}),
                                  ok_result({{std::string("a")}})));
    }

    SUBCASE("truncated comparison throws") {
        ExecResult t = a;
        t.truncated = true;
        CHECK_THROWS_AS(results_match(t, b), TruncatedComparison);
        CHECK_THROWS_AS(results_match(b, t), TruncatedComparison);
    }
}

TEST_CASE("results_match agrees with a brute-force oracle") {
    std::mt19937_64 rng(7);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        ExecResult a = random_result(rng);
        // Half the pairs share a base set (shuffled), half are independent.
        ExecResult b;
        if (i % 2 == 0) {
            b = a;
            std::shuffle(b.rows.begin(), b.rows.end(), rng);
            if (!b.rows.empty() && rng() % 2) b.rows.push_back(b.rows.front());  // dup
        } else {
            b = random_result(rng);
        }
        CHECK(results_match(a, b) == oracle_match(a, b));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("results_match is an equivalence relation on OK results") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        ExecResult a = random_result(rng, 4);
        ExecResult b = random_result(rng, 4);
        ExecResult c = random_result(rng, 4);
        CHECK(results_match(a, a));
        CHECK(results_match(a, b) == results_match(b, a));
        if (results_match(a, b) && results_match(b, c)) CHECK(results_match(a, c));
    }
}

TEST_CASE("format_for_prompt") {
    SUBCASE("small result: header plus rows, no ellipsis") {
        ExecResult r = ok_result({{std::int64_t{1}, std::string("a")},
                                  {std::int64_t{2}, std::string("b")}},
                                 {"id", "name"});
        std::string out = format_for_prompt(r, 10, 2000);
        CHECK(out == "id | name\n1 | a\n2 | b\n");
    }

    SUBCASE("long result: capped rows plus total-count line") {
        ExecResult r;
        r.column_names = {"x"};
        for (int i = 0; i < 100; ++i) r.rows.push_back({std::int64_t{i}});
        std::string out = format_for_prompt(r, 10, 4000);
        CHECK(out.find("... (100 rows total)") != std::string::npos);
        // header + 10 rows + marker
        CHECK(std::count(out.begin(), out.end(), '\n') == 12);
    }

    SUBCASE("timeout renders the fixed message") {
        ExecResult r;
        r.status = ExecStatus::kTimeout;
        r.error_message = "timeout";
        CHECK(format_for_prompt(r, 10, 2000) == "Error: timeout");
    }

    SUBCASE("hard character cap") {
        ExecResult r;
        r.column_names = {"x"};
        for (int i = 0; i < 50; ++i) r.rows.push_back({std::string(40, 'y')});
        std::string out = format_for_prompt(r, 50, 200);
        CHECK(out.size() == 200);
        CHECK(out.substr(197) == "...");
    }
}
