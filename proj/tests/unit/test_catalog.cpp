#include <doctest.h>

#include <fstream>

#include <sqlite3.h>

#include "basesql/catalog.hpp"
#include "basesql/errors.hpp"
#include "support/fixtures.hpp"

using namespace basesql;
namespace bt = basesql::testing;

namespace {

// Rendered literals use shortest numeric forms ("5" for 5.0), so the probe
// accepts either text equality or numeric equality. Blob placeholders cannot
// round-trip and are the caller's job to skip.
bool value_occurs(const std::filesystem::path& db, const std::string& table,
                  const std::string& column, const std::string& rendered) {
    sqlite3* raw = nullptr;
    REQUIRE(sqlite3_open_v2(db.string().c_str(), &raw, SQLITE_OPEN_READONLY, nullptr) ==
            SQLITE_OK);
    std::string sql = "SELECT 1 FROM \"" + table + "\" WHERE CAST(\"" + column +
                      "\" AS TEXT) = ?1 OR \"" + column + "\" = CAST(?1 AS NUMERIC)";
    sqlite3_stmt* st = nullptr;
    REQUIRE(sqlite3_prepare_v2(raw, sql.c_str(), -1, &st, nullptr) == SQLITE_OK);
    sqlite3_bind_text(st, 1, rendered.c_str(), -1, SQLITE_TRANSIENT);
    bool found = sqlite3_step(st) == SQLITE_ROW;
    sqlite3_finalize(st);
    sqlite3_close(raw);
    return found;
}

bool catalogs_equal(const DatabaseCatalog& a, const DatabaseCatalog& b) {
    if (a.db_id != b.db_id || a.tables.size() != b.tables.size()) return false;
    for (std::size_t t = 0; t < a.tables.size(); ++t) {
        const auto& ta = a.tables[t];
        const auto& tb = b.tables[t];
        if (ta.name != tb.name || ta.sample_rows != tb.sample_rows) return false;
        if (ta.columns.size() != tb.columns.size()) return false;
        for (std::size_t c = 0; c < ta.columns.size(); ++c) {
            const auto& ca = ta.columns[c];
            const auto& cb = tb.columns[c];
            if (ca.name != cb.name || ca.data_type != cb.data_type ||
                ca.is_primary_key != cb.is_primary_key || ca.sample_values != cb.sample_values ||
                ca.description != cb.description) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("introspect a toy database") {
    auto dir = bt::temp_dir("catalog");
    auto db = dir / "toy.sqlite";
    bt::exec_all(db, {"CREATE TABLE t (a INTEGER PRIMARY KEY, b TEXT)",
                      "INSERT INTO t VALUES (1,'x'), (2,'y')"});

    DatabaseCatalog cat = introspect(db);
    REQUIRE(cat.tables.size() == 1);
    CHECK(cat.db_id == "toy");
    const TableInfo& t = cat.tables[0];
    CHECK(t.name == "t");
    REQUIRE(t.columns.size() == 2);
    CHECK(t.columns[0].is_primary_key);
    CHECK_FALSE(t.columns[1].is_primary_key);
    for (const auto& v : t.columns[1].sample_values) {
        CHECK((v == "x" || v == "y"));
    }
    CHECK(t.sample_rows.size() == 2);
    for (const auto& row : t.sample_rows) CHECK(row.size() == t.columns.size());
}

TEST_CASE("introspect error paths") {
    auto dir = bt::temp_dir("catalog_err");

    CHECK_THROWS_AS(introspect(dir / "missing.sqlite"), FileNotFound);

    auto not_db = dir / "not_a_db.sqlite";
    {
        std::ofstream f(not_db);
        f << "this is definitely not a sqlite file, padded to be long enough "
             "that the header check cannot possibly pass";
    }
    CHECK_THROWS_AS(introspect(not_db), NotADatabase);

    auto empty = dir / "empty.sqlite";
    bt::exec_all(empty, {"CREATE TABLE junk (x)", "DROP TABLE junk", "VACUUM"});
    CHECK_THROWS_AS(introspect(empty), EmptyDatabase);
}

TEST_CASE("system tables are excluded, declaration order preserved") {
    auto dir = bt::temp_dir("catalog_order");
    auto db = dir / "ordered.sqlite";
    bt::exec_all(db, {"CREATE TABLE zebra (z INTEGER)", "CREATE TABLE alpha (a INTEGER)",
                      "CREATE INDEX idx_z ON zebra(z)",  // forces sqlite_autoindex bookkeeping
                      "INSERT INTO zebra VALUES (1)", "INSERT INTO alpha VALUES (2)"});
    DatabaseCatalog cat = introspect(db);
    REQUIRE(cat.tables.size() == 2);
    CHECK(cat.tables[0].name == "zebra");
    CHECK(cat.tables[1].name == "alpha");
}

TEST_CASE("sample values: distinct, non-null, capped, literals render") {
    auto dir = bt::temp_dir("catalog_samples");
    auto db = dir / "vals.sqlite";
    bt::exec_all(db,
                 {"CREATE TABLE v (num REAL, txt TEXT, bin BLOB)",
                  "INSERT INTO v VALUES (5.0, 'dup', x'00112233'), (5.0, 'dup', NULL), "
                  "(7.25, NULL, NULL), (8.5, 'other', NULL), (9.5, 'third', NULL)"});
    SamplingOptions opts;
    opts.sample_value_limit = 3;
    DatabaseCatalog cat = introspect(db, opts);
    const TableInfo& v = cat.tables[0];

    const auto& nums = v.columns[0].sample_values;
    CHECK(nums == std::vector<std::string>{"5", "7.25", "8.5"});

    const auto& txts = v.columns[1].sample_values;
    CHECK(txts.size() == 3);  // NULL excluded, duplicates collapsed
    for (const auto& s : txts) CHECK(s != "NULL");

    REQUIRE(v.columns[2].sample_values.size() == 1);
    CHECK(v.columns[2].sample_values[0] == "<blob 4 bytes>");
}

TEST_CASE("long literals truncate to 80 chars with ellipsis") {
    auto dir = bt::temp_dir("catalog_trunc");
    auto db = dir / "long.sqlite";
    std::string long_value(200, 'a');
    bt::exec_all(db, {"CREATE TABLE t (s TEXT)", "INSERT INTO t VALUES ('" + long_value + "')"});
    DatabaseCatalog cat = introspect(db);
    REQUIRE(cat.tables[0].columns[0].sample_values.size() == 1);
    const std::string& v = cat.tables[0].columns[0].sample_values[0];
    CHECK(v.size() == 80);
    CHECK(v.substr(77) == "...");
}

TEST_CASE("re-introspection is deterministic; samples round-trip") {
    auto dir = bt::temp_dir("catalog_det");
    auto db = dir / "sales_demo.sqlite";
    bt::create_sales_db(db);

    SamplingOptions opts;
    opts.seed = 42;
    opts.sample_row_limit = 2;
    DatabaseCatalog a = introspect(db, opts);
    DatabaseCatalog b = introspect(db, opts);
    CHECK(catalogs_equal(a, b));

    for (const auto& table : a.tables) {
        CHECK(table.sample_rows.size() <= 2);
        for (const auto& col : table.columns) {
            for (const auto& v : col.sample_values) {
                CHECK(value_occurs(db, table.name, col.name, v));
            }
        }
    }
}

TEST_CASE("foreign keys resolve, including implicit referenced columns") {
    auto dir = bt::temp_dir("catalog_fk");
    auto db = dir / "fk.sqlite";
    bt::exec_all(db, {"CREATE TABLE parent (pid INTEGER PRIMARY KEY, label TEXT)",
                      "CREATE TABLE child (cid INTEGER PRIMARY KEY, "
                      "pid INTEGER REFERENCES parent)",  // no explicit column
                      "INSERT INTO parent VALUES (1,'a')", "INSERT INTO child VALUES (1,1)"});
    DatabaseCatalog cat = introspect(db);
    const TableInfo* child = cat.find_table("child");
    REQUIRE(child);
    REQUIRE(child->foreign_keys.size() == 1);
    CHECK(child->foreign_keys[0].local_column == "pid");
    CHECK(child->foreign_keys[0].referenced_table == "parent");
    CHECK(child->foreign_keys[0].referenced_column == "pid");
}

TEST_CASE("attach_descriptions: BIRD layout") {
    auto dir = bt::temp_dir("catalog_desc");
    bt::create_bird_fixture(dir);
    auto db = dir / "california_schools" / "california_schools.sqlite";
    DatabaseCatalog cat = introspect(db);

    SUBCASE("matching CSV rows populate descriptions") {
        cat = attach_descriptions(std::move(cat),
                                  dir / "california_schools" / "database_description");
        const TableInfo* frpm = cat.find_table("frpm");
        REQUIRE(frpm);
        REQUIRE(frpm->find_column("CDSCode"));
        CHECK(frpm->find_column("CDSCode")->description == "unique school code");
        CHECK(frpm->find_column("School Name")->description ==
              "name of the school, as registered");
        // value_description is appended when present
        const TableInfo* schools = cat.find_table("schools");
        REQUIRE(schools);
        CHECK(schools->find_column("City")->description == "city name; lowercase in some rows");
    }

    SUBCASE("absent directory leaves the catalog unchanged") {
        DatabaseCatalog same = attach_descriptions(cat, dir / "no_such_dir");
        CHECK(catalogs_equal(same, cat));
    }

    SUBCASE("malformed CSV is skipped, others still apply") {
        auto desc = dir / "california_schools" / "database_description";
        {
            std::ofstream bad(desc / "frpm.csv");  // overwrite with garbage
            bad << "original_column_name,column_description\n\"unterminated,quote\n";
        }
        DatabaseCatalog out = attach_descriptions(cat, desc);
        const TableInfo* frpm = out.find_table("frpm");
        CHECK_FALSE(frpm->find_column("CDSCode")->description.has_value());
        CHECK(out.find_table("schools")->find_column("County")->description == "county name");
    }
}
