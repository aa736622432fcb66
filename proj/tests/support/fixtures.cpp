#include "support/fixtures.hpp"

#include <sqlite3.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "basesql/text_util.hpp"

namespace basesql::testing {

using nlohmann::json;

std::filesystem::path temp_dir(const std::string& hint) {
    static std::atomic<unsigned> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("basesql_" + hint + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

void exec_all(const std::filesystem::path& db, const std::vector<std::string>& statements) {
    sqlite3* raw = nullptr;
    if (sqlite3_open(db.string().c_str(), &raw) != SQLITE_OK) {
        sqlite3_close(raw);
        throw std::runtime_error("cannot create fixture db " + db.string());
    }
    for (const auto& sql : statements) {
        char* err = nullptr;
        if (sqlite3_exec(raw, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            std::string message = err ? err : "unknown";
            sqlite3_free(err);
            sqlite3_close(raw);
            throw std::runtime_error("fixture statement failed: " + sql + " (" + message + ")");
        }
    }
    sqlite3_close(raw);
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return fnv1a_hex(buf.str());
}

DatabaseCatalog fixture_catalog() {
    DatabaseCatalog cat;
    cat.db_id = "sales_demo";

    TableInfo customers;
    customers.name = "customers";
    customers.columns = {
        {"id", "INTEGER", std::nullopt, true, {"1", "2", "3"}},
        {"name", "TEXT", "customer display name", false, {"Alice", "Bob", "Cara"}},
        {"signup_date", "TEXT", std::nullopt, false,
         {"2021-01-05", "2021-02-11", "2021-03-02"}},
    };
    customers.sample_rows = {{"1", "Alice", "2021-01-05"},
                             {"2", "Bob", "2021-02-11"},
                             {"3", "Cara", "2021-03-02"}};

    TableInfo orders;
    orders.name = "orders";
    orders.columns = {
        {"order_id", "INTEGER", std::nullopt, true, {"10", "11", "12"}},
        {"customer_id", "INTEGER", std::nullopt, false, {"1", "2"}},
        {"amount", "REAL", "order total in USD", false, {"19.5", "5", "7.25"}},
        {"note", "TEXT", std::nullopt, false, {"first", "gift"}},
    };
    orders.foreign_keys = {{"customer_id", "customers", "id"}};
    orders.sample_rows = {{"10", "1", "19.5", "first"},
                          {"11", "1", "5", "NULL"},
                          {"12", "2", "7.25", "gift"}};

    cat.tables = {std::move(customers), std::move(orders)};
    return cat;
}

void create_sales_db(const std::filesystem::path& path) {
    exec_all(path, {
                       "CREATE TABLE customers (id INTEGER PRIMARY KEY, name TEXT, "
                       "signup_date TEXT)",
                       "CREATE TABLE orders (order_id INTEGER PRIMARY KEY, customer_id INTEGER, "
                       "amount REAL, note TEXT, "
                       "FOREIGN KEY (customer_id) REFERENCES customers(id))",
                       "INSERT INTO customers VALUES (1,'Alice','2021-01-05'), "
                       "(2,'Bob','2021-02-11'), (3,'Cara','2021-03-02'), (4,'Dan','2021-04-20')",
                       "INSERT INTO orders VALUES (10,1,19.5,'first'), (11,1,5.0,NULL), "
                       "(12,2,7.25,'gift'), (13,3,100.0,'bulk')",
                   });
}

void create_shop_db(const std::filesystem::path& path) {
    exec_all(path, {
                       "CREATE TABLE customers (id INTEGER PRIMARY KEY, name TEXT, city TEXT)",
                       "CREATE TABLE orders (id INTEGER PRIMARY KEY, customer_id INTEGER, "
                       "amount REAL, FOREIGN KEY (customer_id) REFERENCES customers(id))",
                       "CREATE TABLE products (id INTEGER PRIMARY KEY, title TEXT, price REAL)",
                       "INSERT INTO customers VALUES (1,'Alice','Springfield'), "
                       "(2,'Bob','Shelbyville'), (3,'Cara','Springfield'), (4,'Dan','Ogdenville')",
                       "INSERT INTO orders VALUES (1,1,19.5),(2,1,5.0),(3,2,7.25),"
                       "(4,3,100.0),(5,3,1.0),(6,4,42.0)",
                       "INSERT INTO products VALUES (1,'Widget',9.99),(2,'Gadget',19.99),"
                       "(3,'Doohickey',0.5)",
                   });
}

void create_library_db(const std::filesystem::path& path) {
    exec_all(path, {
                       "CREATE TABLE books (id INTEGER PRIMARY KEY, title TEXT, year INTEGER)",
                       "CREATE TABLE members (id INTEGER PRIMARY KEY, name TEXT)",
                       "CREATE TABLE loans (id INTEGER PRIMARY KEY, book_id INTEGER, "
                       "member_id INTEGER, returned INTEGER, "
                       "FOREIGN KEY (book_id) REFERENCES books(id), "
                       "FOREIGN KEY (member_id) REFERENCES members(id))",
                       "INSERT INTO books VALUES (1,'Dune',1965),(2,'Emma',1815),"
                       "(3,'Hamlet',1603),(4,'Ulysses',1922)",
                       "INSERT INTO members VALUES (1,'Eve'),(2,'Frank')",
                       "INSERT INTO loans VALUES (1,1,1,0),(2,2,1,1),(3,3,2,0)",
                   });
}

void create_flights_db(const std::filesystem::path& path) {
    exec_all(path, {
                       "CREATE TABLE airports (code TEXT PRIMARY KEY, city TEXT)",
                       "CREATE TABLE flights (id INTEGER PRIMARY KEY, origin TEXT, dest TEXT, "
                       "delay REAL, "
                       "FOREIGN KEY (origin) REFERENCES airports(code), "
                       "FOREIGN KEY (dest) REFERENCES airports(code))",
                       "INSERT INTO airports VALUES ('AAA','Aville'),('BBB','Bville'),"
                       "('CCC','Cville')",
                       "INSERT INTO flights VALUES (1,'AAA','BBB',5.0),(2,'BBB','CCC',0.0),"
                       "(3,'AAA','CCC',12.5),(4,'CCC','AAA',-2.0)",
                   });
}

void create_bird_fixture(const std::filesystem::path& root) {
    const auto db_dir = root / "california_schools";
    std::filesystem::create_directories(db_dir / "database_description");
    exec_all(db_dir / "california_schools.sqlite",
             {
                 "CREATE TABLE frpm (CDSCode TEXT PRIMARY KEY, \"School Name\" TEXT, "
                 "\"Enrollment (K-12)\" REAL)",
                 "CREATE TABLE schools (CDSCode TEXT PRIMARY KEY, County TEXT, City TEXT)",
                 "INSERT INTO frpm VALUES ('01100170109835','FAME Public Charter',1087.0),"
                 "('01100170112607','Envision Academy',395.0)",
                 "INSERT INTO schools VALUES ('01100170109835','Alameda','Newark'),"
                 "('01100170112607','Alameda','Oakland')",
             });
    {
        std::ofstream csv(db_dir / "database_description" / "frpm.csv");
        csv << "original_column_name,column_description,value_description\n";
        csv << "CDSCode,unique school code,\n";
        csv << "School Name,\"name of the school, as registered\",\n";
        csv << "ghost_column,never matches anything,\n";
    }
    {
        std::ofstream csv(db_dir / "database_description" / "schools.csv");
        csv << "original_column_name,column_description,value_description\n";
        csv << "County,county name,\n";
        csv << "City,city name,lowercase in some rows\n";
    }
}

ToyBenchmark make_toy_benchmark(const std::filesystem::path& dir) {
    ToyBenchmark bench;
    bench.root = dir;
    std::filesystem::create_directories(dir / "shop");
    std::filesystem::create_directories(dir / "library");
    std::filesystem::create_directories(dir / "flights");
    create_shop_db(dir / "shop" / "shop.sqlite");
    create_library_db(dir / "library" / "library.sqlite");
    create_flights_db(dir / "flights" / "flights.sqlite");

    struct Q {
        const char* db;
        const char* question;
        const char* gold;
        const char* evidence;
    };
    const Q questions[] = {
        {"shop", "How many customers are there?", "SELECT count(*) FROM customers", ""},
        {"shop", "List the names of customers living in Springfield.",
         "SELECT name FROM customers WHERE city = 'Springfield'",
         "Springfield is a value of the city column"},
        {"shop", "What is the total amount over all orders?", "SELECT sum(amount) FROM orders",
         ""},
        {"shop", "Which customers placed an order above 50?",
         "SELECT DISTINCT c.name FROM customers c JOIN orders o ON c.id = o.customer_id "
         "WHERE o.amount > 50",
         ""},
        {"shop", "What is the title of the most expensive product?",
         "SELECT title FROM products ORDER BY price DESC LIMIT 1", ""},
        {"shop", "How many orders did each customer place?",
         "SELECT customer_id, count(*) FROM orders GROUP BY customer_id", ""},
        {"library", "Which books were published before 1900?",
         "SELECT title FROM books WHERE year < 1900", ""},
        {"library", "How many loans are still out?",
         "SELECT count(*) FROM loans WHERE returned = 0", "returned = 0 means not yet returned"},
        {"library", "Which members still have a book out?",
         "SELECT DISTINCT m.name FROM members m JOIN loans l ON m.id = l.member_id "
         "WHERE l.returned = 0",
         ""},
        {"library", "What is the oldest book?", "SELECT title FROM books ORDER BY year LIMIT 1",
         ""},
        {"library", "How many books does the library own?", "SELECT count(*) FROM books", ""},
        {"flights", "What is the average delay?", "SELECT avg(delay) FROM flights", ""},
        {"flights", "List flight ids departing from AAA.",
         "SELECT id FROM flights WHERE origin = 'AAA'", "AAA is an airport code"},
        {"flights", "Which cities can be reached from AAA?",
         "SELECT DISTINCT a.city FROM flights f JOIN airports a ON f.dest = a.code "
         "WHERE f.origin = 'AAA'",
         ""},
        {"flights", "How many flights arrive at CCC?",
         "SELECT count(*) FROM flights WHERE dest = 'CCC'", ""},
        {"shop", "What is the cheapest product called?",
         "SELECT title FROM products ORDER BY price LIMIT 1", ""},
        {"library", "Which books has Eve borrowed?",
         "SELECT b.title FROM books b JOIN loans l ON b.id = l.book_id "
         "JOIN members m ON m.id = l.member_id WHERE m.name = 'Eve'",
         ""},
        {"flights", "What is the maximum delay?", "SELECT max(delay) FROM flights", ""},
        {"shop", "Which customers never placed an order?",
         "SELECT name FROM customers WHERE id NOT IN (SELECT customer_id FROM orders)", ""},
        {"flights", "List all airport cities.", "SELECT city FROM airports", ""},
    };

    const char* difficulties[] = {"simple", "moderate", "challenging"};
    int i = 0;
    for (const auto& q : questions) {
        Task t;
        t.question_id = "q" + std::to_string(i);
        t.db_id = q.db;
        t.question = q.question;
        t.gold_sql = q.gold;
        if (q.evidence[0] != '\0') t.evidence = q.evidence;
        t.difficulty = difficulties[i % 3];
        bench.tasks.push_back(std::move(t));
        ++i;
    }
    return bench;
}

void write_benchmark_json(const std::vector<Task>& tasks, const std::filesystem::path& out) {
    json doc = json::array();
    for (const auto& t : tasks) {
        json row{{"question_id", t.question_id}, {"db_id", t.db_id}, {"question", t.question}};
        row["evidence"] = t.evidence.value_or("");
        if (t.gold_sql) row["SQL"] = *t.gold_sql;
        if (t.difficulty) row["difficulty"] = *t.difficulty;
        doc.push_back(std::move(row));
    }
    std::ofstream file(out);
    file << doc.dump(2) << "\n";
}

void ScriptedGateway::script(StageTag stage, std::vector<std::string> responses) {
    std::lock_guard lock(mutex_);
    auto& queue = scripts_[stage];
    for (auto& r : responses) queue.push_back(std::move(r));
}

std::vector<ChatRequest> ScriptedGateway::requests() const {
    std::lock_guard lock(mutex_);
    return received_;
}

std::vector<ChatRequest> ScriptedGateway::requests(StageTag stage) const {
    std::lock_guard lock(mutex_);
    std::vector<ChatRequest> out;
    for (const auto& r : received_) {
        if (r.stage == stage) out.push_back(r);
    }
    return out;
}

ChatResponse ScriptedGateway::do_complete(const ChatRequest& req) {
    std::lock_guard lock(mutex_);
    received_.push_back(req);
    auto it = scripts_.find(req.stage);
    if (it == scripts_.end() || it->second.empty()) {
        throw std::runtime_error("ScriptedGateway: no script for stage " +
                                 std::string(to_string(req.stage)));
    }
    ChatResponse resp;
    resp.content = it->second.front();
    if (it->second.size() > 1) it->second.pop_front();  // last response repeats
    return resp;
}

OracleGateway::OracleGateway(const std::vector<Task>& tasks, std::set<std::string> wrong)
    : wrong_(std::move(wrong)) {
    for (const auto& t : tasks) {
        gold_by_question_[t.question] = t.gold_sql.value_or("");
        id_by_question_[t.question] = t.question_id;
    }
}

std::string OracleGateway::parse_question(const std::string& prompt) {
    const std::string marker = "Question: ";
    std::size_t pos = prompt.find(marker);
    if (pos == std::string::npos) return "";
    std::size_t end = prompt.find('\n', pos);
    return prompt.substr(pos + marker.size(),
                         end == std::string::npos ? std::string::npos : end - pos - marker.size());
}

ChatResponse OracleGateway::do_complete(const ChatRequest& req) {
    const std::string question = parse_question(req.messages.back().content);
    auto it = gold_by_question_.find(question);
    if (it == gold_by_question_.end()) {
        throw std::runtime_error("OracleGateway: unknown question: " + question);
    }
    ChatResponse resp;
    if (wrong_.count(id_by_question_.at(question))) {
        resp.content = "SELECT -987654321";
    } else {
        resp.content = it->second;
    }
    return resp;
}

ChatResponse ThrowingGateway::do_complete(const ChatRequest&) {
    throw std::runtime_error("gateway must not be called");
}

}  // namespace basesql::testing
