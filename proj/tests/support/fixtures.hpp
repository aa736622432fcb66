#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "basesql/catalog.hpp"
#include "basesql/llm_gateway.hpp"
#include "basesql/pipeline.hpp"

namespace basesql::testing {

/// Fresh unique directory under the system temp root.
std::filesystem::path temp_dir(const std::string& hint);

/// Creates/opens a writable SQLite file and runs the statements.
void exec_all(const std::filesystem::path& db, const std::vector<std::string>& statements);

std::string file_digest(const std::filesystem::path& path);

/// Hand-built two-table catalog ("sales_demo") whose renders are pinned by
/// tests/golden/*.txt. No database file behind it.
DatabaseCatalog fixture_catalog();

/// Physical databases for execution/introspection tests.
void create_sales_db(const std::filesystem::path& path);
void create_shop_db(const std::filesystem::path& path);
void create_library_db(const std::filesystem::path& path);
void create_flights_db(const std::filesystem::path& path);

/// BIRD-layout directory with a california_schools-like database (frpm,
/// schools) and description CSVs.
void create_bird_fixture(const std::filesystem::path& root);

/// Three databases in BIRD layout plus 20 gold-annotated questions.
struct ToyBenchmark {
    std::filesystem::path root;
    std::vector<Task> tasks;
};
ToyBenchmark make_toy_benchmark(const std::filesystem::path& dir);

void write_benchmark_json(const std::vector<Task>& tasks, const std::filesystem::path& out);

/// Canned responses per stage; the last response of a queue repeats once the
/// queue drains. Received requests are kept for prompt inspection.
class ScriptedGateway : public ChatGateway {
public:
    void script(StageTag stage, std::vector<std::string> responses);
    std::vector<ChatRequest> requests() const;
    std::vector<ChatRequest> requests(StageTag stage) const;

private:
    ChatResponse do_complete(const ChatRequest& req) override;

    mutable std::mutex mutex_;
    std::map<StageTag, std::deque<std::string>> scripts_;
    std::vector<ChatRequest> received_;
};

/// Answers every request with the gold SQL of the question found in the
/// prompt; questions listed in `wrong` get a valid-but-wrong constant query.
class OracleGateway : public ChatGateway {
public:
    explicit OracleGateway(const std::vector<Task>& tasks,
                           std::set<std::string> wrong_question_ids = {});

    static std::string parse_question(const std::string& prompt);

private:
    ChatResponse do_complete(const ChatRequest& req) override;

    std::map<std::string, std::string> gold_by_question_;
    std::map<std::string, std::string> id_by_question_;
    std::set<std::string> wrong_;
};

/// Fails the test the moment anything calls it.
class ThrowingGateway : public ChatGateway {
private:
    ChatResponse do_complete(const ChatRequest& req) override;
};

}  // namespace basesql::testing
