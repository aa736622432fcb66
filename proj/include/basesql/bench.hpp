#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "basesql/catalog.hpp"
#include "basesql/llm_gateway.hpp"
#include "basesql/pipeline.hpp"

namespace basesql {

enum class BenchmarkFormat { kBird, kSpider };

BenchmarkFormat benchmark_format_from_string(std::string_view name);

/// Loads a benchmark JSON file. BIRD rows carry question_id/evidence/SQL/
/// difficulty; Spider rows carry question/query and get synthesized ids.
/// Throws SchemaMismatch naming the first offending row and field.
std::vector<Task> load_benchmark(const std::filesystem::path& path, BenchmarkFormat format);

struct LinkingMetrics {
    double accuracy = 0;       // fraction with pred == gold exactly
    double recall = 0;         // fraction with pred ⊇ gold
    double avg_precision = 0;  // mean per-example precision
    double avg_recall = 0;     // mean per-example recall
    double avg_f1 = 0;         // mean per-example harmonic mean
    std::size_t n = 0;
};

/// Set-based linking metrics, case-normalized. Empty pred with empty gold
/// counts precision 1; empty pred with non-empty gold counts 0.
LinkingMetrics linking_metrics(const std::vector<std::set<std::string>>& preds,
                               const std::vector<std::set<std::string>>& golds);
LinkingMetrics linking_metrics(const std::vector<LinkingPrediction>& preds,
                               const std::vector<std::set<std::string>>& golds);

/// BIRD-layout database directory: <root>/<db_id>/<db_id>.sqlite plus an
/// optional database_description/ per database. Catalogs are introspected
/// once and cached; safe for concurrent lookups.
class DatabaseRoot {
public:
    DatabaseRoot(std::filesystem::path root, SamplingOptions opts = {});

    std::filesystem::path db_path(const std::string& db_id) const;
    const DatabaseCatalog& catalog(const std::string& db_id);

    CatalogProvider provider();

private:
    std::filesystem::path root_;
    SamplingOptions opts_;
    std::mutex mutex_;
    std::map<std::string, DatabaseCatalog> cache_;
};

struct QuestionReport {
    std::string question_id;
    std::string final_sql;
    bool ex_match = false;
    std::uint64_t call_count = 0;
    std::int64_t elapsed_ms = 0;
    std::string failure;  // non-empty when the pipeline aborted or comparison failed
    std::string difficulty;
};

struct EvalReport {
    std::vector<QuestionReport> per_question;
    double aggregate_ex = 0;
    std::map<std::string, double> splits;  // difficulty -> EX
    std::string config_fingerprint;

    nlohmann::json to_json() const;
    std::string to_text() const;
    std::string fingerprint() const;
};

struct EvalOptions {
    int jobs = 1;
    std::filesystem::path trace_dir;  // per-question trace JSON when set
};

/// Runs the pipeline over every task and scores execution accuracy against
/// the gold SQL. Pipeline failures count as misses and are recorded.
EvalReport evaluate(const std::vector<Task>& tasks, DatabaseRoot& dbs, const PipelineConfig& cfg,
                    ChatGateway& gateway, const EvalOptions& opts = {});

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& text_path);

}  // namespace basesql
