#include "basesql/bench.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "basesql/errors.hpp"
#include "basesql/executor.hpp"
#include "basesql/text_util.hpp"

namespace basesql {

using nlohmann::json;

BenchmarkFormat benchmark_format_from_string(std::string_view name) {
    if (iequals(name, "bird")) return BenchmarkFormat::kBird;
    if (iequals(name, "spider")) return BenchmarkFormat::kSpider;
    throw ConfigError("unknown benchmark format: " + std::string(name));
}

std::vector<Task> load_benchmark(const std::filesystem::path& path, BenchmarkFormat format) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read benchmark file: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw ConfigError("benchmark file is not a JSON array: " + path.string());
    }

    std::vector<Task> tasks;
    tasks.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& row = doc[i];
        auto require = [&](const char* field) -> const json& {
            if (!row.contains(field) || row[field].is_null()) throw SchemaMismatch(field, i);
            return row[field];
        };

        Task t;
        t.db_id = require("db_id").get<std::string>();
        t.question = require("question").get<std::string>();
        if (t.question.empty()) throw SchemaMismatch("question", i);

        if (format == BenchmarkFormat::kBird) {
            if (row.contains("question_id") && !row["question_id"].is_null()) {
                const json& qid = row["question_id"];
                t.question_id = qid.is_string() ? qid.get<std::string>()
                                                : std::to_string(qid.get<std::int64_t>());
            } else {
                t.question_id = std::to_string(i);
            }
            if (row.contains("evidence") && row["evidence"].is_string()) {
                std::string ev = row["evidence"].get<std::string>();
                if (!ev.empty()) t.evidence = std::move(ev);
            }
            if (row.contains("SQL") && row["SQL"].is_string()) {
                t.gold_sql = row["SQL"].get<std::string>();
            }
            if (row.contains("difficulty") && row["difficulty"].is_string()) {
                t.difficulty = row["difficulty"].get<std::string>();
            }
        } else {
            t.question_id = std::to_string(i);
            if (row.contains("query") && row["query"].is_string()) {
                t.gold_sql = row["query"].get<std::string>();
            }
        }
        tasks.push_back(std::move(t));
    }
    return tasks;
}

namespace {

std::set<std::string> lower_set(const std::set<std::string>& s) {
    std::set<std::string> out;
    for (const auto& x : s) out.insert(to_lower(x));
    return out;
}

}  // namespace

LinkingMetrics linking_metrics(const std::vector<std::set<std::string>>& preds,
                               const std::vector<std::set<std::string>>& golds) {
    if (preds.size() != golds.size()) throw LengthMismatch();

    LinkingMetrics m;
    m.n = preds.size();
    if (m.n == 0) return m;

    double exact = 0, superset = 0, p_sum = 0, r_sum = 0, f1_sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const std::set<std::string> pred = lower_set(preds[i]);
        const std::set<std::string> gold = lower_set(golds[i]);

        std::size_t inter = 0;
        for (const auto& t : pred) inter += gold.count(t);

        if (pred == gold) exact += 1;
        if (inter == gold.size()) superset += 1;

        double p = pred.empty() ? (gold.empty() ? 1.0 : 0.0)
                                : static_cast<double>(inter) / static_cast<double>(pred.size());
        double r = gold.empty() ? 1.0
                                : static_cast<double>(inter) / static_cast<double>(gold.size());
        double f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
        p_sum += p;
        r_sum += r;
        f1_sum += f1;
    }
    const auto n = static_cast<double>(m.n);
    m.accuracy = exact / n;
    m.recall = superset / n;
    m.avg_precision = p_sum / n;
    m.avg_recall = r_sum / n;
    m.avg_f1 = f1_sum / n;
    return m;
}

LinkingMetrics linking_metrics(const std::vector<LinkingPrediction>& preds,
                               const std::vector<std::set<std::string>>& golds) {
    std::vector<std::set<std::string>> sets;
    sets.reserve(preds.size());
    for (const auto& p : preds) {
        sets.emplace_back(p.predicted_tables.begin(), p.predicted_tables.end());
    }
    return linking_metrics(sets, golds);
}

DatabaseRoot::DatabaseRoot(std::filesystem::path root, SamplingOptions opts)
    : root_(std::move(root)), opts_(opts) {}

std::filesystem::path DatabaseRoot::db_path(const std::string& db_id) const {
    return root_ / db_id / (db_id + ".sqlite");
}

const DatabaseCatalog& DatabaseRoot::catalog(const std::string& db_id) {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(db_id);
    if (it != cache_.end()) return it->second;

    DatabaseCatalog cat = introspect(db_path(db_id), opts_);
    cat = attach_descriptions(std::move(cat), root_ / db_id / "database_description");
    return cache_.emplace(db_id, std::move(cat)).first->second;
}

CatalogProvider DatabaseRoot::provider() {
    return [this](const std::string& db_id) -> const DatabaseCatalog& { return catalog(db_id); };
}

json EvalReport::to_json() const {
    json per = json::array();
    for (const auto& q : per_question) {
        per.push_back({{"question_id", q.question_id},
                       {"final_sql", q.final_sql},
                       {"ex_match", q.ex_match},
                       {"call_count", q.call_count},
                       {"elapsed_ms", q.elapsed_ms},
                       {"failure", q.failure},
                       {"difficulty", q.difficulty}});
    }
    return json{{"n", per_question.size()},
                {"aggregate_ex", aggregate_ex},
                {"splits", splits},
                {"config_fingerprint", config_fingerprint},
                {"per_question", std::move(per)}};
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    char line[160];

    std::snprintf(line, sizeof line, "%-28s %8s %6s\n", "Metric", "Value", "N");
    out << line;
    std::snprintf(line, sizeof line, "%-28s %8.2f %6zu\n", "EX (all)", aggregate_ex * 100.0,
                  per_question.size());
    out << line;
    for (const auto& [split, ex] : splits) {
        std::size_t count = 0;
        for (const auto& q : per_question) count += q.difficulty == split;
        std::snprintf(line, sizeof line, "%-28s %8.2f %6zu\n", ("EX (" + split + ")").c_str(),
                      ex * 100.0, count);
        out << line;
    }

    std::uint64_t calls = 0;
    for (const auto& q : per_question) calls += q.call_count;
    if (!per_question.empty()) {
        std::snprintf(line, sizeof line, "%-28s %8.2f %6s\n", "LLM calls per question",
                      static_cast<double>(calls) / static_cast<double>(per_question.size()), "");
        out << line;
    }

    out << "\n";
    std::snprintf(line, sizeof line, "%-12s %-6s %-6s %-8s %s\n", "question_id", "ex", "calls",
                  "ms", "failure");
    out << line;
    for (const auto& q : per_question) {
        std::snprintf(line, sizeof line, "%-12s %-6s %-6llu %-8lld %s\n", q.question_id.c_str(),
                      q.ex_match ? "yes" : "no", static_cast<unsigned long long>(q.call_count),
                      static_cast<long long>(q.elapsed_ms), q.failure.c_str());
        out << line;
    }
    return out.str();
}

std::string EvalReport::fingerprint() const {
    std::string canon = config_fingerprint;
    for (const auto& q : per_question) {
        canon += "\x1e" + q.question_id + "\x1f" + q.final_sql + "\x1f" +
                 (q.ex_match ? "1" : "0") + "\x1f" + std::to_string(q.call_count) + "\x1f" +
                 q.failure;
    }
    return fnv1a_hex(canon);
}

EvalReport evaluate(const std::vector<Task>& tasks, DatabaseRoot& dbs, const PipelineConfig& cfg,
                    ChatGateway& gateway, const EvalOptions& opts) {
    cfg.validate();

    EvalReport report;
    report.config_fingerprint = cfg.fingerprint();
    report.per_question.resize(tasks.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];

            QuestionReport q;
            q.question_id = task.question_id;
            q.difficulty = task.difficulty.value_or("");
            try {
                const DatabaseCatalog& catalog = dbs.catalog(task.db_id);
                RunTrace trace = run_pipeline(task, catalog, cfg, gateway);
                q.final_sql = trace.final_candidate().sql;
                q.call_count = trace.gateway_calls;
                q.elapsed_ms = trace.elapsed_ms;

                if (!task.gold_sql) {
                    q.failure = "no gold SQL";
                } else {
                    ExecResult pred = execute(dbs.db_path(task.db_id), q.final_sql,
                                              cfg.eval_timeout_ms, cfg.eval_row_cap);
                    ExecResult gold = execute(dbs.db_path(task.db_id), *task.gold_sql,
                                              cfg.eval_timeout_ms, cfg.eval_row_cap);
                    try {
                        q.ex_match = results_match(pred, gold);
                    } catch (const TruncatedComparison& e) {
                        q.failure = e.what();
                    }
                }

                if (!opts.trace_dir.empty()) {
                    std::filesystem::create_directories(opts.trace_dir);
                    std::ofstream tf(opts.trace_dir / ("trace_" + task.question_id + ".json"));
                    tf << trace.to_json().dump(2) << "\n";
                }
            } catch (const Error& e) {
                q.failure = e.what();  // pipeline failure counts as an EX miss
            }
            report.per_question[i] = std::move(q);
        }
    };

    const int jobs = std::max(1, opts.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::size_t matches = 0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> split_counts;  // hits, total
    for (const auto& q : report.per_question) {
        matches += q.ex_match;
        if (!q.difficulty.empty()) {
            auto& [hits, total] = split_counts[q.difficulty];
            hits += q.ex_match;
            ++total;
        }
    }
    report.aggregate_ex = report.per_question.empty()
                              ? 0.0
                              : static_cast<double>(matches) /
                                    static_cast<double>(report.per_question.size());
    for (const auto& [split, counts] : split_counts) {
        report.splits[split] =
            static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& text_path) {
    {
        std::ofstream out(json_path);
        if (!out) throw Error("cannot write " + json_path.string());
        out << report.to_json().dump(2) << "\n";
    }
    {
        std::ofstream out(text_path);
        if (!out) throw Error("cannot write " + text_path.string());
        out << report.to_text();
    }
}

}  // namespace basesql
