#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "basesql/bench.hpp"
#include "basesql/catalog.hpp"
#include "basesql/errors.hpp"
#include "basesql/llm_gateway.hpp"
#include "basesql/pipeline.hpp"
#include "basesql/schema_repr.hpp"
#include "basesql/text_util.hpp"
#include "basesql/trainprep.hpp"

namespace {

using namespace basesql;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitConfig = 2;

struct CommonArgs {
    std::string config_path;
    std::string preset = "full";
    std::string replay_path;
    std::string record_path;
    std::uint64_t seed = 0;
};

PipelineConfig make_config(const CommonArgs& args) {
    PipelineConfig cfg;
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    return apply_preset(std::move(cfg), args.preset);
}

std::shared_ptr<ChatGateway> make_live_gateway(const PipelineConfig& cfg) {
    std::map<StageTag, HttpEndpoint> endpoints;
    auto put = [&](StageTag stage, const StageModel& m) {
        endpoints[stage] = HttpEndpoint{m.base_url, "/v1/chat/completions", m.model};
    };
    put(StageTag::kLinking, cfg.linking);
    put(StageTag::kGeneration, cfg.generation);
    put(StageTag::kRevision, cfg.revision);
    put(StageTag::kMerge, cfg.merge);

    LiveGatewayOptions opts;
    opts.max_retries = cfg.max_retries;
    opts.request_timeout_ms = cfg.request_timeout_ms;
    auto gateway = std::make_shared<HttpChatGateway>(std::move(endpoints), opts);
    for (const auto& voter : cfg.linking_voters) {
        gateway->add_model_endpoint(voter.model,
                                    HttpEndpoint{voter.base_url, "/v1/chat/completions",
                                                 voter.model});
    }
    return gateway;
}

// --replay answers from the store (miss = hard error); --record wraps the live
// endpoint and appends; both together replay first and record fresh calls.
std::shared_ptr<ChatGateway> make_gateway(const CommonArgs& args, const PipelineConfig& cfg) {
    if (!args.replay_path.empty() || !args.record_path.empty()) {
        const std::string store_path =
            !args.replay_path.empty() ? args.replay_path : args.record_path;
        auto store = std::make_shared<ReplayStore>(store_path);
        ReplayPolicy policy;
        policy.fall_through = !args.record_path.empty();
        policy.record = !args.record_path.empty();
        std::shared_ptr<ChatGateway> live;
        if (policy.fall_through) live = make_live_gateway(cfg);
        return std::make_shared<ReplayGateway>(std::move(store), std::move(live), policy);
    }
    return make_live_gateway(cfg);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config JSON file");
    cmd->add_option("--preset", args.preset,
                    "pipeline preset: full, baseline, m_schema, data_samples, schema_linking, "
                    "sft, revision, merge_revision");
    cmd->add_option("--replay", args.replay_path, "replay store (JSONL) answering LLM calls");
    cmd->add_option("--record", args.record_path, "record live LLM calls into this JSONL store");
    cmd->add_option("--seed", args.seed, "RNG seed for sampling");
}

Task make_adhoc_task(const std::string& db_id, const std::string& question,
                     const std::string& evidence) {
    Task task;
    task.question_id = "adhoc";
    task.db_id = db_id;
    task.question = question;
    if (!evidence.empty()) task.evidence = evidence;
    return task;
}

std::vector<Task> load_tasks(const std::string& benchmark, const std::string& format,
                             const std::string& question_id) {
    std::vector<Task> tasks = load_benchmark(benchmark, benchmark_format_from_string(format));
    if (!question_id.empty()) {
        std::vector<Task> filtered;
        for (auto& t : tasks) {
            if (t.question_id == question_id) filtered.push_back(std::move(t));
        }
        if (filtered.empty()) throw ConfigError("question_id not in benchmark: " + question_id);
        return filtered;
    }
    return tasks;
}

int run_main(int argc, char** argv) {
    CLI::App app{"BASE-SQL text-to-SQL pipeline"};
    app.require_subcommand(1);

    // schema: dump a serialization of one database
    auto* schema_cmd = app.add_subcommand("schema", "render a database schema serialization");
    std::string schema_db, schema_kind = "m-schema+sample", schema_tables, schema_desc_dir;
    SamplingOptions sampling;
    schema_cmd->add_option("db", schema_db, "SQLite database file")->required();
    schema_cmd->add_option("--kind", schema_kind,
                           "code, code+sample, m-schema, m-schema+sample");
    schema_cmd->add_option("--tables", schema_tables, "comma-separated table subset");
    schema_cmd->add_option("--desc-dir", schema_desc_dir, "BIRD database_description directory");
    schema_cmd->add_option("--seed", sampling.seed, "sampling seed");
    schema_cmd->add_option("--sample-rows", sampling.sample_row_limit, "sample rows per table");
    schema_cmd->add_option("--sample-values", sampling.sample_value_limit,
                           "sample values per column");

    // link / generate / run / eval share the benchmark+gateway plumbing
    CommonArgs link_args;
    auto* link_cmd = app.add_subcommand("link", "run schema linking for one question");
    std::string link_db, link_question, link_evidence;
    link_cmd->add_option("--db", link_db, "SQLite database file")->required();
    link_cmd->add_option("--question", link_question, "natural-language question")->required();
    link_cmd->add_option("--evidence", link_evidence, "external knowledge hint");
    add_common(link_cmd, link_args);

    CommonArgs gen_args;
    auto* gen_cmd = app.add_subcommand("generate", "link + generate candidate SQL1");
    std::string gen_db, gen_question, gen_evidence;
    gen_cmd->add_option("--db", gen_db, "SQLite database file")->required();
    gen_cmd->add_option("--question", gen_question, "natural-language question")->required();
    gen_cmd->add_option("--evidence", gen_evidence, "external knowledge hint");
    add_common(gen_cmd, gen_args);

    CommonArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "full pipeline over a benchmark");
    std::string run_benchmark, run_format = "bird", run_db_root, run_qid, run_trace_dir;
    int run_jobs = 1;
    run_cmd->add_option("--benchmark", run_benchmark, "benchmark JSON file")->required();
    run_cmd->add_option("--format", run_format, "bird or spider");
    run_cmd->add_option("--db-root", run_db_root, "database root directory")->required();
    run_cmd->add_option("--question-id", run_qid, "run a single question");
    run_cmd->add_option("--trace-dir", run_trace_dir, "write per-question trace JSON here");
    run_cmd->add_option("--jobs", run_jobs, "parallel questions");
    add_common(run_cmd, run_args);

    CommonArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "pipeline + execution-accuracy evaluation");
    std::string eval_benchmark, eval_format = "bird", eval_db_root, eval_trace_dir;
    std::string eval_out = "report";
    int eval_jobs = 1;
    eval_cmd->add_option("--benchmark", eval_benchmark, "benchmark JSON file")->required();
    eval_cmd->add_option("--format", eval_format, "bird or spider");
    eval_cmd->add_option("--db-root", eval_db_root, "database root directory")->required();
    eval_cmd->add_option("--out", eval_out, "report basename (writes .json and .txt)");
    eval_cmd->add_option("--trace-dir", eval_trace_dir, "write per-question trace JSON here");
    eval_cmd->add_option("--jobs", eval_jobs, "parallel questions");
    add_common(eval_cmd, eval_args);

    CommonArgs sft_args;
    auto* sft_cmd = app.add_subcommand("prep-sft", "build SFT corpus JSONL");
    std::string sft_benchmark, sft_format = "bird", sft_db_root, sft_kind = "generation";
    std::string sft_out = "sft.jsonl", sft_meta = "training_meta.json";
    double sft_noise = 0.10;
    sft_cmd->add_option("--benchmark", sft_benchmark, "benchmark JSON file")->required();
    sft_cmd->add_option("--format", sft_format, "bird or spider");
    sft_cmd->add_option("--db-root", sft_db_root, "database root directory")->required();
    sft_cmd->add_option("--kind", sft_kind, "linking or generation");
    sft_cmd->add_option("--noise-rate", sft_noise, "table-noise probability (generation only)");
    sft_cmd->add_option("--out", sft_out, "output JSONL path");
    sft_cmd->add_option("--meta-out", sft_meta, "training metadata sidecar path");
    add_common(sft_cmd, sft_args);

    CommonArgs rec_args;
    auto* rec_cmd = app.add_subcommand("replay-record", "record a live run into a replay store");
    std::string rec_benchmark, rec_format = "bird", rec_db_root, rec_qid;
    int rec_jobs = 1;
    rec_cmd->add_option("--benchmark", rec_benchmark, "benchmark JSON file")->required();
    rec_cmd->add_option("--format", rec_format, "bird or spider");
    rec_cmd->add_option("--db-root", rec_db_root, "database root directory")->required();
    rec_cmd->add_option("--question-id", rec_qid, "record a single question");
    rec_cmd->add_option("--jobs", rec_jobs, "parallel questions");
    add_common(rec_cmd, rec_args);

    CLI11_PARSE(app, argc, argv);

    if (schema_cmd->parsed()) {
        DatabaseCatalog catalog = introspect(schema_db, sampling);
        if (!schema_desc_dir.empty()) {
            catalog = attach_descriptions(std::move(catalog), schema_desc_dir);
        }
        SchemaSubset subset = SchemaSubset::all(catalog);
        if (!schema_tables.empty()) {
            subset = SchemaSubset::of(catalog, split(schema_tables, ','));
        }
        std::cout << render(subset, serialization_from_string(schema_kind));
        return kExitOk;
    }

    if (link_cmd->parsed()) {
        PipelineConfig cfg = make_config(link_args);
        auto gateway = make_gateway(link_args, cfg);
        SamplingOptions opts;
        opts.seed = link_args.seed;
        DatabaseCatalog catalog = introspect(link_db, opts);
        Task task = make_adhoc_task(catalog.db_id, link_question, link_evidence);
        LinkingPrediction pred = link_schema(task, catalog, cfg, *gateway);
        std::cout << json{{"tables", pred.predicted_tables},
                          {"parse_ok", pred.parse_ok},
                          {"fallback_used", pred.fallback_used}}
                         .dump(2)
                  << "\n";
        return kExitOk;
    }

    if (gen_cmd->parsed()) {
        PipelineConfig cfg = make_config(gen_args);
        auto gateway = make_gateway(gen_args, cfg);
        SamplingOptions opts;
        opts.seed = gen_args.seed;
        DatabaseCatalog catalog = introspect(gen_db, opts);
        Task task = make_adhoc_task(catalog.db_id, gen_question, gen_evidence);
        LinkingPrediction linked;
        if (cfg.linking_enabled) {
            linked = link_schema(task, catalog, cfg, *gateway);
        } else {
            linked.predicted_tables = catalog.table_names();
        }
        CandidateSql cand = generate_candidate(task, catalog, linked, cfg, *gateway);
        std::cout << cand.sql << "\n";
        if (cand.exec) {
            std::cerr << format_for_prompt(*cand.exec, cfg.prompt_max_rows, cfg.prompt_max_chars)
                      << "\n";
        }
        return kExitOk;
    }

    if (run_cmd->parsed() || rec_cmd->parsed()) {
        const bool recording = rec_cmd->parsed();
        CommonArgs& args = recording ? rec_args : run_args;
        if (recording && args.record_path.empty()) {
            throw ConfigError("replay-record requires --record");
        }
        PipelineConfig cfg = make_config(args);
        auto gateway = make_gateway(args, cfg);
        SamplingOptions opts;
        opts.seed = args.seed;
        DatabaseRoot dbs(recording ? rec_db_root : run_db_root, opts);
        std::vector<Task> tasks =
            load_tasks(recording ? rec_benchmark : run_benchmark,
                       recording ? rec_format : run_format, recording ? rec_qid : run_qid);

        for (const auto& task : tasks) {
            RunTrace trace = run_pipeline(task, dbs.catalog(task.db_id), cfg, *gateway);
            std::cout << task.question_id << "\t" << trace.final_candidate().sql << "\n";
            if (!recording && !run_trace_dir.empty()) {
                std::filesystem::create_directories(run_trace_dir);
                std::ofstream tf(std::filesystem::path(run_trace_dir) /
                                 ("trace_" + task.question_id + ".json"));
                tf << trace.to_json().dump(2) << "\n";
            }
        }
        return kExitOk;
    }

    if (eval_cmd->parsed()) {
        PipelineConfig cfg = make_config(eval_args);
        auto gateway = make_gateway(eval_args, cfg);
        SamplingOptions opts;
        opts.seed = eval_args.seed;
        DatabaseRoot dbs(eval_db_root, opts);
        std::vector<Task> tasks = load_tasks(eval_benchmark, eval_format, "");
        for (const auto& t : tasks) {
            if (!t.gold_sql) throw ConfigError("eval requires gold SQL for every question");
        }

        EvalOptions eopts;
        eopts.jobs = eval_jobs;
        eopts.trace_dir = eval_trace_dir;
        EvalReport report = evaluate(tasks, dbs, cfg, *gateway, eopts);
        write_report(report, eval_out + ".json", eval_out + ".txt");
        std::cout << report.to_text();

        bool any_failure = report.aggregate_ex < 1.0;
        for (const auto& q : report.per_question) any_failure |= !q.failure.empty();
        return any_failure ? kExitFailures : kExitOk;
    }

    if (sft_cmd->parsed()) {
        PipelineConfig cfg = make_config(sft_args);
        SamplingOptions opts;
        opts.seed = sft_args.seed;
        DatabaseRoot dbs(sft_db_root, opts);
        std::vector<Task> tasks =
            load_benchmark(sft_benchmark, benchmark_format_from_string(sft_format));

        TrainPrepStats stats;
        std::vector<SftSample> samples;
        if (iequals(sft_kind, "linking")) {
            samples = build_linking_samples(tasks, dbs.provider(), cfg, &stats);
        } else if (iequals(sft_kind, "generation")) {
            samples = build_generation_samples(tasks, dbs.provider(), cfg, sft_noise,
                                               sft_args.seed, &stats);
        } else {
            throw ConfigError("unknown SFT kind: " + sft_kind);
        }
        write_sft_jsonl(samples, sft_out);
        write_training_meta(sft_meta);
        std::cerr << "emitted " << stats.emitted << " samples (" << stats.noisy << " noisy, "
                  << stats.skipped << " skipped), corpus " << corpus_fingerprint(samples) << "\n";
        return kExitOk;
    }

    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_main(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailures;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailures;
    }
}
