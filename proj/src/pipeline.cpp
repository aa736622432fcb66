#include "basesql/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "basesql/errors.hpp"
#include "basesql/prompts.hpp"
#include "basesql/sql_analysis.hpp"
#include "basesql/text_util.hpp"

namespace basesql {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string_view to_string(CandidateStage stage) {
    switch (stage) {
        case CandidateStage::kGeneration: return "generation";
        case CandidateStage::kRevisionPlain: return "revision_plain";
        case CandidateStage::kRevisionSample: return "revision_sample";
        case CandidateStage::kMerge: return "merge";
    }
    return "?";
}

ChatRequest make_request(const StageModel& model, StageTag stage, const PipelineConfig& cfg,
                         std::string prompt) {
    ChatRequest req;
    req.model_name = model.model;
    req.messages.push_back({"user", std::move(prompt)});
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    req.stage = stage;
    return req;
}

void add_record(RunTrace* trace, StageRecord record) {
    if (trace) trace->records.push_back(std::move(record));
}

void count_call(RunTrace* trace) {
    if (trace) ++trace->gateway_calls;
}

// Finds a JSON object with a "tables" array anywhere in the text, tolerating
// fences and surrounding prose.
std::optional<std::vector<std::string>> parse_tables_json(const std::string& raw) {
    for (std::size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        char quote = 0;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (quote) {
                if (c == '\\') ++i;
                else if (c == quote) quote = 0;
            } else if (c == '"') {
                quote = '"';
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    json j = json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (j.is_object() && j.contains("tables") && j["tables"].is_array()) {
                        std::vector<std::string> tables;
                        for (const auto& t : j["tables"]) {
                            if (t.is_string()) tables.push_back(t.get<std::string>());
                        }
                        return tables;
                    }
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

std::vector<std::string> all_tables(const DatabaseCatalog& catalog) {
    return catalog.table_names();
}

// Keeps catalog order and canonical casing; unknown names are dropped.
std::vector<std::string> canonicalize(const DatabaseCatalog& catalog,
                                      const std::vector<std::string>& names) {
    std::set<std::string> wanted;
    for (const auto& n : names) {
        if (const TableInfo* t = catalog.find_table(n)) wanted.insert(to_lower(t->name));
    }
    std::vector<std::string> ordered;
    for (const auto& t : catalog.tables) {
        if (wanted.count(to_lower(t.name))) ordered.push_back(t.name);
    }
    return ordered;
}

ExecResult pipeline_execute(const DatabaseCatalog& catalog, const std::string& sql,
                            const PipelineConfig& cfg) {
    if (trim(sql).empty()) return ExecResult::failure("no sql produced");
    return execute(catalog.source_path, sql, cfg.pipeline_timeout_ms, cfg.pipeline_row_cap);
}

std::string exec_summary(const std::optional<ExecResult>& exec, const PipelineConfig& cfg) {
    if (!exec) return "";
    return format_for_prompt(*exec, cfg.prompt_max_rows, cfg.prompt_max_chars);
}

// Candidate execution results agree for short-circuit purposes only when the
// comparison is actually defined (both OK, neither truncated).
bool execs_agree(const ExecResult& a, const ExecResult& b) {
    if (a.truncated || b.truncated) return false;
    if (!a.ok() || !b.ok()) return false;
    return results_match(a, b);
}

}  // namespace

std::vector<MergeStep> PipelineConfig::default_merge_topology() {
    return {{"SQL5", "SQL2", "SQL3"}, {"SQL6", "SQL1", "SQL3"}, {"SQL8", "SQL5", "SQL6"}};
}

std::string PipelineConfig::resolved_final_label() const {
    if (!final_label.empty()) return final_label;
    if (!merge_topology.empty()) return merge_topology.back().label;
    if (revision_enabled) return "SQL3";
    return "SQL1";
}

void PipelineConfig::validate() const {
    if (revision_rounds != 1 && revision_rounds != 2) {
        throw ConfigError("revision_rounds must be 1 or 2");
    }
    std::set<std::string> defined{"SQL1"};
    if (revision_enabled) {
        defined.insert("SQL2");
        defined.insert("SQL3");
    }
    for (const auto& step : merge_topology) {
        if (step.label.empty()) throw ConfigError("merge step with empty label");
        if (defined.count(step.label)) {
            throw ConfigError("merge label already defined: " + step.label);
        }
        if (!defined.count(step.left)) {
            throw ConfigError("merge input not yet defined: " + step.left);
        }
        if (!defined.count(step.right)) {
            throw ConfigError("merge input not yet defined: " + step.right);
        }
        if (step.left == step.right) {
            throw ConfigError("merge step " + step.label + " uses the same input twice");
        }
        defined.insert(step.label);
    }
    if (!defined.count(resolved_final_label())) {
        throw ConfigError("final label not defined by any stage: " + resolved_final_label());
    }
}

std::string PipelineConfig::fingerprint() const {
    return fnv1a_hex(config_to_json(*this).dump());
}

namespace {

StageModel stage_model_from_json(const json& j) {
    StageModel m;
    m.model = j.value("model", "");
    m.base_url = j.value("base_url", "");
    return m;
}

json stage_model_to_json(const StageModel& m) {
    return json{{"model", m.model}, {"base_url", m.base_url}};
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;

    // Three named endpoint slots; per-stage "models" entries override below.
    if (j.contains("slots")) {
        const json& slots = j["slots"];
        if (slots.contains("linking_generation")) {
            cfg.linking = stage_model_from_json(slots["linking_generation"]);
            cfg.generation = cfg.linking;
        }
        if (slots.contains("revision")) cfg.revision = stage_model_from_json(slots["revision"]);
        if (slots.contains("merge")) cfg.merge = stage_model_from_json(slots["merge"]);
    }
    if (j.contains("models")) {
        const json& models = j["models"];
        if (models.contains("linking")) cfg.linking = stage_model_from_json(models["linking"]);
        if (models.contains("generation")) {
            cfg.generation = stage_model_from_json(models["generation"]);
        }
        if (models.contains("revision")) cfg.revision = stage_model_from_json(models["revision"]);
        if (models.contains("merge")) cfg.merge = stage_model_from_json(models["merge"]);
        for (const auto& v : models.value("linking_voters", json::array())) {
            cfg.linking_voters.push_back(stage_model_from_json(v));
        }
    }
    if (j.contains("serialization")) {
        const json& s = j["serialization"];
        auto pick = [&](const char* key, SerializationKind fallback) {
            return s.contains(key) ? serialization_from_string(s[key].get<std::string>())
                                   : fallback;
        };
        cfg.linking_serialization = pick("linking", cfg.linking_serialization);
        cfg.generation_serialization = pick("generation", cfg.generation_serialization);
        cfg.revision_plain_serialization =
            pick("revision_plain", cfg.revision_plain_serialization);
        cfg.revision_sample_serialization =
            pick("revision_sample", cfg.revision_sample_serialization);
        cfg.merge_serialization = pick("merge", cfg.merge_serialization);
    }
    if (j.contains("stages")) {
        const json& s = j["stages"];
        cfg.linking_enabled = s.value("linking", cfg.linking_enabled);
        cfg.revision_enabled = s.value("revision", cfg.revision_enabled);
        cfg.revision_rounds = s.value("revision_rounds", cfg.revision_rounds);
    }
    if (j.contains("merge_topology")) {
        cfg.merge_topology.clear();
        for (const auto& step : j["merge_topology"]) {
            cfg.merge_topology.push_back(
                {step.value("label", ""), step.value("left", ""), step.value("right", "")});
        }
    }
    cfg.final_label = j.value("final_label", cfg.final_label);
    if (j.contains("limits")) {
        const json& l = j["limits"];
        cfg.temperature = l.value("temperature", cfg.temperature);
        cfg.max_tokens = l.value("max_tokens", cfg.max_tokens);
        cfg.max_retries = l.value("max_retries", cfg.max_retries);
        cfg.request_timeout_ms = l.value("request_timeout_ms", cfg.request_timeout_ms);
        cfg.pipeline_timeout_ms = l.value("pipeline_timeout_ms", cfg.pipeline_timeout_ms);
        cfg.pipeline_row_cap = l.value("pipeline_row_cap", cfg.pipeline_row_cap);
        cfg.eval_timeout_ms = l.value("eval_timeout_ms", cfg.eval_timeout_ms);
        cfg.eval_row_cap = l.value("eval_row_cap", cfg.eval_row_cap);
        cfg.prompt_max_rows = l.value("prompt_max_rows", cfg.prompt_max_rows);
        cfg.prompt_max_chars = l.value("prompt_max_chars", cfg.prompt_max_chars);
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
    json topology = json::array();
    for (const auto& step : cfg.merge_topology) {
        topology.push_back({{"label", step.label}, {"left", step.left}, {"right", step.right}});
    }
    json voters = json::array();
    for (const auto& v : cfg.linking_voters) voters.push_back(stage_model_to_json(v));
    return json{
        {"models",
         {{"linking", stage_model_to_json(cfg.linking)},
          {"generation", stage_model_to_json(cfg.generation)},
          {"revision", stage_model_to_json(cfg.revision)},
          {"merge", stage_model_to_json(cfg.merge)},
          {"linking_voters", std::move(voters)}}},
        {"serialization",
         {{"linking", std::string(to_string(cfg.linking_serialization))},
          {"generation", std::string(to_string(cfg.generation_serialization))},
          {"revision_plain", std::string(to_string(cfg.revision_plain_serialization))},
          {"revision_sample", std::string(to_string(cfg.revision_sample_serialization))},
          {"merge", std::string(to_string(cfg.merge_serialization))}}},
        {"stages",
         {{"linking", cfg.linking_enabled},
          {"revision", cfg.revision_enabled},
          {"revision_rounds", cfg.revision_rounds}}},
        {"merge_topology", std::move(topology)},
        {"final_label", cfg.final_label},
        {"limits",
         {{"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens},
          {"max_retries", cfg.max_retries},
          {"request_timeout_ms", cfg.request_timeout_ms},
          {"pipeline_timeout_ms", cfg.pipeline_timeout_ms},
          {"pipeline_row_cap", cfg.pipeline_row_cap},
          {"eval_timeout_ms", cfg.eval_timeout_ms},
          {"eval_row_cap", cfg.eval_row_cap},
          {"prompt_max_rows", cfg.prompt_max_rows},
          {"prompt_max_chars", cfg.prompt_max_chars}}}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    return config_from_json(j);
}

PipelineConfig apply_preset(PipelineConfig cfg, std::string_view preset) {
    auto generation_only = [&](SerializationKind kind) {
        cfg.linking_enabled = false;
        cfg.generation_serialization = kind;
        cfg.revision_enabled = false;
        cfg.merge_topology.clear();
        cfg.final_label = "SQL1";
    };
    if (preset == "full" || preset == "merge_revision") {
        // default configuration
    } else if (preset == "baseline") {
        generation_only(SerializationKind::kCode);
    } else if (preset == "m_schema") {
        generation_only(SerializationKind::kMSchema);
    } else if (preset == "data_samples") {
        generation_only(SerializationKind::kMSchemaWithSample);
    } else if (preset == "schema_linking" || preset == "sft") {
        cfg.revision_enabled = false;
        cfg.merge_topology.clear();
        cfg.final_label = "SQL1";
    } else if (preset == "revision") {
        cfg.merge_topology.clear();
        cfg.final_label = "SQL2";
    } else {
        throw ConfigError("unknown preset: " + std::string(preset));
    }
    cfg.validate();
    return cfg;
}

const CandidateSql* RunTrace::find(const std::string& label) const {
    std::string current = label;
    // Alias chains are short (one hop per short-circuited merge).
    for (int hop = 0; hop < 64; ++hop) {
        for (const auto& c : candidates) {
            if (c.label == current) return &c;
        }
        auto it = aliases.find(current);
        if (it == aliases.end()) return nullptr;
        current = it->second;
    }
    return nullptr;
}

const CandidateSql& RunTrace::final_candidate() const {
    const CandidateSql* c = find(final_label);
    if (!c) throw Error("trace has no final candidate for label " + final_label);
    return *c;
}

std::string RunTrace::fingerprint() const {
    std::string canon = question_id + "\x1f" + db_id + "\x1f";
    for (const auto& t : linking.predicted_tables) canon += t + ",";
    canon += "\x1f" + linking.raw_output;
    for (const auto& c : candidates) {
        canon += "\x1e" + c.label + "\x1f" + c.sql;
    }
    for (const auto& [from, to] : aliases) canon += "\x1e" + from + "->" + to;
    for (const auto& r : records) {
        canon += "\x1e" + r.label + "\x1f" + r.prompt + "\x1f" + r.raw_response + "\x1f" +
                 r.extracted_sql + "\x1f" + r.exec_summary;
    }
    canon += "\x1e" + final_label;
    return fnv1a_hex(canon);
}

json RunTrace::to_json() const {
    json jcands = json::array();
    for (const auto& c : candidates) {
        json jc{{"label", c.label},
                {"sql", c.sql},
                {"stage", std::string(to_string(c.stage))},
                {"parents", c.parents}};
        if (c.exec) {
            json je{{"status", c.exec->status == ExecStatus::kOk
                                   ? "ok"
                                   : (c.exec->status == ExecStatus::kTimeout ? "timeout"
                                                                             : "error")},
                    {"row_count", c.exec->rows.size()},
                    {"truncated", c.exec->truncated},
                    {"elapsed_ms", c.exec->elapsed_ms}};
            if (c.exec->error_message) je["error"] = *c.exec->error_message;
            jc["exec"] = std::move(je);
        }
        jcands.push_back(std::move(jc));
    }
    json jrecords = json::array();
    for (const auto& r : records) {
        jrecords.push_back({{"label", r.label},
                            {"stage", std::string(basesql::to_string(r.stage))},
                            {"prompt", r.prompt},
                            {"raw_response", r.raw_response},
                            {"extracted_sql", r.extracted_sql},
                            {"exec_summary", r.exec_summary},
                            {"latency_ms", r.latency_ms},
                            {"gateway_called", r.gateway_called},
                            {"short_circuit", r.short_circuit},
                            {"resolved_from", r.resolved_from}});
    }
    return json{{"question_id", question_id},
                {"db_id", db_id},
                {"linking",
                 {{"predicted_tables", linking.predicted_tables},
                  {"parse_ok", linking.parse_ok},
                  {"fallback_used", linking.fallback_used},
                  {"raw_output", linking.raw_output}}},
                {"candidates", std::move(jcands)},
                {"aliases", aliases},
                {"records", std::move(jrecords)},
                {"final_label", final_label},
                {"final_sql", find(final_label) ? find(final_label)->sql : ""},
                {"gateway_calls", gateway_calls},
                {"elapsed_ms", elapsed_ms},
                {"fingerprint", fingerprint()}};
}

LinkingPrediction link_schema(const Task& task, const DatabaseCatalog& catalog,
                              const PipelineConfig& cfg, ChatGateway& gateway, RunTrace* trace) {
    const std::string schema = render(SchemaSubset::all(catalog), cfg.linking_serialization);
    std::string prompt =
        prompts::schema_linking(schema, task.question, task.evidence.value_or(""));

    ChatResponse resp =
        gateway.complete(make_request(cfg.linking, StageTag::kLinking, cfg, prompt));
    count_call(trace);

    LinkingPrediction pred;
    pred.raw_output = resp.content;

    auto tables = parse_tables_json(resp.content);
    if (tables) {
        pred.parse_ok = true;
        pred.predicted_tables = canonicalize(catalog, *tables);
        if (pred.predicted_tables.size() < tables->size()) {
            // Unknown names were dropped; the trace keeps the raw output.
        }
    }
    if (pred.predicted_tables.empty()) {
        pred.predicted_tables = all_tables(catalog);
        pred.fallback_used = true;
    }

    add_record(trace, StageRecord{"LINKING", StageTag::kLinking, std::move(prompt), resp.content,
                                  "", join(pred.predicted_tables, ", "), resp.latency_ms, true,
                                  false, ""});
    return pred;
}

LinkingPrediction link_schema_voting(const Task& task, const DatabaseCatalog& catalog,
                                     std::span<const PipelineConfig> cfgs, ChatGateway& gateway,
                                     RunTrace* trace) {
    if (cfgs.size() < 2) throw ConfigError("voting requires at least 2 configs");

    LinkingPrediction merged;
    std::set<std::string> votes;
    for (const auto& cfg : cfgs) {
        LinkingPrediction p = link_schema(task, catalog, cfg, gateway, trace);
        merged.parse_ok = merged.parse_ok || p.parse_ok;
        merged.fallback_used = merged.fallback_used || p.fallback_used;
        if (!merged.raw_output.empty()) merged.raw_output += "\n---\n";
        merged.raw_output += p.raw_output;
        for (const auto& t : p.predicted_tables) votes.insert(t);
    }
    merged.predicted_tables =
        canonicalize(catalog, std::vector<std::string>(votes.begin(), votes.end()));
    return merged;
}

CandidateSql generate_candidate(const Task& task, const DatabaseCatalog& catalog,
                                const LinkingPrediction& linked, const PipelineConfig& cfg,
                                ChatGateway& gateway, RunTrace* trace) {
    const std::string schema = render(SchemaSubset::of(catalog, linked.predicted_tables),
                                      cfg.generation_serialization);
    std::string prompt =
        prompts::candidate_generation(schema, task.question, task.evidence.value_or(""));

    ChatResponse resp =
        gateway.complete(make_request(cfg.generation, StageTag::kGeneration, cfg, prompt));
    count_call(trace);

    CandidateSql cand;
    cand.label = "SQL1";
    cand.stage = CandidateStage::kGeneration;
    try {
        cand.sql = extract_sql(resp.content);
    } catch (const NoSqlFound&) {
        cand.sql.clear();
    }
    cand.exec = pipeline_execute(catalog, cand.sql, cfg);

    add_record(trace, StageRecord{cand.label, StageTag::kGeneration, std::move(prompt),
                                  resp.content, cand.sql, exec_summary(cand.exec, cfg),
                                  resp.latency_ms, true, false, ""});
    return cand;
}

CandidateSql revise(const Task& task, const DatabaseCatalog& catalog, const CandidateSql& cand,
                    SerializationKind kind, const PipelineConfig& cfg, ChatGateway& gateway,
                    const std::string& label, RunTrace* trace) {
    if (!cand.exec) throw Error("revise requires an executed candidate");

    // Full pre-linking schema: revision sees every table, not the linked subset.
    const std::string schema = render(SchemaSubset::all(catalog), kind);
    const std::string result_text =
        format_for_prompt(*cand.exec, cfg.prompt_max_rows, cfg.prompt_max_chars);
    std::string prompt = prompts::sql_revision(schema, task.question, task.evidence.value_or(""),
                                               cand.sql, result_text);

    ChatResponse resp =
        gateway.complete(make_request(cfg.revision, StageTag::kRevision, cfg, prompt));
    count_call(trace);

    CandidateSql out;
    out.label = label;
    out.stage = kind == SerializationKind::kMSchema || kind == SerializationKind::kCode
                    ? CandidateStage::kRevisionPlain
                    : CandidateStage::kRevisionSample;
    out.parents = {cand.label};
    try {
        out.sql = extract_sql(resp.content);
    } catch (const NoSqlFound&) {
        out.sql.clear();
    }
    out.exec = pipeline_execute(catalog, out.sql, cfg);

    add_record(trace, StageRecord{out.label, StageTag::kRevision, std::move(prompt), resp.content,
                                  out.sql, exec_summary(out.exec, cfg), resp.latency_ms, true,
                                  false, ""});
    return out;
}

CandidateSql merge_revise(const Task& task, const CandidateSql& left, const CandidateSql& right,
                          const DatabaseCatalog& catalog, const PipelineConfig& cfg,
                          ChatGateway& gateway, const std::string& label, RunTrace* trace) {
    if (!left.exec || !right.exec) throw Error("merge requires executed candidates");

    const bool both_failed = !left.exec->ok() && !right.exec->ok();
    if (execs_agree(*left.exec, *right.exec) || (both_failed && left.sql == right.sql)) {
        add_record(trace, StageRecord{label, StageTag::kMerge, "", "", left.sql,
                                      exec_summary(left.exec, cfg), 0, false, true, left.label});
        if (trace) trace->aliases[label] = left.label;
        return left;
    }

    // Schema for the merge prompt: tables referenced by either candidate,
    // whole catalog when neither side parses.
    SqlIdentifiers ids_left = referenced_objects(left.sql, catalog);
    SqlIdentifiers ids_right = referenced_objects(right.sql, catalog);
    std::vector<std::string> table_union;
    {
        std::set<std::string> u = ids_left.tables;
        u.insert(ids_right.tables.begin(), ids_right.tables.end());
        table_union.assign(u.begin(), u.end());
    }
    if (table_union.empty()) table_union = all_tables(catalog);

    const std::string schema =
        render(SchemaSubset::of(catalog, canonicalize(catalog, table_union)),
               cfg.merge_serialization);
    std::string prompt = prompts::merge_revision(
        schema, task.question, task.evidence.value_or(""), left.sql,
        format_for_prompt(*left.exec, cfg.prompt_max_rows, cfg.prompt_max_chars), right.sql,
        format_for_prompt(*right.exec, cfg.prompt_max_rows, cfg.prompt_max_chars));

    ChatResponse resp = gateway.complete(make_request(cfg.merge, StageTag::kMerge, cfg, prompt));
    count_call(trace);

    CandidateSql out;
    out.label = label;
    out.stage = CandidateStage::kMerge;
    out.parents = {left.label, right.label};
    try {
        out.sql = extract_sql(resp.content);
    } catch (const NoSqlFound&) {
        out.sql.clear();
    }
    out.exec = pipeline_execute(catalog, out.sql, cfg);

    add_record(trace, StageRecord{out.label, StageTag::kMerge, std::move(prompt), resp.content,
                                  out.sql, exec_summary(out.exec, cfg), resp.latency_ms, true,
                                  false, ""});
    return out;
}

RunTrace run_pipeline(const Task& task, const DatabaseCatalog& catalog, const PipelineConfig& cfg,
                      ChatGateway& gateway) {
    cfg.validate();
    const auto start = Clock::now();

    RunTrace trace;
    trace.question_id = task.question_id;
    trace.db_id = task.db_id;

    if (cfg.linking_enabled) {
        if (!cfg.linking_voters.empty()) {
            std::vector<PipelineConfig> voter_cfgs{cfg};
            for (const auto& voter : cfg.linking_voters) {
                PipelineConfig vc = cfg;
                vc.linking = voter;
                voter_cfgs.push_back(std::move(vc));
            }
            trace.linking = link_schema_voting(task, catalog, voter_cfgs, gateway, &trace);
        } else {
            trace.linking = link_schema(task, catalog, cfg, gateway, &trace);
        }
    } else {
        trace.linking.predicted_tables = all_tables(catalog);
    }

    CandidateSql sql1 = generate_candidate(task, catalog, trace.linking, cfg, gateway, &trace);
    trace.candidates.push_back(sql1);

    if (cfg.revision_enabled) {
        auto run_revision = [&](SerializationKind kind, const std::string& label) {
            CandidateSql base = sql1;
            if (cfg.revision_rounds == 2) {
                base = revise(task, catalog, base, kind, cfg, gateway, label + "~1", &trace);
                trace.candidates.push_back(base);
            }
            CandidateSql out = revise(task, catalog, base, kind, cfg, gateway, label, &trace);
            trace.candidates.push_back(out);
            return out;
        };
        run_revision(cfg.revision_plain_serialization, "SQL2");
        run_revision(cfg.revision_sample_serialization, "SQL3");
    }

    for (const auto& step : cfg.merge_topology) {
        const CandidateSql* left = trace.find(step.left);
        const CandidateSql* right = trace.find(step.right);
        if (!left || !right) throw ConfigError("merge input not available: " + step.label);
        CandidateSql merged =
            merge_revise(task, *left, *right, catalog, cfg, gateway, step.label, &trace);
        if (!trace.aliases.count(step.label)) {
            trace.candidates.push_back(std::move(merged));
        }
    }

    trace.final_label = cfg.resolved_final_label();
    if (!trace.find(trace.final_label)) {
        throw Error("pipeline produced no candidate for final label " + trace.final_label);
    }
    trace.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    return trace;
}

}  // namespace basesql
