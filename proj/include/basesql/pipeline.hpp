#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "basesql/catalog.hpp"
#include "basesql/executor.hpp"
#include "basesql/llm_gateway.hpp"
#include "basesql/schema_repr.hpp"

namespace basesql {

struct Task {
    std::string question_id;
    std::string db_id;
    std::string question;
    std::optional<std::string> evidence;
    std::optional<std::string> gold_sql;
    std::optional<std::string> difficulty;
};

struct LinkingPrediction {
    std::vector<std::string> predicted_tables;  // canonical casing, catalog order
    std::string raw_output;
    bool parse_ok = false;
    bool fallback_used = false;
};

enum class CandidateStage { kGeneration, kRevisionPlain, kRevisionSample, kMerge };

struct CandidateSql {
    std::string label;  // "SQL1", "SQL2", "SQL3", merge labels from the topology
    std::string sql;
    CandidateStage stage = CandidateStage::kGeneration;
    std::vector<std::string> parents;  // labels; merges have exactly 2, others at most 1
    std::optional<ExecResult> exec;
};

struct MergeStep {
    std::string label;
    std::string left;
    std::string right;
};

struct StageModel {
    std::string model;
    std::string base_url;  // used only by the live gateway
};

struct PipelineConfig {
    StageModel linking;
    std::vector<StageModel> linking_voters;  // extra models; non-empty enables union voting
    StageModel generation;
    StageModel revision;
    StageModel merge;

    SerializationKind linking_serialization = SerializationKind::kMSchemaWithSample;
    SerializationKind generation_serialization = SerializationKind::kMSchemaWithSample;
    SerializationKind revision_plain_serialization = SerializationKind::kMSchema;       // SQL2
    SerializationKind revision_sample_serialization = SerializationKind::kMSchemaWithSample;  // SQL3
    SerializationKind merge_serialization = SerializationKind::kMSchemaWithSample;

    bool linking_enabled = true;
    bool revision_enabled = true;
    int revision_rounds = 1;
    std::vector<MergeStep> merge_topology = default_merge_topology();
    std::string final_label;  // empty: last topology label, or last candidate when none

    double temperature = 0.0;
    int max_tokens = 1024;
    int max_retries = 3;
    std::int64_t request_timeout_ms = 120000;

    std::int64_t pipeline_timeout_ms = 10000;
    std::int64_t pipeline_row_cap = 10000;
    std::int64_t eval_timeout_ms = 30000;
    std::int64_t eval_row_cap = 10000;
    std::size_t prompt_max_rows = 10;
    std::size_t prompt_max_chars = 2000;

    static std::vector<MergeStep> default_merge_topology();
    std::string resolved_final_label() const;

    /// Topology labels must be unique, inputs defined before use, no self
    /// reference. Throws ConfigError otherwise.
    void validate() const;

    std::string fingerprint() const;
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

/// Table 2 row labels as config transformers: baseline, m_schema,
/// data_samples, schema_linking, sft, revision, merge_revision, full.
PipelineConfig apply_preset(PipelineConfig cfg, std::string_view preset);

struct StageRecord {
    std::string label;  // "LINKING", "SQL1", ..., merge labels
    StageTag stage = StageTag::kGeneration;
    std::string prompt;
    std::string raw_response;
    std::string extracted_sql;
    std::string exec_summary;
    std::int64_t latency_ms = 0;
    bool gateway_called = true;
    bool short_circuit = false;
    std::string resolved_from;  // short-circuited merges: the label that answered
};

struct RunTrace {
    std::string question_id;
    std::string db_id;
    LinkingPrediction linking;
    std::vector<CandidateSql> candidates;          // real candidates only
    std::map<std::string, std::string> aliases;    // short-circuit label -> source label
    std::vector<StageRecord> records;
    std::string final_label;
    std::uint64_t gateway_calls = 0;
    std::int64_t elapsed_ms = 0;

    const CandidateSql* find(const std::string& label) const;  // alias-chasing
    const CandidateSql& final_candidate() const;

    /// Semantic content hash (prompts, responses, SQLs, labels); timings and
    /// token counts excluded so replayed runs fingerprint identically.
    std::string fingerprint() const;

    nlohmann::json to_json() const;
};

LinkingPrediction link_schema(const Task& task, const DatabaseCatalog& catalog,
                              const PipelineConfig& cfg, ChatGateway& gateway,
                              RunTrace* trace = nullptr);

/// Union vote across configs (each usually naming a different model).
LinkingPrediction link_schema_voting(const Task& task, const DatabaseCatalog& catalog,
                                     std::span<const PipelineConfig> cfgs, ChatGateway& gateway,
                                     RunTrace* trace = nullptr);

CandidateSql generate_candidate(const Task& task, const DatabaseCatalog& catalog,
                                const LinkingPrediction& linked, const PipelineConfig& cfg,
                                ChatGateway& gateway, RunTrace* trace = nullptr);

CandidateSql revise(const Task& task, const DatabaseCatalog& catalog, const CandidateSql& cand,
                    SerializationKind kind, const PipelineConfig& cfg, ChatGateway& gateway,
                    const std::string& label, RunTrace* trace = nullptr);

/// Short-circuits to `left` (byte-identical, zero gateway calls) when the two
/// candidates' execution results agree, or when both failed with identical
/// SQL text. Otherwise prompts over the union of tables referenced by either
/// candidate (full schema if neither parses).
CandidateSql merge_revise(const Task& task, const CandidateSql& left, const CandidateSql& right,
                          const DatabaseCatalog& catalog, const PipelineConfig& cfg,
                          ChatGateway& gateway, const std::string& label = "MERGE",
                          RunTrace* trace = nullptr);

RunTrace run_pipeline(const Task& task, const DatabaseCatalog& catalog, const PipelineConfig& cfg,
                      ChatGateway& gateway);

}  // namespace basesql
