#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "basesql/catalog.hpp"
#include "basesql/pipeline.hpp"

namespace basesql {

enum class SftKind { kLinking, kGeneration };

struct SftSample {
    SftKind task_kind = SftKind::kLinking;
    std::string prompt;
    std::string completion;
    bool noise_applied = false;
    std::string question_id;
    std::string db_id;
};

struct TrainPrepStats {
    std::size_t emitted = 0;
    std::size_t skipped = 0;  // gold tables not derivable, even lexically
    std::size_t noisy = 0;
};

/// Linking SFT corpus: full-schema linking prompt, completion is the JSON
/// object listing gold tables (catalog order). Tasks whose gold SQL yields no
/// tables are skipped and counted.
std::vector<SftSample> build_linking_samples(const std::vector<Task>& tasks,
                                             const CatalogProvider& catalogs,
                                             const PipelineConfig& cfg,
                                             TrainPrepStats* stats = nullptr);

/// Generation SFT corpus over the gold-table subset. With probability
/// noise_rate a sample gets 1-2 non-gold tables appended after the gold ones,
/// simulating schema-linking noise. Deterministic under a fixed seed.
std::vector<SftSample> build_generation_samples(const std::vector<Task>& tasks,
                                                const CatalogProvider& catalogs,
                                                const PipelineConfig& cfg,
                                                double noise_rate, std::uint64_t seed,
                                                TrainPrepStats* stats = nullptr);

void write_sft_jsonl(const std::vector<SftSample>& samples, const std::filesystem::path& out);

/// Sidecar metadata for the external fine-tuning toolchain (LoRA
/// hyperparameters; nothing in this artifact consumes it).
void write_training_meta(const std::filesystem::path& out);

std::string corpus_fingerprint(const std::vector<SftSample>& samples);

}  // namespace basesql
