#include "basesql/trainprep.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "basesql/errors.hpp"
#include "basesql/prompts.hpp"
#include "basesql/schema_repr.hpp"
#include "basesql/sql_analysis.hpp"
#include "basesql/text_util.hpp"

namespace basesql {

using nlohmann::json;

namespace {

// Gold tables in catalog order, or empty when the gold SQL yields nothing.
std::vector<std::string> gold_tables(const Task& task, const DatabaseCatalog& catalog) {
    if (!task.gold_sql) return {};
    std::set<std::string> tables = tables_only(*task.gold_sql, catalog);
    std::vector<std::string> ordered;
    for (const auto& t : catalog.tables) {
        if (tables.count(t.name)) ordered.push_back(t.name);
    }
    return ordered;
}

void skip_task(const Task& task, TrainPrepStats* stats) {
    std::fprintf(stderr, "warning: no gold tables derivable for question %s; sample skipped\n",
                 task.question_id.c_str());
    if (stats) ++stats->skipped;
}

// Portable draws: distribution behavior of <random> adaptors differs across
// standard libraries, so the corpus pins its own mapping from raw engine
// output.
double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t bounded_draw(std::mt19937_64& rng, std::size_t bound) {
    return static_cast<std::size_t>(rng() % bound);
}

}  // namespace

std::vector<SftSample> build_linking_samples(const std::vector<Task>& tasks,
                                             const CatalogProvider& catalogs,
                                             const PipelineConfig& cfg, TrainPrepStats* stats) {
    std::vector<SftSample> samples;
    samples.reserve(tasks.size());
    for (const auto& task : tasks) {
        const DatabaseCatalog& catalog = catalogs(task.db_id);
        std::vector<std::string> gold = gold_tables(task, catalog);
        if (gold.empty()) {
            skip_task(task, stats);
            continue;
        }
        SftSample s;
        s.task_kind = SftKind::kLinking;
        s.question_id = task.question_id;
        s.db_id = task.db_id;
        s.prompt = prompts::schema_linking(
            render(SchemaSubset::all(catalog), cfg.linking_serialization), task.question,
            task.evidence.value_or(""));
        s.completion = json{{"tables", gold}}.dump();
        samples.push_back(std::move(s));
        if (stats) ++stats->emitted;
    }
    return samples;
}

std::vector<SftSample> build_generation_samples(const std::vector<Task>& tasks,
                                                const CatalogProvider& catalogs,
                                                const PipelineConfig& cfg, double noise_rate,
                                                std::uint64_t seed, TrainPrepStats* stats) {
    std::mt19937_64 rng(seed);
    std::vector<SftSample> samples;
    samples.reserve(tasks.size());

    for (const auto& task : tasks) {
        const DatabaseCatalog& catalog = catalogs(task.db_id);
        std::vector<std::string> gold = gold_tables(task, catalog);
        const bool noisy_draw = unit_draw(rng) < noise_rate;
        if (gold.empty()) {
            skip_task(task, stats);
            continue;
        }

        std::vector<std::string> ordered = gold;
        bool noise_applied = false;
        if (noisy_draw) {
            std::set<std::string> gold_set(gold.begin(), gold.end());
            std::vector<std::string> complement;
            for (const auto& t : catalog.tables) {
                if (!gold_set.count(t.name)) complement.push_back(t.name);
            }
            if (!complement.empty()) {
                std::size_t k = 1 + bounded_draw(rng, 2);  // 1 or 2 extra tables
                k = std::min(k, complement.size());
                for (std::size_t i = 0; i < k; ++i) {
                    std::size_t j = i + bounded_draw(rng, complement.size() - i);
                    std::swap(complement[i], complement[j]);
                    ordered.push_back(complement[i]);  // appended after the gold tables
                }
                noise_applied = true;
            }
        }

        SftSample s;
        s.task_kind = SftKind::kGeneration;
        s.question_id = task.question_id;
        s.db_id = task.db_id;
        s.noise_applied = noise_applied;
        s.prompt = prompts::candidate_generation(
            render_tables(catalog, ordered, cfg.generation_serialization), task.question,
            task.evidence.value_or(""));
        s.completion = *task.gold_sql;
        samples.push_back(std::move(s));
        if (stats) {
            ++stats->emitted;
            if (noise_applied) ++stats->noisy;
        }
    }
    return samples;
}

void write_sft_jsonl(const std::vector<SftSample>& samples, const std::filesystem::path& out) {
    std::ofstream file(out);
    if (!file) throw Error("cannot write " + out.string());
    for (const auto& s : samples) {
        json line{{"messages", json::array({{{"role", "user"}, {"content", s.prompt}}})},
                  {"completion", s.completion},
                  {"meta",
                   {{"task_kind", s.task_kind == SftKind::kLinking ? "linking" : "generation"},
                    {"question_id", s.question_id},
                    {"db_id", s.db_id},
                    {"noise_applied", s.noise_applied}}}};
        file << line.dump() << "\n";
    }
}

void write_training_meta(const std::filesystem::path& out) {
    json meta{{"method", "lora"},
              {"lora_rank", 32},
              {"lora_alpha", 16},
              {"lora_dropout", 0.1},
              {"learning_rate", 4e-5},
              {"accumulation_batch_size", 8},
              {"max_context_length", 4096}};
    std::ofstream file(out);
    if (!file) throw Error("cannot write " + out.string());
    file << meta.dump(2) << "\n";
}

std::string corpus_fingerprint(const std::vector<SftSample>& samples) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : samples) {
        h = fnv1a(s.prompt, h);
        h = fnv1a(s.completion, h);
        h = fnv1a(s.noise_applied ? "1" : "0", h);
        h = fnv1a(s.question_id, h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace basesql
