#pragma once

#include <string>
#include <string_view>

namespace basesql::prompts {

extern const std::string_view kSchemaLinking;
extern const std::string_view kCandidateGeneration;
extern const std::string_view kSqlRevision;
extern const std::string_view kMergeRevision;

std::string schema_linking(std::string_view schema, std::string_view question,
                           std::string_view evidence);
std::string candidate_generation(std::string_view schema, std::string_view question,
                                 std::string_view evidence);
std::string sql_revision(std::string_view schema, std::string_view question,
                         std::string_view evidence, std::string_view predict_sql,
                         std::string_view execute_result);
std::string merge_revision(std::string_view schema, std::string_view question,
                           std::string_view evidence, std::string_view sql1,
                           std::string_view result1, std::string_view sql2,
                           std::string_view result2);

}  // namespace basesql::prompts
