#include "basesql/prompts.hpp"

#include <utility>
#include <vector>

namespace basesql::prompts {

const std::string_view kSchemaLinking =
    R"({DATABASE SCHEMA}

-- Given the previous table schema combined with the additional information provided, help me find all the table names associated with answering the user's question.

Question: {QUESTION}
-- External Knowledge: {EVIDENCE}

Remember not to generate SQL, but reply with the relevant table names. Please reply in JSON format:
```json
{
    "tables": ["table1","table2",..]
}
```
)";

const std::string_view kCandidateGeneration =
    R"({DATABASE SCHEMA}

-- Using valid SQLite and understanding External Knowledge, answer the following questions for the tables provided above.

Question: {QUESTION}
-- External Knowledge: {EVIDENCE}

Please output only the final SQL query, starts with keyword `SELECT`.
)";

const std::string_view kSqlRevision =
    R"({DATABASE SCHEMA}

-- Using valid SQLite and understanding External Knowledge, revise the SQL query that answers the following questions of the above table schema based on the predicted SQL and SQL execution results. If the current SQL query is correct, return the query directly.

Question: {QUESTION}
-- External Knowledge: {EVIDENCE}

Predicted SQL query: {PREDICT_SQL}
SQL execute result: {EXECUTE_RESULT}

Please output only the final revised SQL query, starts with keyword `SELECT`.
)";

const std::string_view kMergeRevision =
    R"({DATABASE SCHEMA}

-- Using valid SQLite and understanding External Knowledge, answer the following questions for the tables provided above.

Question: {QUESTION}
-- External Knowledge: {EVIDENCE}

Here are some corresponding draft SQL and execute result:
1. {PREDICT_SQL1}
Execution result
{EXECUTE_RESULT1}

2. {PREDICT_SQL2}
Execution result
{EXECUTE_RESULT2}

Please output only the final SQL query, starts with keyword `SELECT`.
)";

namespace {

using Slots = std::vector<std::pair<std::string_view, std::string_view>>;

// Single pass over the template so substituted content is never re-expanded.
std::string fill(std::string_view tmpl, const Slots& slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            bool matched = false;
            for (const auto& [name, value] : slots) {
                if (tmpl.compare(i, name.size(), name) == 0) {
                    out.append(value);
                    i += name.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

}  // namespace

std::string schema_linking(std::string_view schema, std::string_view question,
                           std::string_view evidence) {
    return fill(kSchemaLinking, {{"{DATABASE SCHEMA}", schema},
                                 {"{QUESTION}", question},
                                 {"{EVIDENCE}", evidence}});
}

std::string candidate_generation(std::string_view schema, std::string_view question,
                                 std::string_view evidence) {
    return fill(kCandidateGeneration, {{"{DATABASE SCHEMA}", schema},
                                       {"{QUESTION}", question},
                                       {"{EVIDENCE}", evidence}});
}

std::string sql_revision(std::string_view schema, std::string_view question,
                         std::string_view evidence, std::string_view predict_sql,
                         std::string_view execute_result) {
    return fill(kSqlRevision, {{"{DATABASE SCHEMA}", schema},
                               {"{QUESTION}", question},
                               {"{EVIDENCE}", evidence},
                               {"{PREDICT_SQL}", predict_sql},
                               {"{EXECUTE_RESULT}", execute_result}});
}

std::string merge_revision(std::string_view schema, std::string_view question,
                           std::string_view evidence, std::string_view sql1,
                           std::string_view result1, std::string_view sql2,
                           std::string_view result2) {
    return fill(kMergeRevision, {{"{DATABASE SCHEMA}", schema},
                                 {"{QUESTION}", question},
                                 {"{EVIDENCE}", evidence},
                                 {"{PREDICT_SQL1}", sql1},
                                 {"{EXECUTE_RESULT1}", result1},
                                 {"{PREDICT_SQL2}", sql2},
                                 {"{EXECUTE_RESULT2}", result2}});
}

}  // namespace basesql::prompts
