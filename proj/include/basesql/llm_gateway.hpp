#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace basesql {

enum class StageTag { kLinking, kGeneration, kRevision, kMerge };
constexpr std::size_t kStageCount = 4;

std::string_view to_string(StageTag tag);
StageTag stage_from_string(std::string_view name);

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::string content;
};

struct ChatRequest {
    std::string model_name;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    StageTag stage = StageTag::kGeneration;
};

struct ChatUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct ChatResponse {
    std::string content;
    std::optional<ChatUsage> usage;
    std::int64_t latency_ms = 0;
};

/// Replay key: content hash of (model_name, messages, temperature).
/// max_tokens is an operational cap and deliberately excluded.
std::string request_key(const ChatRequest& req);

/// Counting chat-completion interface every backend implements. Counters are
/// atomic; complete() is safe to call from multiple threads when the backend
/// is.
class ChatGateway {
public:
    virtual ~ChatGateway() = default;

    ChatResponse complete(const ChatRequest& req);

    std::uint64_t call_count() const;
    std::uint64_t call_count(StageTag tag) const;

private:
    virtual ChatResponse do_complete(const ChatRequest& req) = 0;

    std::array<std::atomic<std::uint64_t>, kStageCount> counts_{};
};

struct HttpEndpoint {
    std::string base_url;  // e.g. "http://localhost:8000"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "BASE_SQL_API_KEY";
};

struct LiveGatewayOptions {
    int max_retries = 3;
    std::int64_t request_timeout_ms = 120000;
    std::int64_t backoff_base_ms = 250;
};

/// OpenAI-compatible HTTP backend with bounded retries and exponential
/// backoff. Requests route to the endpoint registered for their stage; extra
/// endpoints keyed by model name support linking-vote setups.
class HttpChatGateway : public ChatGateway {
public:
    HttpChatGateway(std::map<StageTag, HttpEndpoint> endpoints, LiveGatewayOptions opts = {});

    void add_model_endpoint(const std::string& model, HttpEndpoint endpoint);

private:
    ChatResponse do_complete(const ChatRequest& req) override;
    const HttpEndpoint& endpoint_for(const ChatRequest& req) const;

    std::map<StageTag, HttpEndpoint> endpoints_;
    std::map<std::string, HttpEndpoint> model_endpoints_;
    LiveGatewayOptions opts_;
};

struct ReplayRecord {
    std::string key;
    ChatRequest request;
    ChatResponse response;
    std::string timestamp;
};

/// Append-only JSONL store of request/response pairs keyed by request_key.
/// The first record for a key wins, so replays are order-independent.
class ReplayStore {
public:
    ReplayStore() = default;  // in-memory only
    explicit ReplayStore(std::filesystem::path file);

    std::optional<ChatResponse> find(const std::string& key) const;
    void append(const ReplayRecord& record);
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, ChatResponse> responses_;
    std::filesystem::path file_;
};

struct ReplayPolicy {
    bool fall_through = false;  // replay miss may go to the live gateway
    bool record = true;         // live responses are appended to the store
};

/// Deterministic record/replay front: every hit answers from the store; a
/// miss either fails loudly (ReplayMiss) or, when fall_through is set and a
/// live gateway exists, forwards and optionally records.
class ReplayGateway : public ChatGateway {
public:
    ReplayGateway(std::shared_ptr<ReplayStore> store, std::shared_ptr<ChatGateway> live = nullptr,
                  ReplayPolicy policy = {});

    const ReplayStore& store() const { return *store_; }

private:
    ChatResponse do_complete(const ChatRequest& req) override;

    std::shared_ptr<ReplayStore> store_;
    std::shared_ptr<ChatGateway> live_;
    ReplayPolicy policy_;
};

}  // namespace basesql
