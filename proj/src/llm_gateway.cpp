#include "basesql/llm_gateway.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "basesql/errors.hpp"
#include "basesql/text_util.hpp"

namespace basesql {

using nlohmann::json;

namespace {

std::string now_iso8601() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json request_to_json(const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return json{{"model", req.model_name},
                {"messages", std::move(messages)},
                {"temperature", req.temperature},
                {"max_tokens", req.max_tokens},
                {"stage", std::string(to_string(req.stage))}};
}

ChatRequest request_from_json(const json& j) {
    ChatRequest req;
    req.model_name = j.value("model", "");
    for (const auto& m : j.value("messages", json::array())) {
        req.messages.push_back({m.value("role", "user"), m.value("content", "")});
    }
    req.temperature = j.value("temperature", 0.0);
    req.max_tokens = j.value("max_tokens", 1024);
    req.stage = stage_from_string(j.value("stage", "generation"));
    return req;
}

json response_to_json(const ChatResponse& resp) {
    json j{{"content", resp.content}, {"latency_ms", resp.latency_ms}};
    if (resp.usage) {
        j["usage"] = {{"prompt_tokens", resp.usage->prompt_tokens},
                      {"completion_tokens", resp.usage->completion_tokens}};
    }
    return j;
}

ChatResponse response_from_json(const json& j) {
    ChatResponse resp;
    resp.content = j.value("content", "");
    resp.latency_ms = j.value("latency_ms", 0);
    if (j.contains("usage")) {
        ChatUsage usage;
        usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        usage.completion_tokens = j["usage"].value("completion_tokens", 0);
        resp.usage = usage;
    }
    return resp;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string_view to_string(StageTag tag) {
    switch (tag) {
        case StageTag::kLinking: return "linking";
        case StageTag::kGeneration: return "generation";
        case StageTag::kRevision: return "revision";
        case StageTag::kMerge: return "merge";
    }
    return "?";
}

StageTag stage_from_string(std::string_view name) {
    if (iequals(name, "linking")) return StageTag::kLinking;
    if (iequals(name, "generation")) return StageTag::kGeneration;
    if (iequals(name, "revision")) return StageTag::kRevision;
    if (iequals(name, "merge")) return StageTag::kMerge;
    throw ConfigError("unknown stage tag: " + std::string(name));
}

std::string request_key(const ChatRequest& req) {
    std::string canon = req.model_name;
    canon.push_back('\x1f');
    for (const auto& m : req.messages) {
        canon += m.role;
        canon.push_back('\x1e');
        canon += m.content;
        canon.push_back('\x1d');
    }
    canon += format_double(req.temperature);
    return fnv1a_hex(canon);
}

ChatResponse ChatGateway::complete(const ChatRequest& req) {
    counts_[static_cast<std::size_t>(req.stage)].fetch_add(1, std::memory_order_relaxed);
    return do_complete(req);
}

std::uint64_t ChatGateway::call_count() const {
    std::uint64_t total = 0;
    for (const auto& c : counts_) total += c.load(std::memory_order_relaxed);
    return total;
}

std::uint64_t ChatGateway::call_count(StageTag tag) const {
    return counts_[static_cast<std::size_t>(tag)].load(std::memory_order_relaxed);
}

HttpChatGateway::HttpChatGateway(std::map<StageTag, HttpEndpoint> endpoints,
                                 LiveGatewayOptions opts)
    : endpoints_(std::move(endpoints)), opts_(opts) {}

void HttpChatGateway::add_model_endpoint(const std::string& model, HttpEndpoint endpoint) {
    model_endpoints_[model] = std::move(endpoint);
}

const HttpEndpoint& HttpChatGateway::endpoint_for(const ChatRequest& req) const {
    if (auto it = model_endpoints_.find(req.model_name); it != model_endpoints_.end()) {
        return it->second;
    }
    auto it = endpoints_.find(req.stage);
    if (it == endpoints_.end()) {
        throw ConfigError("no endpoint configured for stage " + std::string(to_string(req.stage)));
    }
    return it->second;
}

ChatResponse HttpChatGateway::do_complete(const ChatRequest& req) {
    const HttpEndpoint& ep = endpoint_for(req);
    if (ep.base_url.empty()) {
        throw ConfigError("endpoint for stage " + std::string(to_string(req.stage)) +
                          " has no base_url");
    }

    json body = json{{"model", req.model_name.empty() ? ep.model : req.model_name},
                     {"temperature", req.temperature},
                     {"max_tokens", req.max_tokens}};
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = std::move(messages);
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(ep.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(opts_.backoff_base_ms << (attempt - 1)));
        }
        const auto start = std::chrono::steady_clock::now();

        httplib::Client client(ep.base_url);
        client.set_connection_timeout(std::chrono::milliseconds(opts_.request_timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(opts_.request_timeout_ms));
        client.set_write_timeout(std::chrono::milliseconds(opts_.request_timeout_ms));

        auto res = client.Post(ep.path, headers, payload, "application/json");
        const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();

        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            if (retryable_status(res->status) && attempt < opts_.max_retries) {
                last_error = "http " + std::to_string(res->status);
                continue;
            }
            throw HttpStatusError(res->status, res->body);
        }

        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
            throw HttpStatusError(res->status, "malformed completion response");
        }
        ChatResponse out;
        out.content = parsed["choices"][0]["message"].value("content", "");
        out.latency_ms = latency;
        if (parsed.contains("usage")) {
            ChatUsage usage;
            usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
            usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
            out.usage = usage;
        }
        return out;
    }
    throw EndpointUnreachable(ep.base_url + " (" + last_error + ")");
}

ReplayStore::ReplayStore(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        std::string key = j.value("key_hash", "");
        if (key.empty()) continue;
        responses_.emplace(key, response_from_json(j.value("response", json::object())));
    }
}

std::optional<ChatResponse> ReplayStore::find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = responses_.find(key);
    if (it == responses_.end()) return std::nullopt;
    return it->second;
}

void ReplayStore::append(const ReplayRecord& record) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = responses_.emplace(record.key, record.response);
    if (!inserted) return;  // first record wins; keep the file free of duplicates
    if (file_.empty()) return;
    json line{{"key_hash", record.key},
              {"request", request_to_json(record.request)},
              {"response", response_to_json(record.response)},
              {"timestamp", record.timestamp.empty() ? now_iso8601() : record.timestamp}};
    std::ofstream out(file_, std::ios::app);
    out << line.dump() << "\n";
}

std::size_t ReplayStore::size() const {
    std::shared_lock lock(mutex_);
    return responses_.size();
}

ReplayGateway::ReplayGateway(std::shared_ptr<ReplayStore> store, std::shared_ptr<ChatGateway> live,
                             ReplayPolicy policy)
    : store_(std::move(store)), live_(std::move(live)), policy_(policy) {
    if (!store_) store_ = std::make_shared<ReplayStore>();
}

ChatResponse ReplayGateway::do_complete(const ChatRequest& req) {
    const std::string key = request_key(req);
    if (auto hit = store_->find(key)) return *hit;
    if (!policy_.fall_through || !live_) throw ReplayMiss(key);

    ChatResponse resp = live_->complete(req);
    if (policy_.record) {
        store_->append(ReplayRecord{key, req, resp, now_iso8601()});
    }
    return resp;
}

}  // namespace basesql
