#include "responsivity/chat_client.hpp"

#include "http_endpoint.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"
#include "responsivity/hashing.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <thread>

namespace responsivity::llm {

using nlohmann::json;
namespace fs = std::filesystem;

HttpChatClient::HttpChatClient(HttpChatOptions options) : options_(std::move(options)) {
    if (options_.endpoint.empty()) throw Error(ErrorKind::argument, "chat endpoint is empty");
}

ChatExchange HttpChatClient::complete(const ChatRequest& request) {
    if (options_.min_interval.count() > 0) {
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(pace_mutex_);
            const auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_slot_);
            next_slot_ = slot + options_.min_interval;
        }
        std::this_thread::sleep_until(slot);
    }

    const auto ep = detail::split_endpoint(options_.endpoint);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    httplib::Headers headers;
    if (!options_.api_key_env.empty()) {
        if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    const json body = {
        {"model", request.model_id},
        {"temperature", options_.temperature},
        {"messages", json::array({{{"role", "system"}, {"content", request.system_text}},
                                  {{"role", "user"}, {"content", request.user_text}}})},
    };

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(ep.path.empty() ? "/" : ep.path, headers, body.dump(), "application/json");
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    if (!res) {
        throw TransportError("POST " + options_.endpoint + " failed: " + httplib::to_string(res.error()), 1);
    }
    if (res->status != 200) {
        throw TransportError("POST " + options_.endpoint + " returned HTTP " + std::to_string(res->status), 1);
    }
    const json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("content") || !doc["content"].is_string()) {
        throw Error(ErrorKind::protocol, "chat response must be {\"content\": str}");
    }
    return {request.system_text, request.user_text, request.model_id, doc["content"].get<std::string>(),
            elapsed.count()};
}

CacheMode parse_cache_mode(const std::string& text) {
    if (text == "live") return CacheMode::live;
    if (text == "replay") return CacheMode::replay;
    throw Error(ErrorKind::argument, "unknown cache mode \"" + text + "\" (expected live or replay)");
}

std::string exchange_key(const ChatRequest& request) {
    std::string material;
    material.reserve(request.model_id.size() + request.system_text.size() + request.user_text.size() +
                     request.salt.size() + 3);
    material += request.model_id;
    material.push_back('\0');
    material += request.system_text;
    material.push_back('\0');
    material += request.user_text;
    material.push_back('\0');
    material += request.salt;
    return sha256_hex(material);
}

CachingChatClient::CachingChatClient(std::string cache_dir, CacheMode mode, std::shared_ptr<ChatClient> upstream)
    : cache_dir_(std::move(cache_dir)), mode_(mode), upstream_(std::move(upstream)) {
    if (mode_ == CacheMode::live && !upstream_) {
        throw Error(ErrorKind::argument, "live cache mode needs an upstream chat client");
    }
}

ChatExchange CachingChatClient::complete(const ChatRequest& request) {
    const std::string key = exchange_key(request);
    const fs::path file = fs::path(cache_dir_) / (key + ".json");
    if (fs::exists(file)) {
        const json doc = read_json_file(file.string());
        {
            std::lock_guard lock(stats_mutex_);
            ++hits_;
        }
        return {request.system_text, request.user_text, request.model_id,
                doc.at("response").get<std::string>(), 0.0};
    }
    {
        std::lock_guard lock(stats_mutex_);
        ++misses_;
    }
    if (mode_ == CacheMode::replay) {
        throw Error(ErrorKind::cache_miss, "no cached exchange " + key + " (salt \"" + request.salt + "\")");
    }
    ChatExchange exchange = upstream_->complete(request);
    const json doc = {
        {"model", request.model_id},
        {"salt", request.salt},
        {"system", request.system_text},
        {"user", request.user_text},
        {"response", exchange.response_text},
    };
    write_json_file(file.string(), doc);
    return exchange;
}

} // namespace responsivity::llm
