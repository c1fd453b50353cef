#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

namespace responsivity::llm {

struct ChatRequest {
    std::string model_id;
    std::string system_text;
    std::string user_text;
    // Distinguishes repeated runs/attempts of an identical prompt in the cache.
    std::string salt;
};

struct ChatExchange {
    std::string system_text;
    std::string user_text;
    std::string model_id;
    std::string response_text;
    double latency = 0.0;
};

// Messages in, text out. Implementations must tolerate concurrent calls.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatExchange complete(const ChatRequest& request) = 0;
};

struct HttpChatOptions {
    std::string endpoint;
    // Name of the environment variable holding a bearer token; empty for none.
    std::string api_key_env = "RESPONSIVITY_API_KEY";
    double temperature = 0.0;
    std::chrono::seconds timeout{120};
    // Minimum spacing between requests to the endpoint.
    std::chrono::milliseconds min_interval{0};
};

// POST {endpoint} with {"model", "temperature", "messages": [{"role", "content"}]}
// and reads {"content": str} back.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpChatOptions options);

    ChatExchange complete(const ChatRequest& request) override;

private:
    HttpChatOptions options_;
    std::mutex pace_mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

enum class CacheMode {
    // Serve hits from the cache, forward misses upstream and record them.
    live,
    // Cache only; a miss throws Error(cache_miss).
    replay,
};

CacheMode parse_cache_mode(const std::string& text);

// Content-addressed exchange cache: one JSON file per request, named by
// exchange_key(request).
class CachingChatClient : public ChatClient {
public:
    CachingChatClient(std::string cache_dir, CacheMode mode, std::shared_ptr<ChatClient> upstream = nullptr);

    ChatExchange complete(const ChatRequest& request) override;

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    std::string cache_dir_;
    CacheMode mode_;
    std::shared_ptr<ChatClient> upstream_;
    std::mutex stats_mutex_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

std::string exchange_key(const ChatRequest& request);

} // namespace responsivity::llm
