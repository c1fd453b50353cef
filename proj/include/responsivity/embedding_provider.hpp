#pragma once

#include "responsivity/simlink.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace responsivity::simlink {

// Source of sentence embeddings. Implementations must be safe to call from
// several threads at once.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // One vector per text, in order. Throws TransportError on failures that
    // are worth retrying.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;

    // Stable identifier mixed into cache keys.
    virtual std::string id() const = 0;
};

// Client for the embedding sidecar: POST {endpoint}/embed with
// {"texts": [...]}, answered by {"dimension": d, "vectors": [[...]]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(std::string endpoint,
                                   std::chrono::seconds timeout = std::chrono::seconds(60));

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return "http:" + endpoint_; }

    // GET {endpoint}/health; true on 200.
    bool healthy() const;

private:
    std::string endpoint_;
    std::chrono::seconds timeout_;
};

// Offline provider backed by a JSON object mapping sha256(text) to a vector.
class FileEmbeddingProvider : public EmbeddingProvider {
public:
    explicit FileEmbeddingProvider(const std::string& path);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return id_; }

    std::size_t size() const noexcept { return vectors_.size(); }

private:
    std::string id_;
    std::map<std::string, EmbeddingVector> vectors_;
};

std::string text_hash(const std::string& text);

struct FetchOptions {
    // Empty disables the on-disk cache.
    std::string cache_dir;
    std::size_t batch_size = 256;
    int max_retries = 2;
    int max_in_flight = 1;
};

// Embeds texts through the provider, deduplicating and caching by content
// hash. Checks arity and that every vector shares one dimension.
std::vector<EmbeddingVector> fetch_embeddings(const std::vector<std::string>& texts,
                                              EmbeddingProvider& provider,
                                              const FetchOptions& options = {});

// Embeddings for every turn of a conversation, keyed by turn id.
std::map<corpus::TurnId, EmbeddingVector> embed_conversation(const corpus::Conversation& conv,
                                                             EmbeddingProvider& provider,
                                                             const FetchOptions& options = {});

} // namespace responsivity::simlink
