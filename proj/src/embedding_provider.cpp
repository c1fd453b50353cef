#include "responsivity/embedding_provider.hpp"

#include "http_endpoint.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"
#include "responsivity/hashing.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <set>
#include <thread>

namespace responsivity::simlink {

using nlohmann::json;
namespace fs = std::filesystem;

std::string text_hash(const std::string& text) { return sha256_hex(text); }

namespace {

EmbeddingVector vector_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorKind::protocol, "embedding must be an array of numbers");
    EmbeddingVector v;
    v.values.reserve(j.size());
    for (const json& x : j) {
        if (!x.is_number()) throw Error(ErrorKind::protocol, "embedding must be an array of numbers");
        v.values.push_back(x.get<double>());
    }
    return v;
}

} // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    const auto ep = detail::split_endpoint(endpoint_);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    const json body = {{"texts", texts}};
    auto res = client.Post(ep.path + "/embed", body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + endpoint_ + "/embed failed: " + httplib::to_string(res.error()), 1);
    }
    if (res->status != 200) {
        throw TransportError("POST " + endpoint_ + "/embed returned HTTP " + std::to_string(res->status), 1);
    }
    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw Error(ErrorKind::protocol, "embedding response is not JSON");
    }
    if (!doc.contains("vectors") || !doc.contains("dimension")) {
        throw Error(ErrorKind::protocol, "embedding response lacks \"dimension\" or \"vectors\"");
    }
    const auto dimension = doc["dimension"].get<std::size_t>();
    std::vector<EmbeddingVector> out;
    for (const json& jv : doc["vectors"]) {
        out.push_back(vector_from_json(jv));
        if (out.back().dimension() != dimension) {
            throw Error(ErrorKind::protocol, "vector dimension disagrees with advertised dimension");
        }
    }
    return out;
}

bool HttpEmbeddingProvider::healthy() const {
    const auto ep = detail::split_endpoint(endpoint_);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(timeout_);
    auto res = client.Get(ep.path + "/health");
    return res && res->status == 200;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& path) {
    const json doc = read_json_file(path);
    if (!doc.is_object()) {
        throw Error(ErrorKind::parse, path + ": embedding file must map text hashes to vectors");
    }
    for (const auto& [hash, jv] : doc.items()) vectors_[hash] = vector_from_json(jv);
    id_ = "file:" + sha256_file_hex(path);
}

std::vector<EmbeddingVector> FileEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        auto it = vectors_.find(text_hash(text));
        if (it == vectors_.end()) {
            throw Error(ErrorKind::lookup, "no embedding on file for text hash " + text_hash(text));
        }
        out.push_back(it->second);
    }
    return out;
}

namespace {

std::string cache_key(const EmbeddingProvider& provider, const std::string& text) {
    return sha256_hex(provider.id() + '\0' + text);
}

std::vector<EmbeddingVector> embed_with_retry(EmbeddingProvider& provider,
                                              const std::vector<std::string>& batch, int max_retries) {
    int attempts = 0;
    for (;;) {
        ++attempts;
        try {
            auto out = provider.embed(batch);
            if (out.size() != batch.size()) {
                throw Error(ErrorKind::protocol, "provider returned " + std::to_string(out.size()) +
                                                     " vectors for " + std::to_string(batch.size()) +
                                                     " texts");
            }
            return out;
        } catch (const TransportError& e) {
            if (attempts > max_retries) throw TransportError(e.what(), attempts);
        }
    }
}

} // namespace

std::vector<EmbeddingVector> fetch_embeddings(const std::vector<std::string>& texts,
                                              EmbeddingProvider& provider, const FetchOptions& options) {
    if (options.batch_size == 0) throw Error(ErrorKind::argument, "batch_size must be positive");

    std::map<std::string, EmbeddingVector> resolved;
    std::vector<std::string> missing;
    std::set<std::string> queued;
    for (const std::string& text : texts) {
        if (resolved.count(text) || queued.count(text)) continue;
        if (!options.cache_dir.empty()) {
            const fs::path file = fs::path(options.cache_dir) / (cache_key(provider, text) + ".json");
            if (fs::exists(file)) {
                resolved.emplace(text, vector_from_json(read_json_file(file.string())));
                continue;
            }
        }
        missing.push_back(text);
        queued.insert(text);
    }

    std::vector<std::vector<std::string>> batches;
    for (std::size_t i = 0; i < missing.size(); i += options.batch_size) {
        batches.emplace_back(missing.begin() + static_cast<std::ptrdiff_t>(i),
                             missing.begin() + static_cast<std::ptrdiff_t>(
                                                   std::min(missing.size(), i + options.batch_size)));
    }
    std::vector<std::vector<EmbeddingVector>> results(batches.size());
    std::vector<std::exception_ptr> errors(batches.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t b = next++; b < batches.size(); b = next++) {
            try {
                results[b] = embed_with_retry(provider, batches[b], options.max_retries);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    const auto workers = std::min<std::size_t>(std::max(1, options.max_in_flight), batches.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t b = 0; b < batches.size(); ++b) {
        for (std::size_t i = 0; i < batches[b].size(); ++i) {
            const std::string& text = batches[b][i];
            if (!options.cache_dir.empty()) {
                const fs::path file = fs::path(options.cache_dir) / (cache_key(provider, text) + ".json");
                write_text_file(file.string(), json(results[b][i].values).dump() + "\n");
            }
            resolved.emplace(text, std::move(results[b][i]));
        }
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        out.push_back(resolved.at(text));
        if (out.back().dimension() != out.front().dimension()) {
            throw Error(ErrorKind::protocol, "embedding dimension drift within one batch");
        }
        if (out.back().dimension() == 0) {
            throw Error(ErrorKind::protocol, "provider returned an empty vector");
        }
    }
    return out;
}

std::map<corpus::TurnId, EmbeddingVector> embed_conversation(const corpus::Conversation& conv,
                                                             EmbeddingProvider& provider,
                                                             const FetchOptions& options) {
    std::vector<std::string> texts;
    texts.reserve(conv.size());
    for (const corpus::Turn& t : conv.turns()) texts.push_back(t.words);
    auto vectors = fetch_embeddings(texts, provider, options);
    std::map<corpus::TurnId, EmbeddingVector> out;
    for (const corpus::Turn& t : conv.turns()) {
        out.emplace(t.turn_id, std::move(vectors[static_cast<std::size_t>(t.turn_id)]));
    }
    return out;
}

} // namespace responsivity::simlink
