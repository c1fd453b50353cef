#pragma once

#include "responsivity/chat_client.hpp"
#include "responsivity/clusterlab.hpp"
#include "responsivity/llm_pipeline.hpp"
#include "responsivity/embedding_provider.hpp"
#include "responsivity/simlink.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace responsivity::report {

enum class Backend { embedding, llm };

Backend parse_backend(const std::string& text);
const char* to_string(Backend backend);

struct RunConfig {
    Backend backend = Backend::llm;
    corpus::WindowConfig window{};
    int min_count = 2;

    // embedding backend
    simlink::SimilarityConfig similarity{};
    std::string embeddings_file; // file-backed vectors; wins over the endpoint
    std::string embed_endpoint;
    std::string embed_cache_dir;

    // llm backend
    llm::PipelineConfig llm{};
    std::string templates_file;
    std::string chat_endpoint;
    std::string cache_dir;
    llm::CacheMode cache_mode = llm::CacheMode::replay;

    bool skip_empty_pairs = false;
    clusterlab::PipelineConfig clustering = clusterlab::reduced_preset();

    // Every effective setting, defaults included.
    nlohmann::json echo() const;
};

struct ManifestEntry {
    std::string path; // relative to the output directory
    std::string sha256;
};

struct Manifest {
    std::vector<ManifestEntry> files;
    nlohmann::json to_json() const;
};

// Filename-safe form of an id.
std::string file_stem(const std::string& id);

// Builds the chat client described by cfg (cache in front of an optional
// HTTP upstream).
std::shared_ptr<llm::ChatClient> make_chat_client(const RunConfig& cfg);
std::unique_ptr<simlink::EmbeddingProvider> make_embedding_provider(const RunConfig& cfg);

struct ReportInputs {
    std::vector<std::string> transcripts;
    // Per-annotator human runs; optional, but when given they must cover every
    // conversation.
    std::vector<std::string> human_annotations;
};

// ingest -> annotate -> consolidate -> agree -> features -> cluster -> render,
// writing everything under out_dir plus manifest.json. `client` overrides the
// chat client built from cfg.
Manifest run_report(const ReportInputs& inputs, const RunConfig& cfg, const std::string& out_dir,
                    std::shared_ptr<llm::ChatClient> client = nullptr);

} // namespace responsivity::report
