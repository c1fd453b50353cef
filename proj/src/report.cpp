#include "responsivity/report.hpp"

#include "responsivity/agreement.hpp"
#include "responsivity/annotation_io.hpp"
#include "responsivity/convmetrics.hpp"
#include "responsivity/embedding_provider.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"
#include "responsivity/hashing.hpp"
#include "responsivity/mapviz.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

namespace fs = std::filesystem;

namespace responsivity::report {

using nlohmann::json;

Backend parse_backend(const std::string& text) {
    if (text == "embedding") return Backend::embedding;
    if (text == "llm") return Backend::llm;
    throw Error(ErrorKind::argument, "unknown backend: " + text + " (expected embedding or llm)");
}

const char* to_string(Backend backend) { return backend == Backend::embedding ? "embedding" : "llm"; }

json RunConfig::echo() const {
    json j = {{"backend", to_string(backend)},
              {"window_size", window.size},
              {"min_count", min_count},
              {"skip_empty_pairs", skip_empty_pairs},
              {"clustering", clustering.echo()}};
    if (backend == Backend::embedding) {
        j["similarity"] = similarity.echo();
        j["embeddings_file"] = embeddings_file.empty() ? "" : fs::path(embeddings_file).filename().string();
        j["embed_endpoint"] = embed_endpoint;
    } else {
        j["llm"] = llm.echo();
        j["llm"]["templates_file"] = templates_file.empty() ? "" : fs::path(templates_file).filename().string();
        j["llm"]["cache_mode"] = cache_mode == llm::CacheMode::replay ? "replay" : "live";
        j["llm"]["chat_endpoint"] = chat_endpoint;
    }
    return j;
}

json Manifest::to_json() const {
    json list = json::array();
    for (const auto& f : files) list.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return {{"files", std::move(list)}};
}

std::string file_stem(const std::string& id) {
    std::string out;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

std::shared_ptr<llm::ChatClient> make_chat_client(const RunConfig& cfg) {
    std::shared_ptr<llm::ChatClient> upstream;
    if (!cfg.chat_endpoint.empty()) {
        llm::HttpChatOptions opts;
        opts.endpoint = cfg.chat_endpoint;
        upstream = std::make_shared<llm::HttpChatClient>(opts);
    }
    if (cfg.cache_dir.empty()) {
        if (!upstream) throw Error(ErrorKind::argument, "llm backend needs a cache directory or a chat endpoint");
        return upstream;
    }
    return std::make_shared<llm::CachingChatClient>(cfg.cache_dir, cfg.cache_mode, upstream);
}

std::unique_ptr<simlink::EmbeddingProvider> make_embedding_provider(const RunConfig& cfg) {
    if (!cfg.embeddings_file.empty()) return std::make_unique<simlink::FileEmbeddingProvider>(cfg.embeddings_file);
    if (!cfg.embed_endpoint.empty()) return std::make_unique<simlink::HttpEmbeddingProvider>(cfg.embed_endpoint);
    throw Error(ErrorKind::argument, "embedding backend needs an embeddings file or an endpoint");
}

namespace {

class Writer {
public:
    explicit Writer(fs::path root) : root_(std::move(root)) {}

    void text(const std::string& rel, const std::string& content) {
        write_text_file((root_ / rel).string(), content);
        manifest_.files.push_back({rel, sha256_hex(content)});
    }
    void json_doc(const std::string& rel, const json& doc) { text(rel, doc.dump(2) + "\n"); }

    Manifest finish() {
        std::sort(manifest_.files.begin(), manifest_.files.end(),
                  [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
        write_text_file((root_ / "manifest.json").string(), manifest_.to_json().dump(2) + "\n");
        return manifest_;
    }

private:
    fs::path root_;
    Manifest manifest_;
};

links::ConsolidatedAnnotation single(const links::AnnotationRun& run) {
    std::vector<links::AnnotationRun> one{run};
    return links::consolidate_runs(one, 1);
}

} // namespace

Manifest run_report(const ReportInputs& inputs, const RunConfig& cfg, const std::string& out_dir,
                    std::shared_ptr<llm::ChatClient> client) {
    if (inputs.transcripts.empty()) throw Error(ErrorKind::argument, "no transcripts given");
    cfg.window.validate();
    if (cfg.min_count < 1) throw Error(ErrorKind::argument, "min_count must be at least 1");
    Writer out{fs::path(out_dir)};
    const json echo = cfg.echo();

    // ingest
    std::map<std::string, corpus::Conversation> conversations;
    for (const auto& path : inputs.transcripts) {
        auto conv = corpus::load_transcript(path);
        const std::string id = conv.id();
        if (conversations.count(id)) throw Error(ErrorKind::validation, "duplicate conversation id: " + id);
        out.text("transcripts/" + file_stem(id) + ".json", corpus::serialize_transcript(conv));
        conversations.emplace(id, std::move(conv));
    }

    // annotate + consolidate
    llm::PipelineConfig llm_cfg = cfg.llm;
    llm_cfg.window = cfg.window;
    if (!cfg.templates_file.empty()) llm_cfg.templates = llm::load_templates(cfg.templates_file);
    simlink::SimilarityConfig sim_cfg = cfg.similarity;
    sim_cfg.window = cfg.window;
    std::unique_ptr<simlink::EmbeddingProvider> provider;
    if (cfg.backend == Backend::llm) {
        llm_cfg.validate();
        if (!client) client = make_chat_client(cfg);
    } else {
        sim_cfg.validate();
        provider = make_embedding_provider(cfg);
    }
    const std::string method = cfg.backend == Backend::llm ? llm_cfg.method_id : "similarity";

    std::map<std::string, links::ConsolidatedAnnotation> machine;
    std::map<std::string, std::vector<links::AnnotationRun>> machine_runs;
    for (const auto& [id, conv] : conversations) {
        std::vector<links::AnnotationRun> runs;
        json run_cfg;
        if (cfg.backend == Backend::llm) {
            auto outcome = llm::annotate_conversation(conv, *client, llm_cfg);
            runs = std::move(outcome.runs);
            run_cfg = echo["llm"];
            out.json_doc("annotations/" + file_stem(id) + "." + file_stem(method) + ".retries.json",
                         outcome.report.to_json());
        } else {
            simlink::FetchOptions fetch;
            fetch.cache_dir = cfg.embed_cache_dir;
            const auto vectors = simlink::embed_conversation(conv, *provider, fetch);
            runs.push_back(simlink::link_by_similarity(conv, vectors, sim_cfg, method));
            run_cfg = echo["similarity"];
        }
        for (const auto& run : runs) {
            out.json_doc("annotations/" + file_stem(id) + "." + file_stem(method) + ".run" +
                             std::to_string(run.run_index) + ".json",
                         links::to_json(run, run_cfg));
        }
        // a lone embedding run passes straight through
        const int min_count = static_cast<int>(runs.size()) == 1 ? 1 : cfg.min_count;
        auto consolidated = links::consolidate_runs(runs, min_count);
        json cons_cfg = run_cfg;
        cons_cfg["min_count"] = min_count;
        out.json_doc("annotations/" + file_stem(id) + "." + file_stem(method) + ".json",
                     links::to_json(consolidated, cons_cfg));
        machine.emplace(id, std::move(consolidated));
        machine_runs.emplace(id, std::move(runs));
    }

    // human gold, grouped per conversation
    std::map<std::string, std::vector<links::AnnotationRun>> human;
    for (const auto& path : inputs.human_annotations) {
        auto run = links::load_run(path);
        auto it = conversations.find(run.conversation_id);
        if (it == conversations.end()) {
            throw Error(ErrorKind::validation, path + ": unknown conversation " + run.conversation_id);
        }
        links::validate_against(run.links, it->second);
        human[run.conversation_id].push_back(std::move(run));
    }
    if (!human.empty() && human.size() != conversations.size()) {
        throw Error(ErrorKind::validation, "human annotations must cover every conversation or none");
    }

    // agree
    std::vector<agreement::AnnotationSource> sources;
    sources.push_back({method, machine});
    std::size_t run_count = 0;
    for (const auto& [id, runs] : machine_runs) run_count = std::max(run_count, runs.size());
    if (run_count > 1) {
        for (std::size_t r = 0; r < run_count; ++r) {
            agreement::AnnotationSource src{method + "/run" + std::to_string(r), {}};
            for (const auto& [id, runs] : machine_runs) src.by_conversation.emplace(id, single(runs.at(r)));
            sources.push_back(std::move(src));
        }
    }
    std::map<std::string, links::ConsolidatedAnnotation> human_consolidated;
    if (!human.empty()) {
        std::map<std::string, agreement::AnnotationSource> annotators;
        for (const auto& [id, runs] : human) {
            for (const auto& run : runs) {
                auto& src = annotators[run.method_id];
                src.method_id = run.method_id;
                if (!src.by_conversation.emplace(id, single(run)).second) {
                    throw Error(ErrorKind::validation, "annotator " + run.method_id + " appears twice for " + id);
                }
            }
            human_consolidated.emplace(id, links::consolidate_human(runs));
        }
        sources.push_back({"human", human_consolidated});
        for (auto& [name, src] : annotators) {
            // only annotators who covered the whole corpus can sit in the matrix
            if (src.by_conversation.size() == conversations.size()) sources.push_back(std::move(src));
        }
    }
    agreement::AgreementOptions agree_opts{cfg.skip_empty_pairs};
    json agree_doc = {{"config", {{"skip_empty_pairs", cfg.skip_empty_pairs}, {"window_size", cfg.window.size}}}};
    if (sources.size() >= 2) {
        const auto matrix = agreement::agreement_matrix(sources, conversations, agree_opts);
        out.text("agreement/matrix.csv", matrix.to_csv());
        agree_doc["matrix"] = matrix.to_json();
    }
    if (!human_consolidated.empty()) {
        agreement::ConfusionTally any;
        agreement::ConfusionTally subst;
        agreement::KindAgreement kinds;
        json per_conv = json::array();
        for (const auto& [id, conv] : conversations) {
            const auto& h = human_consolidated.at(id);
            const auto& m = machine.at(id);
            any += agreement::link_confusion(conv, h, m);
            subst += agreement::link_confusion(conv, h, m, links::LinkKind::substantive);
            const auto k = agreement::kind_agreement(h, m);
            kinds.compared += k.compared;
            kinds.matching += k.matching;
            for (const auto& [pair, n] : k.table) kinds.table[pair] += n;
            per_conv.push_back(agreement::conversation_agreement(conv, h, m, agree_opts).to_json());
        }
        agree_doc["human_vs_" + method] = {{"link_confusion", any.to_json()},
                                           {"substantive_confusion", subst.to_json()},
                                           {"kind_agreement", kinds.to_json()},
                                           {"conversations", std::move(per_conv)}};
    }
    out.json_doc("agreement/report.json", agree_doc);

    // features
    std::vector<metrics::FeatureVector> rows;
    for (const auto& [id, conv] : conversations) rows.push_back(metrics::compute_features(conv, machine.at(id)));
    out.text("features/features.csv", metrics::features_csv(rows, false));
    out.text("features/features_reduced.csv", metrics::features_csv(rows, true));
    json proxy = json::object();
    for (const auto& fv : rows) proxy[fv.conversation_id] = fv.speaking_time_proxy;
    out.json_doc("features/config.json",
                 {{"annotation_method", method}, {"speaking_time_proxy", std::move(proxy)},
                  {"proxy_words_per_second", corpus::kProxyWordsPerSecond}});

    // cluster
    const auto all_cols = metrics::all_features();
    const auto matrix = clusterlab::from_features(rows, all_cols);
    const auto result = clusterlab::run_pipeline(matrix, cfg.clustering);
    out.text("clusters/clusters.csv", result.assignment.to_csv());
    out.text("clusters/profile.csv", result.profile.to_csv());
    json cluster_doc = {{"config", result.assignment.config_echo}, {"warnings", result.standardized.warnings}};
    if (result.reduction.variance) cluster_doc["variance"] = result.reduction.variance->to_json();
    out.json_doc("clusters/config.json", cluster_doc);

    // render
    for (const auto& [id, conv] : conversations) {
        out.text("maps/" + file_stem(id) + ".svg", mapviz::render_map(conv, machine.at(id)));
    }

    out.json_doc("config.json", echo);
    return out.finish();
}

} // namespace responsivity::report
