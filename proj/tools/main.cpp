// responsivity command-line driver.
#include "responsivity/agreement.hpp"
#include "responsivity/annotation_io.hpp"
#include "responsivity/clusterlab.hpp"
#include "responsivity/convmetrics.hpp"
#include "responsivity/embedding_provider.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"
#include "responsivity/llm_pipeline.hpp"
#include "responsivity/mapviz.hpp"
#include "responsivity/report.hpp"
#include "responsivity/simlink.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace responsivity;
using nlohmann::json;

namespace {

enum Exit { ok = 0, usage = 1, invalid = 2, transport = 3, cache_miss = 4 };

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::argument: return usage;
    case ErrorKind::transport:
    case ErrorKind::run: return transport;
    case ErrorKind::cache_miss: return cache_miss;
    default: return invalid;
    }
}

// Options shared by annotate and report.
struct Settings {
    std::string backend = "llm";
    int window = 10;
    double threshold = 0.5;
    bool no_normalize = false;
    std::string embeddings_file;
    std::string embed_endpoint;
    std::string embed_cache;
    std::string model = "default-model";
    std::string method_id = "llm";
    int runs = 3;
    int retry_budget = 2;
    int max_in_flight = 1;
    std::string templates;
    std::string endpoint;
    std::string cache_dir;
    std::string cache_mode = "replay";
    int min_count = 2;

    void add_annotation_options(CLI::App* cmd) {
        cmd->add_option("--backend", backend, "embedding or llm")->check(CLI::IsMember({"embedding", "llm"}));
        cmd->add_option("--window", window, "turns looked back from each source turn");
        cmd->add_option("--threshold", threshold, "cosine cutoff for the embedding backend");
        cmd->add_flag("--no-normalize", no_normalize, "skip L2 normalization of embeddings");
        cmd->add_option("--embeddings", embeddings_file, "file-backed embeddings (sha256(text) -> vector)");
        cmd->add_option("--embed-endpoint", embed_endpoint, "embedding service base URL");
        cmd->add_option("--embed-cache", embed_cache, "embedding cache directory");
        cmd->add_option("--model", model, "chat model id");
        cmd->add_option("--method-id", method_id, "label stored with llm annotations");
        cmd->add_option("--runs", runs, "independent llm runs per conversation");
        cmd->add_option("--retry-budget", retry_budget, "re-asks per malformed response");
        cmd->add_option("--max-in-flight", max_in_flight, "concurrent chat requests");
        cmd->add_option("--templates", templates, "prompt template JSON");
        cmd->add_option("--endpoint", endpoint, "chat completion URL (key from RESPONSIVITY_API_KEY)");
        cmd->add_option("--cache-dir", cache_dir, "prompt/response cache directory");
        cmd->add_option("--cache-mode", cache_mode, "live or replay")->check(CLI::IsMember({"live", "replay"}));
    }

    report::RunConfig run_config() const {
        report::RunConfig cfg;
        cfg.backend = report::parse_backend(backend);
        cfg.window.size = window;
        cfg.min_count = min_count;
        cfg.similarity.threshold = threshold;
        cfg.similarity.normalize = !no_normalize;
        cfg.similarity.window = cfg.window;
        cfg.embeddings_file = embeddings_file;
        cfg.embed_endpoint = embed_endpoint;
        cfg.embed_cache_dir = embed_cache;
        cfg.llm.model_id = model;
        cfg.llm.method_id = method_id;
        cfg.llm.runs = runs;
        cfg.llm.retry_budget = retry_budget;
        cfg.llm.max_in_flight = max_in_flight;
        cfg.llm.window = cfg.window;
        cfg.templates_file = templates;
        cfg.chat_endpoint = endpoint;
        cfg.cache_dir = cache_dir;
        cfg.cache_mode = llm::parse_cache_mode(cache_mode);
        return cfg;
    }
};

struct ClusterSettings {
    std::string preset = "reduced";
    std::vector<std::string> features;
    std::string method = "principal-components";
    int dims = 0; // 0: preset default
    int min_cluster_size = 5;
    int min_samples = 0;
    std::uint64_t seed = 42;
    int neighbors = 15;
    double min_dist = 0.1;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "reduced or full")->check(CLI::IsMember({"reduced", "full"}));
        cmd->add_option("--features", features, "explicit feature columns (overrides the preset)")->delimiter(',');
        cmd->add_option("--reduction", method, "principal-components or neighbor-embedding");
        cmd->add_option("--dims", dims, "reduced dimensionality");
        cmd->add_option("--min-cluster-size", min_cluster_size);
        cmd->add_option("--min-samples", min_samples, "0 = min-cluster-size");
        cmd->add_option("--seed", seed);
        cmd->add_option("--neighbors", neighbors, "neighbor-embedding graph size");
        cmd->add_option("--min-dist", min_dist, "neighbor-embedding min distance");
    }

    clusterlab::PipelineConfig config() const {
        auto cfg = preset == "full" ? clusterlab::full_preset() : clusterlab::reduced_preset();
        if (!features.empty()) cfg.feature_subset = features;
        cfg.reduction.method = clusterlab::parse_reduction_method(method);
        if (dims > 0) cfg.reduction.dims = dims;
        cfg.reduction.seed = seed;
        cfg.reduction.n_neighbors = neighbors;
        cfg.reduction.min_dist = min_dist;
        cfg.clustering.min_cluster_size = min_cluster_size;
        cfg.clustering.min_samples = min_samples;
        cfg.clustering.seed = seed;
        return cfg;
    }
};

std::map<std::string, corpus::Conversation> load_conversations(const std::vector<std::string>& paths) {
    std::map<std::string, corpus::Conversation> out;
    for (const auto& p : paths) {
        auto conv = corpus::load_transcript(p);
        std::string id = conv.id();
        if (!out.emplace(id, std::move(conv)).second) {
            throw Error(ErrorKind::validation, "duplicate conversation id " + id + " in " + p);
        }
    }
    return out;
}

const corpus::Conversation& conversation_for(const std::map<std::string, corpus::Conversation>& convs,
                                             const std::string& id, const std::string& what) {
    auto it = convs.find(id);
    if (it == convs.end()) throw Error(ErrorKind::validation, what + " refers to unknown conversation " + id);
    return it->second;
}

void write_or_print(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        write_text_file(path, content);
    }
}

int cmd_ingest(const std::vector<std::string>& files, const std::string& out_dir) {
    for (const auto& f : files) {
        auto conv = corpus::load_transcript(f);
        if (!out_dir.empty()) {
            write_text_file((fs::path(out_dir) / (report::file_stem(conv.id()) + ".json")).string(),
                            corpus::serialize_transcript(conv));
        }
        std::cout << conv.id() << ": " << conv.size() << " turns, " << conv.observed_speakers().size()
                  << " speakers\n";
    }
    return ok;
}

int cmd_annotate(const std::string& transcript, const Settings& s, const std::string& out_dir) {
    const auto cfg = s.run_config();
    const auto conv = corpus::load_transcript(transcript);
    const auto stem = (fs::path(out_dir) / report::file_stem(conv.id())).string();
    if (cfg.backend == report::Backend::embedding) {
        cfg.similarity.validate();
        auto provider = report::make_embedding_provider(cfg);
        simlink::FetchOptions fetch;
        fetch.cache_dir = cfg.embed_cache_dir;
        const auto vectors = simlink::embed_conversation(conv, *provider, fetch);
        const auto run = simlink::link_by_similarity(conv, vectors, cfg.similarity);
        json echo = cfg.similarity.echo();
        echo["embedding_provider"] = provider->id();
        write_json_file(stem + ".similarity.run0.json", links::to_json(run, echo));
        std::cout << conv.id() << ": " << run.links.size() << " links\n";
        return ok;
    }
    llm::PipelineConfig pc = cfg.llm;
    if (!cfg.templates_file.empty()) pc.templates = llm::load_templates(cfg.templates_file);
    pc.validate();
    auto client = report::make_chat_client(cfg);
    const auto outcome = llm::annotate_conversation(conv, *client, pc);
    const auto method = report::file_stem(pc.method_id);
    json echo = cfg.echo()["llm"];
    for (const auto& run : outcome.runs) {
        write_json_file(stem + "." + method + ".run" + std::to_string(run.run_index) + ".json",
                        links::to_json(run, echo));
    }
    write_json_file(stem + "." + method + ".retries.json", outcome.report.to_json());
    std::cout << conv.id() << ": " << outcome.runs.size() << " runs, " << outcome.report.retries() << " retries, "
              << outcome.report.abandoned() << " abandoned\n";
    return ok;
}

int cmd_consolidate(const std::vector<std::string>& files, int min_count, bool human, const std::string& out) {
    std::vector<links::AnnotationRun> runs;
    for (const auto& f : files) runs.push_back(links::load_run(f));
    const auto result = human ? links::consolidate_human(runs) : links::consolidate_runs(runs, min_count);
    json echo = {{"mode", human ? "human" : "runs"}, {"min_count", result.min_count}, {"window_size", result.window().size}};
    write_or_print(out, links::to_json(result, echo).dump(2) + "\n");
    return ok;
}

int cmd_agree(const std::vector<std::string>& files, const std::vector<std::string>& transcripts, bool by_file,
              bool skip_empty, const std::string& out_csv, const std::string& out_json) {
    const auto convs = load_conversations(transcripts);
    std::vector<agreement::AnnotationSource> sources;
    std::map<std::string, std::size_t> index;
    for (const auto& f : files) {
        auto ann = links::load_annotation(f);
        conversation_for(convs, ann.conversation_id, f);
        const std::string label = by_file ? fs::path(f).stem().string() : ann.method_id;
        auto [it, fresh] = index.emplace(label, sources.size());
        if (fresh) sources.push_back({label, {}});
        auto& src = sources[it->second];
        const std::string conv_id = ann.conversation_id;
        if (!src.by_conversation.emplace(conv_id, std::move(ann)).second) {
            throw Error(ErrorKind::argument, "two annotations labelled " + label + " for " + conv_id +
                                                 "; pass --by-file to label by file name");
        }
    }
    // only the conversations the annotations actually cover
    std::map<std::string, corpus::Conversation> used;
    for (const auto& src : sources) {
        for (const auto& [id, ann] : src.by_conversation) used.emplace(id, convs.at(id));
    }
    agreement::AgreementOptions opts{skip_empty};
    const auto matrix = agreement::agreement_matrix(sources, used, opts);
    write_or_print(out_csv, matrix.to_csv());
    if (!out_json.empty()) {
        json pairs = json::array();
        for (std::size_t i = 0; i < sources.size(); ++i) {
            for (std::size_t j = i + 1; j < sources.size(); ++j) {
                agreement::ConfusionTally tally;
                json per_conv = json::array();
                for (const auto& [id, conv] : used) {
                    const auto& a = sources[i].by_conversation.at(id);
                    const auto& b = sources[j].by_conversation.at(id);
                    tally += agreement::link_confusion(conv, a, b);
                    per_conv.push_back(agreement::conversation_agreement(conv, a, b, opts).to_json());
                }
                pairs.push_back({{"a", sources[i].method_id},
                                 {"b", sources[j].method_id},
                                 {"link_confusion", tally.to_json()},
                                 {"conversations", std::move(per_conv)}});
            }
        }
        write_json_file(out_json, {{"config", {{"skip_empty_pairs", skip_empty}}},
                                   {"matrix", matrix.to_json()},
                                   {"pairs", std::move(pairs)}});
    }
    return ok;
}

int cmd_features(const std::vector<std::string>& transcripts, const std::vector<std::string>& annotations,
                 bool reduced, const std::string& out) {
    const auto convs = load_conversations(transcripts);
    std::map<std::string, links::ConsolidatedAnnotation> anns;
    std::string method;
    for (const auto& f : annotations) {
        auto ann = links::load_annotation(f);
        conversation_for(convs, ann.conversation_id, f);
        method = ann.method_id;
        std::string id = ann.conversation_id;
        if (!anns.emplace(id, std::move(ann)).second) {
            throw Error(ErrorKind::argument, "two annotations for conversation " + id);
        }
    }
    std::vector<metrics::FeatureVector> rows;
    json proxy = json::object();
    for (const auto& [id, conv] : convs) {
        auto it = anns.find(id);
        if (it == anns.end()) throw Error(ErrorKind::validation, "no annotation for conversation " + id);
        rows.push_back(metrics::compute_features(conv, it->second));
        proxy[id] = rows.back().speaking_time_proxy;
    }
    write_or_print(out, metrics::features_csv(rows, reduced));
    if (!out.empty() && out != "-") {
        write_json_file(out + ".config.json", {{"reduced", reduced},
                                               {"annotation_method", method},
                                               {"speaking_time_proxy", std::move(proxy)},
                                               {"proxy_words_per_second", corpus::kProxyWordsPerSecond}});
    }
    return ok;
}

int cmd_cluster(const std::string& features, const ClusterSettings& s, const std::string& out_dir) {
    const auto matrix = clusterlab::read_features_csv(features);
    const auto result = clusterlab::run_pipeline(matrix, s.config());
    const fs::path dir(out_dir);
    write_text_file((dir / "clusters.csv").string(), result.assignment.to_csv());
    write_text_file((dir / "profile.csv").string(), result.profile.to_csv());
    json doc = {{"config", result.assignment.config_echo}, {"warnings", result.standardized.warnings}};
    if (result.reduction.variance) doc["variance"] = result.reduction.variance->to_json();
    write_json_file((dir / "config.json").string(), doc);
    for (const auto& w : result.standardized.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << result.assignment.cluster_count() << " clusters over " << matrix.rows() << " rows\n";
    return ok;
}

int cmd_render(const std::string& transcript, const std::string& annotation, const std::string& out) {
    const auto conv = corpus::load_transcript(transcript);
    const auto ann = links::load_annotation(annotation);
    write_or_print(out, mapviz::render_map(conv, ann));
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Responsivity annotation and conversation-structure toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with option values");

    std::vector<std::string> files;
    std::vector<std::string> transcripts;
    std::vector<std::string> annotations;
    std::vector<std::string> humans;
    std::string transcript;
    std::string annotation;
    std::string out;
    std::string out_json;
    std::string out_dir;
    bool flag_a = false;
    bool flag_b = false;
    Settings settings;
    ClusterSettings cluster_settings;

    auto* ingest = app.add_subcommand("ingest", "validate transcripts and write canonical JSON");
    ingest->add_option("transcripts", files)->required()->check(CLI::ExistingFile);
    ingest->add_option("--out-dir", out_dir);

    auto* annotate = app.add_subcommand("annotate", "detect responsivity links in one transcript");
    annotate->add_option("transcript", transcript)->required()->check(CLI::ExistingFile);
    annotate->add_option("--out-dir", out_dir)->required();
    settings.add_annotation_options(annotate);

    auto* consolidate = app.add_subcommand("consolidate", "merge runs or annotators into one link set");
    consolidate->add_option("runs", files)->required()->check(CLI::ExistingFile);
    consolidate->add_option("--min-count", settings.min_count, "runs a link must appear in");
    consolidate->add_flag("--human", flag_a, "majority over annotators, kinds dropped");
    consolidate->add_option("--out", out, "output file (default stdout)");

    auto* agree = app.add_subcommand("agree", "pairwise Jaccard agreement between annotation sources");
    agree->add_option("annotations", files)->required()->check(CLI::ExistingFile);
    agree->add_option("--transcript", transcripts, "transcripts the annotations refer to")
        ->required()
        ->check(CLI::ExistingFile);
    agree->add_flag("--by-file", flag_a, "label sources by file name instead of method id");
    agree->add_flag("--skip-empty-pairs", flag_b, "ignore turns where both sides have no targets");
    agree->add_option("--out", out, "matrix CSV (default stdout)");
    agree->add_option("--report", out_json, "detailed JSON report");

    auto* features = app.add_subcommand("features", "per-conversation structure features");
    features->add_option("--transcript", transcripts)->required()->check(CLI::ExistingFile);
    features->add_option("--annotation", annotations)->required()->check(CLI::ExistingFile);
    features->add_flag("--reduced", flag_a, "only the clustering preset columns");
    features->add_option("--out", out, "CSV output (default stdout)");

    auto* cluster = app.add_subcommand("cluster", "standardize, reduce and cluster a features CSV");
    cluster->add_option("features_csv", transcript, "features CSV")->required()->check(CLI::ExistingFile);
    cluster->add_option("--out-dir", out_dir)->required();
    cluster_settings.add_options(cluster);

    auto* render = app.add_subcommand("render", "conversation map as SVG");
    render->add_option("--transcript", transcript)->required()->check(CLI::ExistingFile);
    render->add_option("--annotation", annotation)->required()->check(CLI::ExistingFile);
    render->add_option("--out", out, "SVG output (default stdout)");

    auto* rep = app.add_subcommand("report", "whole pipeline into one directory with a manifest");
    rep->add_option("transcripts", files)->required()->check(CLI::ExistingFile);
    rep->add_option("--human", humans, "per-annotator gold runs")->check(CLI::ExistingFile);
    rep->add_option("--out-dir", out_dir)->required();
    rep->add_option("--min-count", settings.min_count, "runs a link must appear in");
    rep->add_flag("--skip-empty-pairs", flag_b);
    settings.add_annotation_options(rep);
    cluster_settings.add_options(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*ingest) return cmd_ingest(files, out_dir);
        if (*annotate) return cmd_annotate(transcript, settings, out_dir);
        if (*consolidate) return cmd_consolidate(files, settings.min_count, flag_a, out);
        if (*agree) return cmd_agree(files, transcripts, flag_a, flag_b, out, out_json);
        if (*features) return cmd_features(transcripts, annotations, flag_a, out);
        if (*cluster) return cmd_cluster(transcript, cluster_settings, out_dir);
        if (*render) return cmd_render(transcript, annotation, out);
        if (*rep) {
            auto cfg = settings.run_config();
            cfg.skip_empty_pairs = flag_b;
            cfg.clustering = cluster_settings.config();
            const auto manifest = report::run_report({files, humans}, cfg, out_dir);
            std::cout << manifest.files.size() << " files written to " << out_dir << "\n";
            return ok;
        }
    } catch (const RunError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return transport;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    }
    return usage;
}
