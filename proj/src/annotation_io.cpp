#include "responsivity/annotation_io.hpp"

#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"

namespace responsivity::links {

using nlohmann::json;

namespace {

json links_json(const LinkTable& table) {
    json out = json::array();
    for (const Link& link : table.links()) {
        json segments = json::array();
        for (const SegmentPair& s : link.segments) {
            segments.push_back({{"response", s.response_segment},
                                {"target", s.target_segment},
                                {"kind", to_string(s.kind)}});
        }
        out.push_back({{"source", link.source_turn},
                       {"target", link.target_turn},
                       {"kind", to_string(link.kind)},
                       {"segments", std::move(segments)}});
    }
    return out;
}

template <typename T>
T field(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) {
        throw Error(ErrorKind::parse, std::string("annotation: missing field \"") + key + "\"");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::parse, std::string("annotation: field \"") + key + "\" has the wrong type");
    }
}

LinkTable parse_links(const json& doc) {
    WindowConfig window{field<int>(doc, "window_size")};
    window.validate();
    LinkTable table(window);
    for (const json& jl : field<json>(doc, "links")) {
        Link link;
        link.source_turn = field<int>(jl, "source");
        link.target_turn = field<int>(jl, "target");
        link.kind = parse_kind(jl.value("kind", std::string("unclassified")));
        if (auto it = jl.find("segments"); it != jl.end()) {
            for (const json& js : *it) {
                SegmentPair s;
                s.response_segment = field<std::string>(js, "response");
                s.target_segment = field<std::string>(js, "target");
                s.kind = parse_kind(js.value("kind", std::string("unclassified")));
                link.segments.push_back(std::move(s));
            }
        }
        table.add(std::move(link));
    }
    return table;
}

} // namespace

json to_json(const AnnotationRun& run, const json& config) {
    json doc;
    doc["conversation_id"] = run.conversation_id;
    doc["method_id"] = run.method_id;
    doc["run_index"] = run.run_index;
    doc["window_size"] = run.window().size;
    doc["links"] = links_json(run.links);
    if (!config.is_null()) doc["config"] = config;
    return doc;
}

json to_json(const ConsolidatedAnnotation& annotation, const json& config) {
    json doc;
    doc["conversation_id"] = annotation.conversation_id;
    doc["method_id"] = annotation.method_id;
    doc["run_index"] = -1;
    doc["window_size"] = annotation.window().size;
    doc["links"] = links_json(annotation.links);
    doc["consolidation"] = {{"source_count", annotation.source_count},
                            {"min_count", annotation.min_count}};
    json prov = json::array();
    for (const auto& [key, count] : annotation.provenance) {
        prov.push_back({{"source", key.first}, {"target", key.second}, {"count", count}});
    }
    doc["provenance"] = std::move(prov);
    if (!config.is_null()) doc["config"] = config;
    return doc;
}

AnnotationRun run_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorKind::parse, "annotation must be a JSON object");
    }
    AnnotationRun run;
    run.conversation_id = field<std::string>(doc, "conversation_id");
    run.method_id = field<std::string>(doc, "method_id");
    run.run_index = field<int>(doc, "run_index");
    run.links = parse_links(doc);
    return run;
}

ConsolidatedAnnotation consolidated_from_json(const json& doc) {
    AnnotationRun run = run_from_json(doc);
    ConsolidatedAnnotation out;
    out.conversation_id = run.conversation_id;
    out.method_id = run.method_id;
    out.links = std::move(run.links);
    if (auto it = doc.find("consolidation"); it != doc.end()) {
        out.source_count = it->value("source_count", 1);
        out.min_count = it->value("min_count", 1);
    } else {
        out.source_count = 1;
        out.min_count = 1;
    }
    if (auto it = doc.find("provenance"); it != doc.end()) {
        for (const json& p : *it) {
            out.provenance[{field<int>(p, "source"), field<int>(p, "target")}] = field<int>(p, "count");
        }
    } else {
        for (const Link& link : out.links.links()) {
            out.provenance[{link.source_turn, link.target_turn}] = 1;
        }
    }
    return out;
}

AnnotationRun load_run(const std::string& path) { return run_from_json(read_json_file(path)); }

ConsolidatedAnnotation load_annotation(const std::string& path) {
    return consolidated_from_json(read_json_file(path));
}

} // namespace responsivity::links
