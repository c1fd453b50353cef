#pragma once

#include "responsivity/linkspace.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace responsivity::links {

// Annotation JSON:
// {"conversation_id", "method_id", "run_index", "window_size",
//  "links": [{"source", "target", "kind", "segments": [{"response", "target", "kind"}]}]}
// Consolidated files add "provenance" and "consolidation", with run_index -1.
// `config` is echoed under "config" when non-null.
nlohmann::json to_json(const AnnotationRun& run, const nlohmann::json& config = nullptr);
nlohmann::json to_json(const ConsolidatedAnnotation& annotation,
                       const nlohmann::json& config = nullptr);

AnnotationRun run_from_json(const nlohmann::json& doc);
// Accepts both consolidated files and plain run files (treated as a
// single-source consolidation).
ConsolidatedAnnotation consolidated_from_json(const nlohmann::json& doc);

AnnotationRun load_run(const std::string& path);
ConsolidatedAnnotation load_annotation(const std::string& path);

} // namespace responsivity::links
