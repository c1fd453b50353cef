#include "responsivity/linkspace.hpp"

#include "responsivity/error.hpp"

#include <algorithm>
#include <cctype>

namespace responsivity::links {

const char* to_string(LinkKind kind) {
    switch (kind) {
    case LinkKind::unclassified: return "unclassified";
    case LinkKind::mechanical: return "mechanical";
    case LinkKind::substantive: return "substantive";
    }
    return "unclassified";
}

LinkKind parse_kind(std::string_view text) {
    if (text == "unclassified") return LinkKind::unclassified;
    if (text == "mechanical") return LinkKind::mechanical;
    if (text == "substantive") return LinkKind::substantive;
    throw Error(ErrorKind::validation, "unknown link kind \"" + std::string(text) + "\"");
}

LinkTable::LinkTable(WindowConfig window) : window_(window) { window_.validate(); }

namespace {

void merge_segments(std::vector<SegmentPair>& into, const std::vector<SegmentPair>& from) {
    into.insert(into.end(), from.begin(), from.end());
    std::sort(into.begin(), into.end());
    into.erase(std::unique(into.begin(), into.end()), into.end());
}

} // namespace

void LinkTable::add(Link link) {
    if (link.target_turn < 0 || link.target_turn >= link.source_turn) {
        throw Error(ErrorKind::validation, "link " + std::to_string(link.source_turn) + " -> " +
                                               std::to_string(link.target_turn) +
                                               " does not point to a preceding turn");
    }
    if (!corpus::in_window(link.source_turn, link.target_turn, window_)) {
        throw Error(ErrorKind::validation, "link " + std::to_string(link.source_turn) + " -> " +
                                               std::to_string(link.target_turn) +
                                               " is outside the window of size " +
                                               std::to_string(window_.size));
    }
    auto& targets = by_turn_[link.source_turn];
    auto it = targets.find(link.target_turn);
    if (it == targets.end()) {
        merge_segments(link.segments, {});
        targets.emplace(link.target_turn, std::move(link));
        ++count_;
        return;
    }
    it->second.kind = std::max(it->second.kind, link.kind);
    merge_segments(it->second.segments, link.segments);
}

const Link* LinkTable::find(TurnId source, TurnId target) const {
    auto it = by_turn_.find(source);
    if (it == by_turn_.end()) return nullptr;
    auto jt = it->second.find(target);
    return jt == it->second.end() ? nullptr : &jt->second;
}

bool LinkTable::contains(TurnId source, TurnId target) const { return find(source, target) != nullptr; }

std::set<TurnId> LinkTable::targets(TurnId source) const {
    std::set<TurnId> out;
    if (auto it = by_turn_.find(source); it != by_turn_.end()) {
        for (const auto& [target, _] : it->second) out.insert(target);
    }
    return out;
}

std::set<TurnId> LinkTable::sources() const {
    std::set<TurnId> out;
    for (const auto& [source, targets] : by_turn_) {
        if (!targets.empty()) out.insert(source);
    }
    return out;
}

std::vector<Link> LinkTable::links() const {
    std::vector<Link> out;
    out.reserve(count_);
    for (const auto& [_, targets] : by_turn_) {
        for (const auto& [__, link] : targets) out.push_back(link);
    }
    return out;
}

namespace {

ConsolidatedAnnotation consolidate(std::span<const AnnotationRun> runs, int min_count,
                                   bool keep_kinds) {
    if (runs.empty()) {
        throw Error(ErrorKind::argument, "consolidation needs at least one run");
    }
    if (min_count < 1) {
        throw Error(ErrorKind::argument, "min_count must be >= 1");
    }
    const AnnotationRun& first = runs.front();
    for (const AnnotationRun& run : runs) {
        if (!(run.window() == first.window())) {
            throw Error(ErrorKind::argument, "runs disagree on window size");
        }
        if (run.conversation_id != first.conversation_id) {
            throw Error(ErrorKind::argument, "runs belong to different conversations (\"" +
                                                 first.conversation_id + "\" vs \"" +
                                                 run.conversation_id + "\")");
        }
    }

    std::map<std::pair<TurnId, TurnId>, int> counts;
    std::map<std::pair<TurnId, TurnId>, Link> merged;
    for (const AnnotationRun& run : runs) {
        for (const auto& [source, targets] : run.links.by_turn()) {
            for (const auto& [target, link] : targets) {
                const auto key = std::make_pair(source, target);
                ++counts[key];
                auto [it, inserted] = merged.emplace(key, link);
                if (!inserted) {
                    it->second.kind = std::max(it->second.kind, link.kind);
                    merge_segments(it->second.segments, link.segments);
                }
            }
        }
    }

    ConsolidatedAnnotation out;
    out.conversation_id = first.conversation_id;
    out.method_id = first.method_id;
    out.links = LinkTable(first.window());
    out.source_count = static_cast<int>(runs.size());
    out.min_count = min_count;
    for (const auto& [key, count] : counts) {
        if (count < min_count) continue;
        Link link = merged.at(key);
        if (!keep_kinds) {
            link.kind = LinkKind::unclassified;
            link.segments.clear();
        }
        out.links.add(std::move(link));
        out.provenance[key] = count;
    }
    return out;
}

} // namespace

ConsolidatedAnnotation consolidate_runs(std::span<const AnnotationRun> runs, int min_count) {
    return consolidate(runs, min_count, true);
}

int human_threshold(std::size_t annotator_count) {
    return static_cast<int>((annotator_count + 1) / 2);
}

ConsolidatedAnnotation consolidate_human(std::span<const AnnotationRun> annotators) {
    if (annotators.empty()) {
        throw Error(ErrorKind::argument, "human consolidation needs at least one annotator");
    }
    return consolidate(annotators, human_threshold(annotators.size()), false);
}

Link apply_segment_kinds(Link link) {
    bool any_mechanical = false;
    for (const SegmentPair& s : link.segments) {
        if (s.kind == LinkKind::substantive) {
            link.kind = LinkKind::substantive;
            return link;
        }
        any_mechanical = any_mechanical || s.kind == LinkKind::mechanical;
    }
    if (!any_mechanical) {
        throw Error(ErrorKind::state, "link " + std::to_string(link.source_turn) + " -> " +
                                          std::to_string(link.target_turn) +
                                          " has no classified segment");
    }
    link.kind = LinkKind::mechanical;
    return link;
}

AnnotationRun as_run(const ConsolidatedAnnotation& annotation, int run_index) {
    AnnotationRun run(annotation.conversation_id, annotation.method_id, run_index, annotation.window());
    run.links = annotation.links;
    return run;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

bool contains_normalized(std::string_view haystack, std::string_view needle) {
    const std::string n = collapse_whitespace(needle);
    if (n.empty()) return false;
    return collapse_whitespace(haystack).find(n) != std::string::npos;
}

void validate_against(const LinkTable& links, const corpus::Conversation& conv) {
    for (const Link& link : links.links()) {
        const corpus::Turn& source = conv.turn(link.source_turn);
        const corpus::Turn& target = conv.turn(link.target_turn);
        for (const SegmentPair& s : link.segments) {
            if (!contains_normalized(source.words, s.response_segment)) {
                throw Error(ErrorKind::validation, "segment of turn " + std::to_string(link.source_turn) +
                                                       " is not a substring of its words");
            }
            if (!contains_normalized(target.words, s.target_segment)) {
                throw Error(ErrorKind::validation, "segment of turn " + std::to_string(link.target_turn) +
                                                       " is not a substring of its words");
            }
        }
    }
}

} // namespace responsivity::links
