#pragma once

#include "responsivity/corpus.hpp"

#include <compare>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace responsivity::links {

using corpus::TurnId;
using corpus::WindowConfig;

// Declaration order is strength order: merges keep the larger value.
enum class LinkKind { unclassified = 0, mechanical = 1, substantive = 2 };

const char* to_string(LinkKind kind);
LinkKind parse_kind(std::string_view text);

struct SegmentPair {
    std::string response_segment;
    std::string target_segment;
    LinkKind kind = LinkKind::unclassified;

    auto operator<=>(const SegmentPair&) const = default;
};

struct Link {
    TurnId source_turn = 0;
    TurnId target_turn = 0;
    LinkKind kind = LinkKind::unclassified;
    std::vector<SegmentPair> segments;

    bool operator==(const Link&) const = default;
};

// Set of links keyed by (source, target) that enforces target < source and
// window membership on insertion. Duplicate pairs collapse into one link with
// the strongest kind and the union of segments.
class LinkTable {
public:
    LinkTable() = default;
    explicit LinkTable(WindowConfig window);

    const WindowConfig& window() const noexcept { return window_; }

    // Throws Error(validation) when the link escapes the window.
    void add(Link link);

    bool contains(TurnId source, TurnId target) const;
    const Link* find(TurnId source, TurnId target) const;
    std::set<TurnId> targets(TurnId source) const;
    std::set<TurnId> sources() const;

    // Sorted by (source, target).
    std::vector<Link> links() const;
    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }

    const std::map<TurnId, std::map<TurnId, Link>>& by_turn() const noexcept { return by_turn_; }

    bool operator==(const LinkTable&) const = default;

private:
    WindowConfig window_{};
    std::map<TurnId, std::map<TurnId, Link>> by_turn_;
    std::size_t count_ = 0;
};

struct AnnotationRun {
    std::string conversation_id;
    std::string method_id;
    int run_index = 0;
    LinkTable links;

    AnnotationRun() = default;
    AnnotationRun(std::string conversation_id, std::string method_id, int run_index,
                  WindowConfig window)
        : conversation_id(std::move(conversation_id)), method_id(std::move(method_id)),
          run_index(run_index), links(window) {}

    const WindowConfig& window() const noexcept { return links.window(); }
};

struct ConsolidatedAnnotation {
    std::string conversation_id;
    std::string method_id;
    LinkTable links;
    // Number of contributing runs that carried each retained (source, target).
    std::map<std::pair<TurnId, TurnId>, int> provenance;
    int source_count = 0;
    int min_count = 0;

    const WindowConfig& window() const noexcept { return links.window(); }
};

// Keeps a (source, target) link iff it appears in >= min_count runs. Kinds
// merge substantive > mechanical > unclassified; segments are unioned.
ConsolidatedAnnotation consolidate_runs(std::span<const AnnotationRun> runs, int min_count = 2);

// Human gold merge: a link survives when at least ceil(n/2) annotators
// submitted it. Kinds are dropped to unclassified.
ConsolidatedAnnotation consolidate_human(std::span<const AnnotationRun> annotators);

int human_threshold(std::size_t annotator_count);

// Link kind from its classified segments: substantive if any segment is.
// Throws Error(state) when no segment carries a classification.
Link apply_segment_kinds(Link link);

// Views a consolidated result as a run so it can be consolidated again.
AnnotationRun as_run(const ConsolidatedAnnotation& annotation, int run_index = 0);

// Whitespace runs collapsed to one space, ends trimmed, case preserved.
std::string collapse_whitespace(std::string_view text);
bool contains_normalized(std::string_view haystack, std::string_view needle);

// Checks links against the conversation: ids in range and segment quotes
// recoverable from their turns.
void validate_against(const LinkTable& links, const corpus::Conversation& conv);

} // namespace responsivity::links
