#pragma once

#include "responsivity/corpus.hpp"
#include "responsivity/linkspace.hpp"

#include <map>
#include <string>

namespace responsivity::mapviz {

struct MapStyle {
    // Speaker lanes are stacked in order of first appearance.
    std::map<links::LinkKind, std::string> arc_colors = {
        {links::LinkKind::substantive, "crimson"},
        {links::LinkKind::mechanical, "steelblue"},
        {links::LinkKind::unclassified, "gray"},
    };
    bool facilitator_accent = true;
    double turn_spacing = 36.0;
    double lane_height = 64.0;
    // Node radius scales linearly with speaking time up to max_radius.
    double max_radius = 14.0;
    double min_radius = 2.5;

    // Throws Error(argument) if a kind has no color or a size is not positive.
    void validate() const;
};

std::string render_map(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& links,
                       const MapStyle& style = {});

std::string xml_escape(std::string_view text);

} // namespace responsivity::mapviz
