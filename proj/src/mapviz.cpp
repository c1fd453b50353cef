#include "responsivity/mapviz.hpp"

#include "responsivity/error.hpp"

#include <algorithm>
#include <cstdio>

namespace responsivity::mapviz {

using links::LinkKind;

void MapStyle::validate() const {
    for (LinkKind k : {LinkKind::unclassified, LinkKind::mechanical, LinkKind::substantive}) {
        auto it = arc_colors.find(k);
        if (it == arc_colors.end() || it->second.empty()) {
            throw Error(ErrorKind::argument, std::string("no arc color for kind ") + links::to_string(k));
        }
    }
    if (!(turn_spacing > 0) || !(lane_height > 0) || !(max_radius > 0) || !(min_radius > 0) || min_radius > max_radius) {
        throw Error(ErrorKind::argument, "map sizes must be positive with min_radius <= max_radius");
    }
}

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default:
            // XML 1.0 forbids most control characters
            if (static_cast<unsigned char>(c) < 0x20 && c != '\n' && c != '\t' && c != '\r') {
                out += ' ';
            } else {
                out += c;
            }
        }
    }
    return out;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

} // namespace

std::string render_map(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& ann,
                       const MapStyle& style) {
    style.validate();
    if (ann.conversation_id != conv.id()) {
        throw Error(ErrorKind::argument, "annotation is for " + ann.conversation_id + ", not " + conv.id());
    }
    links::validate_against(ann.links, conv);

    const auto speakers = conv.observed_speakers();
    std::map<std::string, std::size_t> lane;
    for (std::size_t i = 0; i < speakers.size(); ++i) lane[speakers[i]] = i;

    const auto all_links = ann.links.links();
    // A quadratic arc peaks halfway between its control point and its chord.
    auto bow = [&](const links::Link& l) {
        return 12.0 + 0.35 * style.turn_spacing * static_cast<double>(l.source_turn - l.target_turn);
    };
    double headroom = style.max_radius;
    for (const auto& l : all_links) headroom = std::max(headroom, bow(l) / 2.0);

    const double left = 140.0;
    const double top = 30.0 + headroom;
    const auto turns = conv.turns();
    double max_time = 0.0;
    for (const auto& t : turns) max_time = std::max(max_time, corpus::speaking_time(t));

    auto x_of = [&](corpus::TurnId id) { return left + style.turn_spacing * static_cast<double>(id); };
    auto y_of = [&](corpus::TurnId id) {
        return top + style.lane_height * static_cast<double>(lane.at(conv.turn(id).speaker_id));
    };

    const double width = left + style.turn_spacing * static_cast<double>(turns.size()) + style.max_radius + 20.0;
    const double height = top + style.lane_height * static_cast<double>(std::max<std::size_t>(speakers.size(), 1) - 1) +
                          style.max_radius + 30.0;

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width) + "\" height=\"" +
           num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" data-conversation-id=\"" +
           xml_escape(conv.id()) + "\" data-node-count=\"" + std::to_string(turns.size()) + "\" data-arc-count=\"" +
           std::to_string(all_links.size()) + "\">\n";
    out += "<title>" + xml_escape(conv.id()) + "</title>\n";
    out += "<style>\n";
    out += ".lane-label { font: 12px sans-serif; fill: #333; }\n";
    out += ".lane { stroke: #ddd; stroke-width: 1; }\n";
    out += ".turn { fill: #9ecae1; stroke: #3182bd; stroke-width: 1; }\n";
    out += ".turn.facilitator { fill: #fdae6b; stroke: #e6550d; }\n";
    for (LinkKind k : {LinkKind::substantive, LinkKind::mechanical, LinkKind::unclassified}) {
        out += std::string(".arc-") + links::to_string(k) + " { fill: none; stroke: " +
               xml_escape(style.arc_colors.at(k)) + "; stroke-width: 1.5; stroke-opacity: 0.8; }\n";
    }
    out += "</style>\n";

    out += "<g class=\"lanes\">\n";
    for (std::size_t i = 0; i < speakers.size(); ++i) {
        const double y = top + style.lane_height * static_cast<double>(i);
        out += "<line class=\"lane\" x1=\"" + num(left - 10.0) + "\" y1=\"" + num(y) + "\" x2=\"" + num(width - 10.0) +
               "\" y2=\"" + num(y) + "\"/>\n";
        out += "<text class=\"lane-label\" x=\"10.00\" y=\"" + num(y + 4.0) + "\">" + xml_escape(speakers[i]) +
               "</text>\n";
    }
    out += "</g>\n";

    // Arcs bow upward; the bow grows with the turn distance.
    out += "<g class=\"arcs\">\n";
    for (const auto& link : all_links) {
        const double xs = x_of(link.source_turn);
        const double ys = y_of(link.source_turn);
        const double xt = x_of(link.target_turn);
        const double yt = y_of(link.target_turn);
        const double cx = (xs + xt) / 2.0;
        const double cy = std::min(ys, yt) - bow(link);
        const char* kind = links::to_string(link.kind);
        out += std::string("<path class=\"arc arc-") + kind + "\" stroke=\"" + xml_escape(style.arc_colors.at(link.kind)) +
               "\" data-source=\"" + std::to_string(link.source_turn) + "\" data-target=\"" + std::to_string(link.target_turn) +
               "\" d=\"M " + num(xs) + " " + num(ys) + " Q " + num(cx) + " " + num(cy) + " " + num(xt) + " " +
               num(yt) + "\"/>\n";
    }
    out += "</g>\n";

    out += "<g class=\"turns\">\n";
    for (const auto& t : turns) {
        const double time = corpus::speaking_time(t);
        const double r =
            max_time > 0 ? std::max(style.min_radius, style.max_radius * time / max_time) : style.min_radius;
        std::string cls = "turn";
        if (style.facilitator_accent && t.role == corpus::SpeakerRole::facilitator) cls += " facilitator";
        out += "<circle class=\"" + cls + "\" data-turn=\"" + std::to_string(t.turn_id) + "\" data-speaker=\"" +
               xml_escape(t.speaker_id) + "\" cx=\"" + num(x_of(t.turn_id)) + "\" cy=\"" + num(y_of(t.turn_id)) + "\" r=\"" +
               num(r) + "\">";
        out += "<title>" + xml_escape(std::to_string(t.turn_id) + " " + t.speaker_id + ": " + t.words) + "</title></circle>\n";
    }
    out += "</g>\n";
    out += "</svg>\n";
    return out;
}

} // namespace responsivity::mapviz
