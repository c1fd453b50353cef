#include "responsivity/agreement.hpp"

#include "responsivity/error.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace responsivity::agreement {

using nlohmann::json;

double jaccard(const std::set<TurnId>& a, const std::set<TurnId>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (TurnId x : a) inter += b.count(x);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void check_comparable(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& a,
                      const links::ConsolidatedAnnotation& b) {
    if (a.conversation_id != conv.id() || b.conversation_id != conv.id()) {
        throw Error(ErrorKind::argument, "annotations \"" + a.conversation_id + "\"/\"" + b.conversation_id +
                                             "\" do not match conversation \"" + conv.id() + "\"");
    }
    if (!(a.window() == b.window())) {
        throw Error(ErrorKind::argument, "annotations use different window sizes (" +
                                             std::to_string(a.window().size) + " vs " +
                                             std::to_string(b.window().size) + ")");
    }
}

std::string format4(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

json AgreementReport::to_json() const {
    json per_turn = json::object();
    for (const auto& [turn, value] : per_turn_jaccard) per_turn[std::to_string(turn)] = value;
    return {{"conversation_id", conversation_id},
            {"sources", {sources.first, sources.second}},
            {"mean_jaccard", std::isnan(mean_jaccard) ? json(nullptr) : json(mean_jaccard)},
            {"evaluated_turns", per_turn_jaccard.size()},
            {"per_turn_jaccard", std::move(per_turn)}};
}

AgreementReport conversation_agreement(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& a,
                                       const links::ConsolidatedAnnotation& b, const AgreementOptions& options) {
    check_comparable(conv, a, b);
    AgreementReport report;
    report.conversation_id = conv.id();
    report.sources = {a.method_id, b.method_id};
    double sum = 0.0;
    for (TurnId t = 1; t < static_cast<TurnId>(conv.size()); ++t) {
        const auto ta = a.links.targets(t);
        const auto tb = b.links.targets(t);
        if (options.skip_empty_pairs && ta.empty() && tb.empty()) continue;
        const double j = jaccard(ta, tb);
        report.per_turn_jaccard[t] = j;
        sum += j;
    }
    report.mean_jaccard = report.per_turn_jaccard.empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : sum / static_cast<double>(report.per_turn_jaccard.size());
    return report;
}

std::string AgreementMatrix::to_csv() const {
    std::string out = "method";
    for (const auto& m : methods) out += "," + detail::csv_field(m);
    out += "\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        out += detail::csv_field(methods[i]);
        for (double v : values[i]) out += "," + format4(v);
        out += "\n";
    }
    return out;
}

json AgreementMatrix::to_json() const {
    json rows = json::array();
    for (const auto& row : values) {
        json r = json::array();
        for (double v : row) r.push_back(std::isnan(v) ? json(nullptr) : json(v));
        rows.push_back(std::move(r));
    }
    return {{"methods", methods}, {"mean_jaccard", std::move(rows)}};
}

AgreementMatrix agreement_matrix(const std::vector<AnnotationSource>& sources,
                                 const std::map<std::string, corpus::Conversation>& conversations,
                                 const AgreementOptions& options) {
    if (sources.size() < 2) {
        throw Error(ErrorKind::argument, "agreement matrix needs at least two sources");
    }
    for (const auto& s : sources) {
        if (s.by_conversation.size() != sources.front().by_conversation.size() ||
            !std::equal(s.by_conversation.begin(), s.by_conversation.end(),
                        sources.front().by_conversation.begin(),
                        [](const auto& x, const auto& y) { return x.first == y.first; })) {
            throw Error(ErrorKind::argument, "source \"" + s.method_id + "\" covers a different conversation set");
        }
    }
    AgreementMatrix m;
    const std::size_t n = sources.size();
    for (const auto& s : sources) m.methods.push_back(s.method_id);
    m.values.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sum = 0.0;
            int count = 0;
            for (const auto& [conv_id, ann_i] : sources[i].by_conversation) {
                auto conv = conversations.find(conv_id);
                if (conv == conversations.end()) {
                    throw Error(ErrorKind::lookup, "no transcript for conversation \"" + conv_id + "\"");
                }
                const double mean =
                    conversation_agreement(conv->second, ann_i, sources[j].by_conversation.at(conv_id), options)
                        .mean_jaccard;
                if (std::isnan(mean)) continue;
                sum += mean;
                ++count;
            }
            const double v = count ? sum / count : std::numeric_limits<double>::quiet_NaN();
            m.values[i][j] = v;
            m.values[j][i] = v;
        }
    }
    return m;
}

AgreementMatrix agreement_matrix(const corpus::Conversation& conv,
                                 const std::vector<links::ConsolidatedAnnotation>& annotations,
                                 const AgreementOptions& options) {
    std::vector<AnnotationSource> sources;
    for (const auto& a : annotations) {
        AnnotationSource s;
        s.method_id = a.method_id;
        s.by_conversation.emplace(conv.id(), a);
        sources.push_back(std::move(s));
    }
    return agreement_matrix(sources, {{conv.id(), conv}}, options);
}

double ConfusionTally::percent(long count) const {
    const long t = total();
    return t ? 100.0 * static_cast<double>(count) / static_cast<double>(t) : 0.0;
}

ConfusionTally& ConfusionTally::operator+=(const ConfusionTally& other) {
    both_present += other.both_present;
    a_only += other.a_only;
    b_only += other.b_only;
    both_absent += other.both_absent;
    return *this;
}

json ConfusionTally::to_json() const {
    return {{"both_present", both_present},
            {"a_only", a_only},
            {"b_only", b_only},
            {"both_absent", both_absent},
            {"total", total()},
            {"percent",
             {{"agreement", percent(both_present + both_absent)},
              {"both_present", percent(both_present)},
              {"a_only", percent(a_only)},
              {"b_only", percent(b_only)},
              {"both_absent", percent(both_absent)}}}};
}

ConfusionTally link_confusion(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& a,
                              const links::ConsolidatedAnnotation& b, std::optional<links::LinkKind> kind) {
    check_comparable(conv, a, b);
    auto present = [&](const links::ConsolidatedAnnotation& ann, TurnId s, TurnId t) {
        const links::Link* link = ann.links.find(s, t);
        return link && (!kind || link->kind == *kind);
    };
    ConfusionTally tally;
    for (TurnId s = 1; s < static_cast<TurnId>(conv.size()); ++s) {
        for (const corpus::Turn& target : corpus::window(conv, s, a.window())) {
            const bool in_a = present(a, s, target.turn_id);
            const bool in_b = present(b, s, target.turn_id);
            if (in_a && in_b) {
                ++tally.both_present;
            } else if (in_a) {
                ++tally.a_only;
            } else if (in_b) {
                ++tally.b_only;
            } else {
                ++tally.both_absent;
            }
        }
    }
    return tally;
}

json KindAgreement::to_json() const {
    json cells = json::array();
    for (const auto& [kinds, count] : table) {
        cells.push_back({{"a", links::to_string(kinds.first)}, {"b", links::to_string(kinds.second)}, {"count", count}});
    }
    return {{"compared", compared}, {"matching", matching}, {"table", std::move(cells)}};
}

KindAgreement kind_agreement(const links::ConsolidatedAnnotation& a, const links::ConsolidatedAnnotation& b) {
    KindAgreement out;
    for (const links::Link& la : a.links.links()) {
        const links::Link* lb = b.links.find(la.source_turn, la.target_turn);
        if (!lb) continue;
        ++out.compared;
        if (la.kind == lb->kind) ++out.matching;
        ++out.table[{la.kind, lb->kind}];
    }
    return out;
}

} // namespace responsivity::agreement
