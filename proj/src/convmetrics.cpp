#include "responsivity/convmetrics.hpp"

#include "responsivity/error.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace responsivity::metrics {

using corpus::TurnId;
using links::LinkKind;

double gini(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::argument, "gini of an empty list");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::argument, "gini needs finite nonnegative values, got " + std::to_string(v));
        }
    }
    const auto n = static_cast<double>(sorted.size());
    const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    if (sorted.size() == 1 || total == 0.0) return 0.0;
    std::sort(sorted.begin(), sorted.end());
    // Rank form of the mean absolute difference: Σ (2i − n − 1) x₍ᵢ₎ / (n Σx).
    double weighted = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * sorted[i];
    }
    return std::max(0.0, weighted / (n * total));
}

namespace {

// Σ_c w(c) H(next | c) / log S over (current, next) pair counts.
double conditional_entropy(const std::map<std::string, std::map<std::string, double>>& counts,
                           std::size_t state_count) {
    if (state_count <= 1) return 0.0;
    double total = 0.0;
    for (const auto& [_, row] : counts) {
        for (const auto& [__, c] : row) total += c;
    }
    if (total == 0.0) return 0.0;
    double h = 0.0;
    for (const auto& [_, row] : counts) {
        double row_total = 0.0;
        for (const auto& [__, c] : row) row_total += c;
        double row_h = 0.0;
        for (const auto& [__, c] : row) {
            const double p = c / row_total;
            row_h -= p * std::log(p);
        }
        h += (row_total / total) * row_h;
    }
    return h / std::log(static_cast<double>(state_count));
}

} // namespace

double sequence_entropy(std::span<const std::string> speakers) {
    if (speakers.size() < 2) {
        throw Error(ErrorKind::argument, "turn sequence entropy needs at least two turns");
    }
    std::map<std::string, std::map<std::string, double>> counts;
    for (std::size_t i = 0; i + 1 < speakers.size(); ++i) counts[speakers[i]][speakers[i + 1]] += 1.0;
    std::vector<std::string> distinct(speakers.begin(), speakers.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    return conditional_entropy(counts, distinct.size());
}

double turn_sequence_entropy(const corpus::Conversation& conv) {
    std::vector<std::string> speakers;
    speakers.reserve(conv.size());
    for (const corpus::Turn& t : conv.turns()) speakers.push_back(t.speaker_id);
    return sequence_entropy(speakers);
}

double responsivity_entropy(const links::ConsolidatedAnnotation& links, const corpus::Conversation& conv) {
    std::map<std::string, std::map<std::string, double>> counts;
    for (const links::Link& link : links.links.links()) {
        if (link.kind != LinkKind::substantive) continue;
        counts[conv.turn(link.source_turn).speaker_id][conv.turn(link.target_turn).speaker_id] += 1.0;
    }
    return conditional_entropy(counts, conv.observed_speakers().size());
}

std::map<std::string, double> per_speaker_response_rate(const corpus::Conversation& conv,
                                                        const links::ConsolidatedAnnotation& links,
                                                        LinkKind kind, const RateFilter& filter) {
    std::map<std::string, int> turns;
    std::map<std::string, int> responding;
    for (const corpus::Turn& t : conv.turns()) {
        if (filter.exclude_facilitator_responders && t.role == corpus::SpeakerRole::facilitator) continue;
        ++turns[t.speaker_id];
        bool gives = false;
        if (auto it = links.links.by_turn().find(t.turn_id); it != links.links.by_turn().end()) {
            for (const auto& [target_id, link] : it->second) {
                if (link.kind != kind) continue;
                const corpus::Turn& target = conv.turn(target_id);
                if (filter.exclude_self_targets && target.speaker_id == t.speaker_id) continue;
                if (filter.exclude_facilitator_targets && target.role == corpus::SpeakerRole::facilitator) continue;
                gives = true;
                break;
            }
        }
        if (gives) ++responding[t.speaker_id];
    }
    std::map<std::string, double> rates;
    for (const auto& [speaker, n] : turns) {
        rates[speaker] = static_cast<double>(responding[speaker]) / static_cast<double>(n);
    }
    return rates;
}

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "speaking_time_gini_coefficient",
    "turn_distribution_gini_coefficient",
    "non_facilitator_speaking_gini_coefficient",
    "non_facilitator_turn_gini_coefficient",
    "gini_subst_responded_rate_nonself",
    "gini_subst_responded_rate_nonself_nonfac",
    "gini_subst_responded_rate_nonself_exclfac",
    "gini_subst_responded_rate_nonself_nonfac_exclfac",
    "turn_sequence_entropy",
    "substantive_responsivity_entropy",
    "facilitator_speaking_percentage",
    "facilitator_turns_percentage",
    "num_turns_facilitator",
    "num_observed_speakers",
    "total_turns_in_conversation",
    "total_speaking_time_seconds",
    "turn_count_variance",
    "avg_subst_responded_rate",
    "avg_mech_responded_rate",
    "avg_subst_responded_rate_nonself",
    "avg_subst_responded_rate_nonfac",
    "avg_subst_responded_rate_nonself_exclfac",
    "avg_subst_responded_rate_nonself_nonfac_exclfac",
};

std::vector<double> values_of(const std::map<std::string, double>& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (const auto& [_, v] : m) out.push_back(v);
    return out;
}

double gini_or_zero(const std::vector<double>& v) { return v.empty() ? 0.0 : gini(v); }

double mean_or_zero(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double percent(double part, double whole) { return whole > 0.0 ? 100.0 * part / whole : 0.0; }

} // namespace

std::string_view feature_name(Feature f) { return kNames[static_cast<std::size_t>(f)]; }

const std::array<Feature, kFeatureCount>& all_features() {
    static const auto kAll = [] {
        std::array<Feature, kFeatureCount> a{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) a[i] = static_cast<Feature>(i);
        return a;
    }();
    return kAll;
}

const std::vector<Feature>& reduced_features() {
    static const std::vector<Feature> kReduced = {
        Feature::non_facilitator_speaking_gini_coefficient,
        Feature::gini_subst_responded_rate_nonself,
        Feature::turn_sequence_entropy,
        Feature::substantive_responsivity_entropy,
        Feature::facilitator_speaking_percentage,
        Feature::facilitator_turns_percentage,
        Feature::num_observed_speakers,
        Feature::total_speaking_time_seconds,
        Feature::avg_subst_responded_rate,
        Feature::avg_mech_responded_rate,
        Feature::avg_subst_responded_rate_nonself,
        Feature::avg_subst_responded_rate_nonself_nonfac_exclfac,
    };
    return kReduced;
}

std::vector<std::string> feature_names(std::span<const Feature> features) {
    std::vector<std::string> out;
    for (Feature f : features) out.emplace_back(feature_name(f));
    return out;
}

std::vector<double> FeatureVector::project(std::span<const Feature> features) const {
    std::vector<double> out;
    out.reserve(features.size());
    for (Feature f : features) out.push_back((*this)[f]);
    return out;
}

FeatureVector compute_features(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& links) {
    if (links.conversation_id != conv.id()) {
        throw Error(ErrorKind::argument, "annotation for \"" + links.conversation_id +
                                             "\" applied to conversation \"" + conv.id() + "\"");
    }
    for (TurnId source : links.links.sources()) conv.turn(source);

    FeatureVector fv;
    fv.conversation_id = conv.id();

    std::map<std::string, double> time_by_speaker;
    std::map<std::string, double> turns_by_speaker;
    double total_time = 0.0;
    double facilitator_time = 0.0;
    double facilitator_turns = 0.0;
    for (const corpus::Turn& t : conv.turns()) {
        const double secs = corpus::speaking_time(t);
        fv.speaking_time_proxy = fv.speaking_time_proxy || !corpus::has_timing(t);
        time_by_speaker[t.speaker_id] += secs;
        turns_by_speaker[t.speaker_id] += 1.0;
        total_time += secs;
        if (t.role == corpus::SpeakerRole::facilitator) {
            facilitator_time += secs;
            facilitator_turns += 1.0;
        }
    }
    std::vector<double> nonfac_time;
    std::vector<double> nonfac_turns;
    for (const std::string& s : conv.observed_speakers()) {
        if (conv.is_facilitator(s)) continue;
        nonfac_time.push_back(time_by_speaker[s]);
        nonfac_turns.push_back(turns_by_speaker[s]);
    }

    using F = Feature;
    const auto turn_counts = values_of(turns_by_speaker);
    fv[F::speaking_time_gini_coefficient] = gini_or_zero(values_of(time_by_speaker));
    fv[F::turn_distribution_gini_coefficient] = gini_or_zero(turn_counts);
    fv[F::non_facilitator_speaking_gini_coefficient] = gini_or_zero(nonfac_time);
    fv[F::non_facilitator_turn_gini_coefficient] = gini_or_zero(nonfac_turns);

    auto rates = [&](LinkKind kind, bool nonself, bool nonfac, bool exclfac) {
        return values_of(per_speaker_response_rate(conv, links, kind, RateFilter{nonself, nonfac, exclfac}));
    };
    fv[F::gini_subst_responded_rate_nonself] = gini_or_zero(rates(LinkKind::substantive, true, false, false));
    fv[F::gini_subst_responded_rate_nonself_nonfac] = gini_or_zero(rates(LinkKind::substantive, true, true, false));
    fv[F::gini_subst_responded_rate_nonself_exclfac] = gini_or_zero(rates(LinkKind::substantive, true, false, true));
    fv[F::gini_subst_responded_rate_nonself_nonfac_exclfac] =
        gini_or_zero(rates(LinkKind::substantive, true, true, true));

    fv[F::turn_sequence_entropy] = turn_sequence_entropy(conv);
    fv[F::substantive_responsivity_entropy] = responsivity_entropy(links, conv);

    const auto turn_total = static_cast<double>(conv.size());
    fv[F::facilitator_speaking_percentage] = percent(facilitator_time, total_time);
    fv[F::facilitator_turns_percentage] = percent(facilitator_turns, turn_total);
    fv[F::num_turns_facilitator] = facilitator_turns;
    fv[F::num_observed_speakers] = static_cast<double>(conv.observed_speakers().size());
    fv[F::total_turns_in_conversation] = turn_total;
    fv[F::total_speaking_time_seconds] = total_time;

    const double mean_turns = mean_or_zero(turn_counts);
    double var = 0.0;
    for (double c : turn_counts) var += (c - mean_turns) * (c - mean_turns);
    fv[F::turn_count_variance] = var / static_cast<double>(turn_counts.size());

    fv[F::avg_subst_responded_rate] = mean_or_zero(rates(LinkKind::substantive, false, false, false));
    fv[F::avg_mech_responded_rate] = mean_or_zero(rates(LinkKind::mechanical, false, false, false));
    fv[F::avg_subst_responded_rate_nonself] = mean_or_zero(rates(LinkKind::substantive, true, false, false));
    fv[F::avg_subst_responded_rate_nonfac] = mean_or_zero(rates(LinkKind::substantive, false, true, false));
    fv[F::avg_subst_responded_rate_nonself_exclfac] = mean_or_zero(rates(LinkKind::substantive, true, false, true));
    fv[F::avg_subst_responded_rate_nonself_nonfac_exclfac] =
        mean_or_zero(rates(LinkKind::substantive, true, true, true));
    return fv;
}

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

std::string features_csv(const std::vector<FeatureVector>& rows, bool reduced) {
    std::vector<Feature> columns;
    if (reduced) {
        columns = reduced_features();
    } else {
        columns.assign(all_features().begin(), all_features().end());
    }
    std::string out = "conversation_id";
    for (Feature f : columns) {
        out += ',';
        out += feature_name(f);
    }
    out += '\n';
    for (const FeatureVector& fv : rows) {
        out += detail::csv_field(fv.conversation_id);
        for (Feature f : columns) {
            out += ',';
            out += fixed6(fv[f]);
        }
        out += '\n';
    }
    return out;
}

} // namespace responsivity::metrics
