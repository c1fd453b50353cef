#pragma once

#include "responsivity/corpus.hpp"
#include "responsivity/linkspace.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace responsivity::metrics {

// Σᵢ Σⱼ |xᵢ − xⱼ| / (2 n² x̄). Zero for a single value or an all-zero list.
// Throws Error(argument) for negative values or an empty list.
double gini(std::span<const double> values);

// Conditional entropy of the next speaker given the current one, estimated
// from bigram counts weighted by how often each speaker is the current state,
// and normalized by log S (S = distinct speakers). Zero when S = 1.
// Needs at least two entries.
double sequence_entropy(std::span<const std::string> speakers);
double turn_sequence_entropy(const corpus::Conversation& conv);

// Entropy of the target speaker given the responding speaker over
// substantive links, normalized by log of the observed speaker count.
double responsivity_entropy(const links::ConsolidatedAnnotation& links, const corpus::Conversation& conv);

struct RateFilter {
    bool exclude_self_targets = false;         // nonself
    bool exclude_facilitator_targets = false;  // nonfac
    bool exclude_facilitator_responders = false; // exclfac
};

// Share of each included speaker's turns that carry at least one outgoing
// link of `kind` whose target passes the filter.
std::map<std::string, double> per_speaker_response_rate(const corpus::Conversation& conv,
                                                        const links::ConsolidatedAnnotation& links,
                                                        links::LinkKind kind, const RateFilter& filter);

enum class Feature : std::size_t {
    speaking_time_gini_coefficient,
    turn_distribution_gini_coefficient,
    non_facilitator_speaking_gini_coefficient,
    non_facilitator_turn_gini_coefficient,
    gini_subst_responded_rate_nonself,
    gini_subst_responded_rate_nonself_nonfac,
    gini_subst_responded_rate_nonself_exclfac,
    gini_subst_responded_rate_nonself_nonfac_exclfac,
    turn_sequence_entropy,
    substantive_responsivity_entropy,
    facilitator_speaking_percentage,
    facilitator_turns_percentage,
    num_turns_facilitator,
    num_observed_speakers,
    total_turns_in_conversation,
    total_speaking_time_seconds,
    turn_count_variance,
    avg_subst_responded_rate,
    avg_mech_responded_rate,
    avg_subst_responded_rate_nonself,
    avg_subst_responded_rate_nonfac,
    avg_subst_responded_rate_nonself_exclfac,
    avg_subst_responded_rate_nonself_nonfac_exclfac,
};

inline constexpr std::size_t kFeatureCount = 23;

std::string_view feature_name(Feature f);
const std::array<Feature, kFeatureCount>& all_features();
// The 12-column preset used for clustering.
const std::vector<Feature>& reduced_features();
std::vector<std::string> feature_names(std::span<const Feature> features);

struct FeatureVector {
    std::string conversation_id;
    std::array<double, kFeatureCount> values{};
    // True when some turn lacked timings and speaking time used the
    // words-per-second proxy.
    bool speaking_time_proxy = false;

    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
    double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }

    std::vector<double> project(std::span<const Feature> features) const;
};

FeatureVector compute_features(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& links);

// One row per conversation: conversation_id then the feature columns, values
// with 6 decimals.
std::string features_csv(const std::vector<FeatureVector>& rows, bool reduced = false);

} // namespace responsivity::metrics
