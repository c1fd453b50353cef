#pragma once

#include "responsivity/corpus.hpp"
#include "responsivity/linkspace.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace responsivity::agreement {

using corpus::TurnId;

// |a ∩ b| / |a ∪ b|; two empty sets agree perfectly (1.0).
double jaccard(const std::set<TurnId>& a, const std::set<TurnId>& b);

struct AgreementOptions {
    // Leave turns where both sources are empty out of the mean instead of
    // scoring them 1.0.
    bool skip_empty_pairs = false;
};

struct AgreementReport {
    std::string conversation_id;
    std::pair<std::string, std::string> sources;
    std::map<TurnId, double> per_turn_jaccard;
    // NaN when no turn was evaluated.
    double mean_jaccard = 0.0;

    nlohmann::json to_json() const;
};

// Per-turn Jaccard of target sets over turns 1..n-1 (turn 0 has no window).
AgreementReport conversation_agreement(const corpus::Conversation& conv,
                                       const links::ConsolidatedAnnotation& a,
                                       const links::ConsolidatedAnnotation& b,
                                       const AgreementOptions& options = {});

// One annotation method across a set of conversations.
struct AnnotationSource {
    std::string method_id;
    std::map<std::string, links::ConsolidatedAnnotation> by_conversation;
};

struct AgreementMatrix {
    std::vector<std::string> methods;
    std::vector<std::vector<double>> values;

    // Header row and first column carry method ids; cells use 4 decimals.
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

// Mean Jaccard for every pair of sources: the per-conversation means,
// averaged over conversations. Symmetric with a unit diagonal.
AgreementMatrix agreement_matrix(const std::vector<AnnotationSource>& sources,
                                 const std::map<std::string, corpus::Conversation>& conversations,
                                 const AgreementOptions& options = {});

// Single-conversation form.
AgreementMatrix agreement_matrix(const corpus::Conversation& conv,
                                 const std::vector<links::ConsolidatedAnnotation>& annotations,
                                 const AgreementOptions& options = {});

struct ConfusionTally {
    long both_present = 0;
    long a_only = 0;
    long b_only = 0;
    long both_absent = 0;

    long total() const { return both_present + a_only + b_only + both_absent; }
    double percent(long count) const;
    nlohmann::json to_json() const;

    ConfusionTally& operator+=(const ConfusionTally& other);
};

// Tallies every candidate (turn, window target) pair by presence in a and b.
// With a kind filter, only links of that kind count as present.
ConfusionTally link_confusion(const corpus::Conversation& conv, const links::ConsolidatedAnnotation& a,
                              const links::ConsolidatedAnnotation& b,
                              std::optional<links::LinkKind> kind = std::nullopt);

// Kind comparison restricted to links both sources contain.
struct KindAgreement {
    long compared = 0;
    long matching = 0;
    std::map<std::pair<links::LinkKind, links::LinkKind>, long> table;

    nlohmann::json to_json() const;
};

KindAgreement kind_agreement(const links::ConsolidatedAnnotation& a, const links::ConsolidatedAnnotation& b);

} // namespace responsivity::agreement
