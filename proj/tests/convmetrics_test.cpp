#include "responsivity/annotation_io.hpp"
#include "responsivity/convmetrics.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace responsivity;
using namespace responsivity::metrics;
using links::LinkKind;

namespace {

double brute_gini(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0;
    for (double v : x) mean += v / n;
    if (x.size() < 2 || mean == 0) return 0;
    double s = 0;
    for (double a : x)
        for (double b : x) s += std::abs(a - b);
    return s / (2 * n * n * mean);
}

corpus::Conversation conv_of(const std::vector<std::pair<std::string, double>>& turns,
                             const std::string& facilitator = "") {
    std::vector<corpus::Utterance> us;
    double clock = 0;
    for (const auto& [speaker, secs] : turns) {
        corpus::Utterance u;
        u.speaker_id = speaker;
        u.role = speaker == facilitator ? corpus::SpeakerRole::facilitator : corpus::SpeakerRole::participant;
        u.words = "words from " + speaker;
        u.start_time = clock;
        u.end_time = clock + secs;
        clock += secs;
        us.push_back(u);
    }
    return corpus::assemble("c", us);
}

links::ConsolidatedAnnotation annotation(const corpus::Conversation& conv,
                                         std::vector<std::tuple<int, int, LinkKind>> items) {
    links::AnnotationRun run(conv.id(), "m", 0, {10});
    for (auto [s, t, k] : items) run.links.add({s, t, k, {}});
    std::vector<links::AnnotationRun> one{run};
    return links::consolidate_runs(one, 1);
}

links::ConsolidatedAnnotation golden_links(const std::string& id) {
    std::vector<links::AnnotationRun> one{
        links::load_run((testsupport::golden_dir() / ("links_" + id + ".json")).string())};
    return links::consolidate_runs(one, 1);
}

} // namespace

TEST(Gini, Examples) {
    EXPECT_DOUBLE_EQ(gini(std::vector<double>{5, 5, 5}), 0.0);
    EXPECT_NEAR(gini(std::vector<double>{1, 2, 3, 4}), 0.25, 1e-12);
    EXPECT_NEAR(gini(std::vector<double>{0, 0, 0, 10}), 0.75, 1e-12);
    EXPECT_DOUBLE_EQ(gini(std::vector<double>{7}), 0.0);
    EXPECT_DOUBLE_EQ(gini(std::vector<double>{0, 0}), 0.0);
    EXPECT_THROW(gini(std::vector<double>{1, -1}), Error);
    EXPECT_THROW(gini(std::vector<double>{}), Error);
}

TEST(Gini, MatchesPairwiseOracleAndInvariants) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> x(1 + rng() % 12);
        for (double& v : x) v = (rng() % 4 == 0) ? 0.0 : static_cast<double>(rng() % 1000) / 10.0;
        const double g = gini(x);
        EXPECT_NEAR(g, brute_gini(x), 1e-12);
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, (static_cast<double>(x.size()) - 1) / static_cast<double>(x.size()) + 1e-12);
        std::vector<double> scaled = x;
        for (double& v : scaled) v *= 3.7;
        EXPECT_NEAR(gini(scaled), g, 1e-12);
        std::shuffle(x.begin(), x.end(), rng);
        EXPECT_NEAR(gini(x), g, 1e-12);
    }
}

TEST(SequenceEntropy, Examples) {
    auto seq = [](std::string s) {
        std::vector<std::string> v;
        for (char c : s) v.emplace_back(1, c);
        return v;
    };
    EXPECT_NEAR(sequence_entropy(seq("ABCABCABC")), 0.0, 1e-12);
    EXPECT_NEAR(sequence_entropy(seq("ABABAB")), 0.0, 1e-12);
    EXPECT_NEAR(sequence_entropy(seq("ABBABBABB")), 0.6069, 1e-3);
    EXPECT_NEAR(sequence_entropy(seq("AAAA")), 0.0, 1e-12);
    EXPECT_THROW(sequence_entropy(seq("A")), Error);
    // relabeling
    EXPECT_NEAR(sequence_entropy(seq("ABCACBBAC")), sequence_entropy(seq("CBACABBCA")), 1e-12);
}

TEST(ResponsivityEntropy, Examples) {
    const auto conv = conv_of({{"A", 1}, {"B", 1}, {"C", 1}, {"A", 1}, {"B", 1}, {"A", 1}, {"C", 1}});
    EXPECT_DOUBLE_EQ(responsivity_entropy(annotation(conv, {}), conv), 0.0);
    // A -> B always, B -> C always
    EXPECT_NEAR(responsivity_entropy(annotation(conv, {{3, 1, LinkKind::substantive}, {5, 4, LinkKind::substantive},
                                                       {4, 2, LinkKind::substantive}}),
                                     conv),
                0.0, 1e-12);
    // A -> B twice, A -> C twice, B -> A once: 4/5 * ln2 / ln3
    const auto ann = annotation(conv, {{3, 1, LinkKind::substantive}, {5, 4, LinkKind::substantive},
                                       {3, 2, LinkKind::substantive}, {5, 2, LinkKind::substantive},
                                       {4, 3, LinkKind::substantive}, {6, 5, LinkKind::mechanical}});
    EXPECT_NEAR(responsivity_entropy(ann, conv), 0.8 * std::log(2.0) / std::log(3.0), 1e-12);
}

TEST(ResponseRate, FilterTable) {
    // F facilitates; A's turns: 1, 3, 5
    const auto conv = conv_of({{"F", 1}, {"A", 1}, {"B", 1}, {"A", 1}, {"F", 1}, {"A", 1}}, "F");
    const auto ann = annotation(conv, {{1, 0, LinkKind::substantive},   // A -> F
                                       {3, 1, LinkKind::substantive},   // A -> A
                                       {5, 2, LinkKind::substantive},   // A -> B
                                       {4, 2, LinkKind::substantive},   // F -> B
                                       {2, 1, LinkKind::mechanical}});  // B -> A
    auto rate = [&](bool ns, bool nf, bool ef) {
        return per_speaker_response_rate(conv, ann, LinkKind::substantive, {ns, nf, ef});
    };
    EXPECT_DOUBLE_EQ(rate(false, false, false).at("A"), 1.0);
    EXPECT_DOUBLE_EQ(rate(true, false, false).at("A"), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(rate(false, true, false).at("A"), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(rate(true, true, false).at("A"), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(rate(false, false, false).at("F"), 0.5);
    EXPECT_EQ(rate(false, false, true).count("F"), 0u);
    EXPECT_DOUBLE_EQ(rate(false, false, false).at("B"), 0.0);
    EXPECT_DOUBLE_EQ(per_speaker_response_rate(conv, ann, LinkKind::mechanical, {}).at("B"), 1.0);
}

TEST(Features, HandExamples) {
    const auto conv = conv_of({{"F", 30}, {"A", 40}, {"B", 20}, {"C", 30}, {"A", 0}, {"B", 0}, {"C", 0}}, "F");
    const auto fv = compute_features(conv, annotation(conv, {}));
    EXPECT_DOUBLE_EQ(fv[Feature::facilitator_speaking_percentage], 25.0);
    EXPECT_DOUBLE_EQ(fv[Feature::total_speaking_time_seconds], 120.0);
    EXPECT_DOUBLE_EQ(fv[Feature::num_turns_facilitator], 1.0);
    EXPECT_DOUBLE_EQ(fv[Feature::num_observed_speakers], 4.0);
    EXPECT_DOUBLE_EQ(fv[Feature::total_turns_in_conversation], 7.0);
    EXPECT_DOUBLE_EQ(fv[Feature::non_facilitator_turn_gini_coefficient], 0.0);
    EXPECT_DOUBLE_EQ(fv[Feature::turn_count_variance], 0.1875);
    EXPECT_FALSE(fv.speaking_time_proxy);

    const auto even = conv_of({{"A", 1}, {"B", 1}, {"C", 1}, {"A", 1}, {"B", 1}, {"C", 1}});
    EXPECT_DOUBLE_EQ(compute_features(even, annotation(even, {}))[Feature::turn_count_variance], 0.0);
}

TEST(Features, WrongConversationIsArgumentError) {
    const auto conv = conv_of({{"A", 1}, {"B", 1}});
    auto ann = annotation(conv, {});
    ann.conversation_id = "other";
    EXPECT_THROW(compute_features(conv, ann), Error);
}

TEST(Features, GoldenVectors) {
    for (const auto& id : testsupport::fixture_ids()) {
        const auto conv = corpus::load_transcript(testsupport::transcript_path(id));
        const auto fv = compute_features(conv, golden_links(id));
        const auto golden = read_json_file((testsupport::golden_dir() / ("features_" + id + ".json")).string());
        ASSERT_EQ(golden.size(), kFeatureCount);
        for (Feature f : all_features()) {
            EXPECT_NEAR(fv[f], golden.at(std::string(feature_name(f))).get<double>(), 1e-9)
                << id << " " << feature_name(f);
        }
        EXPECT_EQ(fv.speaking_time_proxy, id != "forum-a") << id;
    }
}

TEST(Features, NamesAndReducedPreset) {
    const auto names = feature_names(all_features());
    ASSERT_EQ(names.size(), 23u);
    EXPECT_EQ(names.front(), "speaking_time_gini_coefficient");
    EXPECT_EQ(names.back(), "avg_subst_responded_rate_nonself_nonfac_exclfac");
    EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), 23u);
    const auto reduced = feature_names(reduced_features());
    EXPECT_EQ(reduced, (std::vector<std::string>{
                           "non_facilitator_speaking_gini_coefficient",
                           "gini_subst_responded_rate_nonself",
                           "turn_sequence_entropy",
                           "substantive_responsivity_entropy",
                           "facilitator_speaking_percentage",
                           "facilitator_turns_percentage",
                           "num_observed_speakers",
                           "total_speaking_time_seconds",
                           "avg_subst_responded_rate",
                           "avg_mech_responded_rate",
                           "avg_subst_responded_rate_nonself",
                           "avg_subst_responded_rate_nonself_nonfac_exclfac",
                       }));
}

TEST(Features, ProjectionIsLossless) {
    const auto conv = corpus::load_transcript(testsupport::transcript_path("forum-c"));
    const auto fv = compute_features(conv, golden_links("forum-c"));
    const auto proj = fv.project(reduced_features());
    for (std::size_t i = 0; i < proj.size(); ++i) EXPECT_EQ(proj[i], fv[reduced_features()[i]]);
}

TEST(Features, Csv) {
    const auto conv = corpus::load_transcript(testsupport::transcript_path("forum-a"));
    const auto fv = compute_features(conv, golden_links("forum-a"));
    const std::string full = features_csv({fv});
    const std::string reduced = features_csv({fv}, true);
    EXPECT_EQ(full.substr(0, full.find('\n')).find("conversation_id,speaking_time_gini_coefficient,"), 0u);
    EXPECT_EQ(std::count(full.begin(), full.end(), ','), 2 * 23);
    EXPECT_EQ(std::count(reduced.begin(), reduced.end(), ','), 2 * 12);
    char expect[64];
    std::snprintf(expect, sizeof expect, ",%.6f,", fv[Feature::turn_distribution_gini_coefficient]);
    EXPECT_NE(full.find(expect), std::string::npos);
}

TEST(Features, RangesOnRandomConversations) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
        const auto conv = testsupport::random_conversation(rng, 2, 40, 6, i % 2 == 0);
        std::vector<links::AnnotationRun> one{testsupport::random_run(conv, rng, "m", 0, 0.25)};
        const auto fv = compute_features(conv, links::consolidate_runs(one, 1));
        for (Feature f : {Feature::speaking_time_gini_coefficient, Feature::turn_distribution_gini_coefficient,
                          Feature::non_facilitator_speaking_gini_coefficient,
                          Feature::gini_subst_responded_rate_nonself}) {
            EXPECT_GE(fv[f], 0.0);
            EXPECT_LT(fv[f], 1.0);
        }
        for (Feature f : {Feature::turn_sequence_entropy, Feature::substantive_responsivity_entropy}) {
            EXPECT_GE(fv[f], 0.0);
            EXPECT_LE(fv[f], 1.0 + 1e-12);
        }
        for (Feature f : {Feature::facilitator_speaking_percentage, Feature::facilitator_turns_percentage}) {
            EXPECT_GE(fv[f], 0.0);
            EXPECT_LE(fv[f], 100.0);
        }
        EXPECT_EQ(fv[Feature::num_turns_facilitator], std::floor(fv[Feature::num_turns_facilitator]));
    }
}

TEST(ResponseRate, TighteningFiltersNeverRaisesRates) {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 300; ++i) {
        const auto conv = testsupport::random_conversation(rng, 2, 30, 5, false);
        std::vector<links::AnnotationRun> one{testsupport::random_run(conv, rng, "m", 0, 0.3)};
        const auto ann = links::consolidate_runs(one, 1);
        for (int loose = 0; loose < 8; ++loose) {
            for (int bit = 0; bit < 3; ++bit) {
                if (loose & (1 << bit)) continue;
                const int tight = loose | (1 << bit);
                auto filter = [](int m) { return RateFilter{(m & 1) != 0, (m & 2) != 0, (m & 4) != 0}; };
                const auto a = per_speaker_response_rate(conv, ann, LinkKind::substantive, filter(loose));
                const auto b = per_speaker_response_rate(conv, ann, LinkKind::substantive, filter(tight));
                for (const auto& [speaker, rate] : b) EXPECT_LE(rate, a.at(speaker));
            }
        }
    }
}
