#include "responsivity/corpus.hpp"
#include "responsivity/error.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace responsivity;
using namespace responsivity::corpus;

namespace {

Turn make_turn(TurnId id, std::string speaker, std::string words) {
    Turn t;
    t.turn_id = id;
    t.speaker_id = std::move(speaker);
    t.words = std::move(words);
    return t;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::run;
}

Conversation counting_conversation(int n) {
    std::vector<Turn> turns;
    for (int i = 0; i < n; ++i) turns.push_back(make_turn(i, i % 2 ? "b" : "a", "turn " + std::to_string(i)));
    return Conversation::create("c", std::move(turns));
}

} // namespace

TEST(Assemble, MergesAdjacentSameSpeakerUtterances) {
    std::vector<Utterance> us = {
        {"A", SpeakerRole::participant, "hello there", 1.0, 2.0},
        {"A", SpeakerRole::participant, "how are you", 2.5, 4.0},
        {"B", SpeakerRole::facilitator, "fine", 4.0, 5.0},
    };
    const auto conv = assemble("x", us);
    ASSERT_EQ(conv.size(), 2u);
    EXPECT_EQ(conv.turn(0).words, "hello there how are you");
    EXPECT_DOUBLE_EQ(*conv.turn(0).start_time, 1.0);
    EXPECT_DOUBLE_EQ(*conv.turn(0).end_time, 4.0);
    EXPECT_EQ(conv.turn(1).turn_id, 1);
    EXPECT_TRUE(conv.is_facilitator("B"));
}

TEST(Assemble, EmptyListIsValidationError) {
    EXPECT_EQ(kind_of([] { assemble("x", {}); }), ErrorKind::validation);
}

TEST(Conversation, RejectsConsecutiveSameSpeaker) {
    std::vector<Turn> turns = {make_turn(0, "a", "one"), make_turn(1, "a", "two")};
    EXPECT_EQ(kind_of([&] { Conversation::create("c", turns); }), ErrorKind::validation);
}

TEST(Conversation, RejectsSparseIdsAndBlankWords) {
    EXPECT_EQ(kind_of([] { Conversation::create("c", {make_turn(0, "a", "x"), make_turn(2, "b", "y")}); }),
              ErrorKind::validation);
    EXPECT_EQ(kind_of([] { Conversation::create("c", {make_turn(0, "a", "  \t ")}); }), ErrorKind::validation);
}

TEST(Conversation, RejectsRoleChange) {
    auto t0 = make_turn(0, "a", "x");
    auto t1 = make_turn(1, "b", "y");
    auto t2 = make_turn(2, "a", "z");
    t2.role = SpeakerRole::facilitator;
    EXPECT_EQ(kind_of([&] { Conversation::create("c", {t0, t1, t2}); }), ErrorKind::validation);
}

TEST(Conversation, BackwardsTimingRejected) {
    auto t = make_turn(0, "a", "x");
    t.start_time = 5.0;
    t.end_time = 4.0;
    EXPECT_EQ(kind_of([&] { Conversation::create("c", {t}); }), ErrorKind::validation);
}

TEST(Conversation, TurnLookupOutOfRange) {
    const auto conv = counting_conversation(3);
    EXPECT_EQ(kind_of([&] { conv.turn(3); }), ErrorKind::lookup);
    EXPECT_EQ(kind_of([&] { conv.turn(-1); }), ErrorKind::lookup);
}

TEST(Conversation, SpeakersInOrderOfFirstAppearance) {
    const auto conv = Conversation::create(
        "c", {make_turn(0, "zed", "a"), make_turn(1, "amy", "b"), make_turn(2, "zed", "c"), make_turn(3, "bo", "d")});
    EXPECT_EQ(conv.observed_speakers(), (std::vector<std::string>{"zed", "amy", "bo"}));
}

TEST(ParseTranscript, MissingSpeakerNamesField) {
    const std::string raw = R"({"conversation_id": "c", "turns": [{"role": "participant", "words": "hi"}]})";
    try {
        parse_transcript(raw);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parse);
        EXPECT_NE(std::string(e.what()).find("speaker_id"), std::string::npos);
    }
}

TEST(ParseTranscript, MalformedJsonReportsOffset) {
    try {
        parse_transcript(R"({"conversation_id": "c", "turns": [)");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parse);
        EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
    }
}

TEST(ParseTranscript, UnknownRoleIsValidation) {
    const std::string raw =
        R"({"conversation_id": "c", "turns": [{"speaker_id": "a", "role": "moderator", "words": "hi"}]})";
    EXPECT_EQ(kind_of([&] { parse_transcript(raw); }), ErrorKind::validation);
}

TEST(ParseTranscript, KeepsSourceIdsAndUnknownKeysInMetadata) {
    const std::string raw = R"({"conversation_id": "c", "site": "north", "turns": [
        {"turn_id": "u7", "speaker_id": "a", "role": "participant", "words": "hi", "lang": "en"},
        {"turn_id": "u9", "speaker_id": "b", "role": "participant", "words": "yo"}]})";
    const auto conv = parse_transcript(raw);
    EXPECT_EQ(conv.metadata().at("site"), "north");
    EXPECT_EQ(conv.metadata().at("source_turn_ids"), R"(["u7","u9"])");
    EXPECT_NE(conv.metadata().at("source_turn_extras").find("lang"), std::string::npos);
}

TEST(ParseTranscript, RoundTripOnFixtures) {
    for (const auto& id : testsupport::fixture_ids()) {
        const auto conv = load_transcript(testsupport::transcript_path(id));
        const auto text = serialize_transcript(conv);
        const auto again = parse_transcript(text);
        EXPECT_EQ(again, conv) << id;
        EXPECT_EQ(serialize_transcript(again), text) << id;
    }
}

TEST(ParseTranscript, RoundTripRandom) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto conv = testsupport::random_conversation(rng, 1, 40, 6, i % 2 == 0);
        EXPECT_EQ(parse_transcript(serialize_transcript(conv)), conv);
    }
}

TEST(ParseTranscript, NoConsecutiveSpeakersForAnyInput) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        std::vector<Utterance> us;
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int k = 0; k < n; ++k) {
            us.push_back({"s" + std::to_string(rng() % 3), SpeakerRole::participant, "w" + std::to_string(k), {}, {}});
        }
        const auto conv = assemble("r", us);
        for (std::size_t k = 1; k < conv.size(); ++k) {
            EXPECT_NE(conv.turns()[k].speaker_id, conv.turns()[k - 1].speaker_id);
        }
    }
}

TEST(SpeakingTime, Examples) {
    Turn t = make_turn(0, "a", "x");
    t.start_time = 10.0;
    t.end_time = 14.0;
    EXPECT_DOUBLE_EQ(speaking_time(t), 4.0);
    t.end_time = 10.0;
    EXPECT_DOUBLE_EQ(speaking_time(t), 0.0);

    // 25 words counted by hand, no timings
    Turn proxy = make_turn(0, "a",
                           "one two three four five six seven eight nine ten eleven twelve thirteen fourteen "
                           "fifteen sixteen seventeen eighteen nineteen twenty twentyone twentytwo twentythree "
                           "twentyfour twentyfive");
    EXPECT_EQ(word_count(proxy.words), 25u);
    EXPECT_DOUBLE_EQ(speaking_time(proxy), 10.0);
}

TEST(Window, Examples) {
    const auto conv = counting_conversation(20);
    WindowConfig cfg{10};
    auto w = window(conv, 12, cfg);
    ASSERT_EQ(w.size(), 10u);
    EXPECT_EQ(w.front().turn_id, 2);
    EXPECT_EQ(w.back().turn_id, 11);
    w = window(conv, 3, cfg);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_EQ(w.front().turn_id, 0);
    EXPECT_TRUE(window(conv, 0, cfg).empty());
}

TEST(Window, SizeIsMinOfSizeAndTurn) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto conv = testsupport::random_conversation(rng, 1, 35, 4, false);
        const int size = 1 + static_cast<int>(rng() % 12);
        for (TurnId t = 0; t < static_cast<TurnId>(conv.size()); ++t) {
            EXPECT_EQ(window(conv, t, {size}).size(), static_cast<std::size_t>(std::min(size, t)));
        }
    }
}

TEST(Window, BadArguments) {
    const auto conv = counting_conversation(4);
    EXPECT_EQ(kind_of([&] { window(conv, 1, {0}); }), ErrorKind::argument);
    EXPECT_EQ(kind_of([&] { window(conv, 4, {10}); }), ErrorKind::lookup);
}
