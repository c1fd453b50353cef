#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace responsivity::corpus {

using TurnId = int;

enum class SpeakerRole { facilitator, participant };

const char* to_string(SpeakerRole role);
SpeakerRole parse_role(std::string_view text);

struct Turn {
    TurnId turn_id = 0;
    std::string speaker_id;
    SpeakerRole role = SpeakerRole::participant;
    std::string words;
    std::optional<double> start_time;
    std::optional<double> end_time;

    bool operator==(const Turn&) const = default;
};

// One raw transcript entry before same-speaker merging.
struct Utterance {
    std::string speaker_id;
    SpeakerRole role = SpeakerRole::participant;
    std::string words;
    std::optional<double> start_time;
    std::optional<double> end_time;
};

using Metadata = std::map<std::string, std::string>;

// Immutable after construction. Turns are maximal same-speaker spans with
// dense 0-based ids.
class Conversation {
public:
    // Validates every invariant and throws Error(validation) naming the
    // offending turn otherwise.
    static Conversation create(std::string conversation_id, std::vector<Turn> turns,
                               Metadata metadata = {});

    const std::string& id() const noexcept { return id_; }
    std::span<const Turn> turns() const noexcept { return turns_; }
    std::size_t size() const noexcept { return turns_.size(); }
    const Metadata& metadata() const noexcept { return metadata_; }

    // Throws Error(lookup) for ids outside [0, size()).
    const Turn& turn(TurnId id) const;

    // Speakers in order of first appearance.
    const std::vector<std::string>& observed_speakers() const noexcept { return speakers_; }
    SpeakerRole role_of(const std::string& speaker_id) const;
    bool is_facilitator(const std::string& speaker_id) const;

    bool operator==(const Conversation& other) const {
        return id_ == other.id_ && turns_ == other.turns_ && metadata_ == other.metadata_;
    }

private:
    Conversation() = default;

    std::string id_;
    std::vector<Turn> turns_;
    Metadata metadata_;
    std::vector<std::string> speakers_;
    std::map<std::string, SpeakerRole> roles_;
};

struct WindowConfig {
    int size = 10;

    void validate() const;
    bool operator==(const WindowConfig&) const = default;
};

// Merges adjacent same-speaker utterances, assigns positional ids and
// validates the result.
Conversation assemble(std::string conversation_id, const std::vector<Utterance>& utterances,
                      Metadata metadata = {});

Conversation parse_transcript(std::string_view raw);
Conversation load_transcript(const std::string& path);
std::string serialize_transcript(const Conversation& conv);

std::size_t word_count(std::string_view text);

inline constexpr double kProxyWordsPerSecond = 2.5;

// Seconds spoken. Falls back to word_count / 2.5 when timings are missing.
double speaking_time(const Turn& turn);
bool has_timing(const Turn& turn);

// The min(size, turn_id) turns immediately preceding turn_id.
std::span<const Turn> window(const Conversation& conv, TurnId turn_id, const WindowConfig& cfg);

// First turn id of the window for turn_id (window is [first, turn_id)).
TurnId window_start(TurnId turn_id, const WindowConfig& cfg);
bool in_window(TurnId source, TurnId target, const WindowConfig& cfg);

} // namespace responsivity::corpus
