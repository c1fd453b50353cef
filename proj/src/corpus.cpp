#include "responsivity/corpus.hpp"

#include "responsivity/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace responsivity::corpus {

using nlohmann::json;

const char* to_string(SpeakerRole role) {
    return role == SpeakerRole::facilitator ? "facilitator" : "participant";
}

SpeakerRole parse_role(std::string_view text) {
    if (text == "facilitator") return SpeakerRole::facilitator;
    if (text == "participant") return SpeakerRole::participant;
    throw Error(ErrorKind::validation, "unknown role \"" + std::string(text) + "\"");
}

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string turn_label(std::size_t index) { return "turn " + std::to_string(index); }

void check_timing(const std::optional<double>& start, const std::optional<double>& end,
                  const std::string& where) {
    if ((start && !std::isfinite(*start)) || (end && !std::isfinite(*end))) {
        throw Error(ErrorKind::validation, where + ": non-finite timing");
    }
    if (start && end && *end < *start) {
        throw Error(ErrorKind::validation, where + ": end_time precedes start_time");
    }
}

} // namespace

Conversation Conversation::create(std::string conversation_id, std::vector<Turn> turns,
                                  Metadata metadata) {
    if (turns.empty()) {
        throw Error(ErrorKind::validation, "conversation \"" + conversation_id + "\" has no turns");
    }
    Conversation conv;
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const Turn& t = turns[i];
        const std::string where = turn_label(i);
        if (t.turn_id != static_cast<TurnId>(i)) {
            throw Error(ErrorKind::validation, where + ": turn_id " + std::to_string(t.turn_id) +
                                                   " is not dense and positional");
        }
        if (t.speaker_id.empty()) {
            throw Error(ErrorKind::validation, where + ": empty speaker_id");
        }
        if (is_blank(t.words)) {
            throw Error(ErrorKind::validation, where + ": words empty after trimming");
        }
        check_timing(t.start_time, t.end_time, where);
        if (i > 0 && turns[i - 1].speaker_id == t.speaker_id) {
            throw Error(ErrorKind::validation,
                        where + ": same speaker as the preceding turn (turns must be maximal)");
        }
        auto [it, inserted] = conv.roles_.emplace(t.speaker_id, t.role);
        if (inserted) {
            conv.speakers_.push_back(t.speaker_id);
        } else if (it->second != t.role) {
            throw Error(ErrorKind::validation,
                        where + ": speaker \"" + t.speaker_id + "\" changes role");
        }
    }
    conv.id_ = std::move(conversation_id);
    conv.turns_ = std::move(turns);
    conv.metadata_ = std::move(metadata);
    return conv;
}

const Turn& Conversation::turn(TurnId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= turns_.size()) {
        throw Error(ErrorKind::lookup, "unknown turn_id " + std::to_string(id) + " in conversation \"" +
                                           id_ + "\"");
    }
    return turns_[static_cast<std::size_t>(id)];
}

SpeakerRole Conversation::role_of(const std::string& speaker_id) const {
    auto it = roles_.find(speaker_id);
    if (it == roles_.end()) {
        throw Error(ErrorKind::lookup, "unknown speaker \"" + speaker_id + "\"");
    }
    return it->second;
}

bool Conversation::is_facilitator(const std::string& speaker_id) const {
    return role_of(speaker_id) == SpeakerRole::facilitator;
}

void WindowConfig::validate() const {
    if (size < 1) {
        throw Error(ErrorKind::argument, "window size must be >= 1, got " + std::to_string(size));
    }
}

Conversation assemble(std::string conversation_id, const std::vector<Utterance>& utterances,
                      Metadata metadata) {
    std::vector<Turn> turns;
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        const Utterance& u = utterances[i];
        const std::string where = turn_label(i);
        if (u.speaker_id.empty()) {
            throw Error(ErrorKind::validation, where + ": empty speaker_id");
        }
        if (is_blank(u.words)) {
            throw Error(ErrorKind::validation, where + ": words empty after trimming");
        }
        check_timing(u.start_time, u.end_time, where);

        if (!turns.empty() && turns.back().speaker_id == u.speaker_id) {
            Turn& t = turns.back();
            if (t.role != u.role) {
                throw Error(ErrorKind::validation,
                            where + ": speaker \"" + u.speaker_id + "\" changes role");
            }
            t.words += ' ';
            t.words += u.words;
            if (u.start_time) {
                t.start_time = t.start_time ? std::min(*t.start_time, *u.start_time) : *u.start_time;
            }
            if (u.end_time) {
                t.end_time = t.end_time ? std::max(*t.end_time, *u.end_time) : *u.end_time;
            }
            continue;
        }
        Turn t;
        t.turn_id = static_cast<TurnId>(turns.size());
        t.speaker_id = u.speaker_id;
        t.role = u.role;
        t.words = u.words;
        t.start_time = u.start_time;
        t.end_time = u.end_time;
        turns.push_back(std::move(t));
    }
    return Conversation::create(std::move(conversation_id), std::move(turns), std::move(metadata));
}

namespace {

std::string require_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(ErrorKind::parse, where + ": missing field \"" + key + "\"");
    }
    if (!it->is_string()) {
        throw Error(ErrorKind::parse, where + ": field \"" + key + "\" must be a string");
    }
    return it->get<std::string>();
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) {
        throw Error(ErrorKind::parse, where + ": field \"" + key + "\" must be a number");
    }
    return it->get<double>();
}

std::string as_metadata_value(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

} // namespace

Conversation parse_transcript(std::string_view raw) {
    json doc;
    try {
        doc = json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw Error(ErrorKind::parse, "transcript must be a JSON object");
    }
    const std::string conv_id = require_string(doc, "conversation_id", "transcript");

    Metadata metadata;
    if (auto it = doc.find("metadata"); it != doc.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw Error(ErrorKind::parse, "transcript: field \"metadata\" must be an object");
        }
        for (const auto& [k, v] : it->items()) metadata[k] = as_metadata_value(v);
    }
    for (const auto& [k, v] : doc.items()) {
        if (k != "conversation_id" && k != "metadata" && k != "turns") {
            metadata[k] = as_metadata_value(v);
        }
    }

    auto turns_it = doc.find("turns");
    if (turns_it == doc.end()) {
        throw Error(ErrorKind::parse, "transcript: missing field \"turns\"");
    }
    if (!turns_it->is_array()) {
        throw Error(ErrorKind::parse, "transcript: field \"turns\" must be an array");
    }

    static const std::array<std::string_view, 5> kTurnKeys = {"speaker_id", "role", "words",
                                                              "start_time", "end_time"};
    std::vector<Utterance> utterances;
    json source_ids = json::array();
    json extras = json::object();
    bool any_source_id = false;
    for (std::size_t i = 0; i < turns_it->size(); ++i) {
        const json& t = (*turns_it)[i];
        const std::string where = turn_label(i);
        if (!t.is_object()) {
            throw Error(ErrorKind::parse, where + ": must be an object");
        }
        Utterance u;
        u.speaker_id = require_string(t, "speaker_id", where);
        const std::string role = require_string(t, "role", where);
        try {
            u.role = parse_role(role);
        } catch (const Error&) {
            throw Error(ErrorKind::validation, where + ": unknown role \"" + role + "\"");
        }
        u.words = require_string(t, "words", where);
        u.start_time = optional_number(t, "start_time", where);
        u.end_time = optional_number(t, "end_time", where);
        if (auto id = t.find("turn_id"); id != t.end()) {
            source_ids.push_back(*id);
            any_source_id = true;
        } else {
            source_ids.push_back(nullptr);
        }
        json extra = json::object();
        for (const auto& [k, v] : t.items()) {
            if (k == "turn_id") continue;
            if (std::find(kTurnKeys.begin(), kTurnKeys.end(), k) == kTurnKeys.end()) extra[k] = v;
        }
        if (!extra.empty()) extras[std::to_string(i)] = std::move(extra);
        utterances.push_back(std::move(u));
    }
    if (any_source_id) metadata["source_turn_ids"] = source_ids.dump();
    if (!extras.empty()) metadata["source_turn_extras"] = extras.dump();

    return assemble(conv_id, utterances, std::move(metadata));
}

Conversation load_transcript(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::lookup, "cannot open transcript " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_transcript(ss.str());
}

std::string serialize_transcript(const Conversation& conv) {
    json doc;
    doc["conversation_id"] = conv.id();
    doc["metadata"] = json::object();
    for (const auto& [k, v] : conv.metadata()) doc["metadata"][k] = v;
    json turns = json::array();
    for (const Turn& t : conv.turns()) {
        json jt;
        jt["speaker_id"] = t.speaker_id;
        jt["role"] = to_string(t.role);
        jt["words"] = t.words;
        if (t.start_time) jt["start_time"] = *t.start_time;
        if (t.end_time) jt["end_time"] = *t.end_time;
        turns.push_back(std::move(jt));
    }
    doc["turns"] = std::move(turns);
    return doc.dump(2) + "\n";
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

bool has_timing(const Turn& turn) { return turn.start_time && turn.end_time; }

double speaking_time(const Turn& turn) {
    if (has_timing(turn)) return *turn.end_time - *turn.start_time;
    return static_cast<double>(word_count(turn.words)) / kProxyWordsPerSecond;
}

TurnId window_start(TurnId turn_id, const WindowConfig& cfg) {
    return std::max<TurnId>(0, turn_id - cfg.size);
}

bool in_window(TurnId source, TurnId target, const WindowConfig& cfg) {
    return target < source && target >= window_start(source, cfg);
}

std::span<const Turn> window(const Conversation& conv, TurnId turn_id, const WindowConfig& cfg) {
    cfg.validate();
    conv.turn(turn_id);
    const TurnId first = window_start(turn_id, cfg);
    return conv.turns().subspan(static_cast<std::size_t>(first),
                                static_cast<std::size_t>(turn_id - first));
}

} // namespace responsivity::corpus
