#include "responsivity/prompts.hpp"

#include "json_extract.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"

#include <algorithm>
#include <sstream>

namespace responsivity::llm {

using nlohmann::json;

namespace {

constexpr std::string_view kStage1System = R"tpl(Your task is to draw connections between the current, most recent conversation turn and the 
preceding speaker turns in terms of **Responsivity**: the tendency of an individual to respond 
(or not) to the contributions of their collaborative peers.

Now, you will be provided with an excerpt of a conversation, indexed by speaker turn id. Your 
response should be in JSON according to the format specified below.)tpl";

constexpr std::string_view kStage1User = R"tpl(**Conversation excerpt:**
{excerpt}

**Current turn**
{current}

**Output instructions:**
Step 1: Consider the above conversation excerpt.
Step 2: Consider the current turn and whether it responds to any preceding turn.
Step 3: If it does, identify the preceding turn id(s) it specifically responds to in the 
"link_turn_id" field. For not responsive segments, mark ["NA"] in the "link_turn_id" field.

Respond in JSON as follows: 

{{ 
"link_turn_id": List<id of turn(s) responding to if applicable, otherwise ["NA"]>
}})tpl";

constexpr std::string_view kStage2System = R"tpl(Your task is to draw connections between two speaker turns in a conversation. Given two speaker turns in which one directly responds to the other, your task is to identify what specific part(s) of the second turn responds to what specific part(s) of the first. 

Your response should be in JSON according to the format specified below.)tpl";

constexpr std::string_view kStage2User = R"tpl(**Speaker Turn 1:**
{speaker_turn_1}

**Speaker Turn 2:**
{speaker_turn_2}

**Output instructions:**
Step 1: Consider the above, in which {speaker_2} responds to {speaker_1}.
Step 2: Identify the part of Speaker Turn 2 that specifically responds to something in the previous turn. This should be an exact quote from Speaker Turn 2.
Step 3:  Identify the part of Speaker Turn 1 that the above is directly responding to. This should be 
an exact quote from Speaker Turn 1.

Respond in JSON as follows: 

{{ 
"step_2": Str<your response to step 2>,
"step_3": Str<your response to step 3>
}})tpl";

constexpr std::string_view kStage3System = R"tpl(Your task is to draw connections between two speaker turns in a conversation that respond to each other. Each responsive speaker turn can be either **substantive** or **mechanical**:

- Substantive Responsivity refers to an interaction where one person meaningfully engages with what another has said. It captures how much a speaker reflects back, builds upon, inquires about, or connects to other ideas, emotions, or experiences shared by the previous speaker, or answers a meaningful question from a previous speaker. 

- Mechanical Responsivity, on the other hand, occurs when a speaker responds in a way that acknowledges or moves the conversation forward but does not add substantial new content. These responses may include polite phrases, conversational hand-offs, or social cues.

Your response should be in JSON according to the format specified below.)tpl";

constexpr std::string_view kStage3User = R"tpl(**Speaker Turn 1:**
{speaker_turn_1}

**Speaker Turn 2:**
{speaker_turn_2}

**Output instructions:**
Step 1: Consider the above, in which {speaker_2} responds to {speaker_1}.
Step 2: Determine whether Speaker Turn 2 responds mechanically OR substantively to Speaker Turn 1.
Step 3: If it truly has elements of both mechanical and substantive responsivity, then it should be considered substantive.

Respond in JSON as follows: 

{{ 
"label": Str<"responsive_mechanical", or "responsive_substantive">,
}})tpl";

} // namespace

const PromptTemplates& default_templates() {
    static const PromptTemplates kDefault{
        "one-shot",
        std::string(kStage1System), std::string(kStage1User),
        std::string(kStage2System), std::string(kStage2User),
        std::string(kStage3System), std::string(kStage3User),
    };
    return kDefault;
}

PromptTemplates templates_from_json(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::parse, "template set must be a JSON object");
    PromptTemplates t = default_templates();
    t.name = doc.value("name", std::string("custom"));
    auto take = [&](const char* key, std::string& into) {
        if (auto it = doc.find(key); it != doc.end()) {
            if (!it->is_string()) {
                throw Error(ErrorKind::parse, std::string("template \"") + key + "\" must be a string");
            }
            into = it->get<std::string>();
        }
    };
    take("stage1_system", t.stage1_system);
    take("stage1_user", t.stage1_user);
    take("stage2_system", t.stage2_system);
    take("stage2_user", t.stage2_user);
    take("stage3_system", t.stage3_system);
    take("stage3_user", t.stage3_user);
    return t;
}

PromptTemplates load_templates(const std::string& path) { return templates_from_json(read_json_file(path)); }

std::string format_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        const char c = tmpl[i];
        if (c == '{') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
                out.push_back('{');
                ++i;
                continue;
            }
            const auto close = tmpl.find('}', i + 1);
            if (close == std::string_view::npos) {
                throw Error(ErrorKind::argument, "unbalanced '{' in template at offset " + std::to_string(i));
            }
            const std::string name(tmpl.substr(i + 1, close - i - 1));
            auto it = values.find(name);
            if (it == values.end()) {
                throw Error(ErrorKind::argument, "no value for template placeholder {" + name + "}");
            }
            out += it->second;
            i = close;
        } else if (c == '}') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
                out.push_back('}');
                ++i;
                continue;
            }
            throw Error(ErrorKind::argument, "unbalanced '}' in template at offset " + std::to_string(i));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string format_turn_line(const corpus::Turn& turn) {
    return "[" + std::to_string(turn.turn_id) + "] " + turn.speaker_id + ": " + turn.words;
}

RenderedPrompt render_stage1(const corpus::Conversation& conv, TurnId turn_id,
                             const corpus::WindowConfig& window, const PromptTemplates& templates) {
    if (turn_id < 1) {
        throw Error(ErrorKind::argument, "stage 1 needs a turn with preceding context, got turn " +
                                             std::to_string(turn_id));
    }
    std::string excerpt;
    for (const corpus::Turn& t : corpus::window(conv, turn_id, window)) {
        if (!excerpt.empty()) excerpt.push_back('\n');
        excerpt += format_turn_line(t);
    }
    const std::map<std::string, std::string> values{
        {"excerpt", excerpt},
        {"current", format_turn_line(conv.turn(turn_id))},
    };
    return {format_template(templates.stage1_system, {}), format_template(templates.stage1_user, values)};
}

RenderedPrompt render_stage2(const corpus::Conversation& conv, TurnId source, TurnId target,
                             const PromptTemplates& templates) {
    const corpus::Turn& responder = conv.turn(source);
    const corpus::Turn& earlier = conv.turn(target);
    const std::map<std::string, std::string> values{
        {"speaker_turn_1", earlier.words},
        {"speaker_turn_2", responder.words},
        {"speaker_1", earlier.speaker_id},
        {"speaker_2", responder.speaker_id},
    };
    return {format_template(templates.stage2_system, {}), format_template(templates.stage2_user, values)};
}

RenderedPrompt render_stage3(const corpus::Conversation& conv, TurnId source, TurnId target,
                             const links::SegmentPair& segments, const PromptTemplates& templates) {
    const std::map<std::string, std::string> values{
        {"speaker_turn_1", segments.target_segment},
        {"speaker_turn_2", segments.response_segment},
        {"speaker_1", conv.turn(target).speaker_id},
        {"speaker_2", conv.turn(source).speaker_id},
    };
    return {format_template(templates.stage3_system, {}), format_template(templates.stage3_user, values)};
}

namespace {

std::string join_ids(const std::vector<long long>& ids) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < ids.size(); ++i) ss << (i ? ", " : "") << ids[i];
    return ss.str();
}

std::optional<long long> as_turn_id(const json& v) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
        return std::nullopt;
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (!s.empty() && s.size() < 10 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            return std::stoll(s);
        }
    }
    return std::nullopt;
}

bool is_na(const json& v) { return v.is_string() && v.get<std::string>() == "NA"; }

std::size_t closest_offset(std::string_view haystack, std::string_view needle) {
    std::size_t best = 0;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < haystack.size(); ++i) {
        std::size_t len = 0;
        while (len < needle.size() && i + len < haystack.size() && haystack[i + len] == needle[len]) ++len;
        if (len > best_len) {
            best_len = len;
            best = i;
        }
    }
    return best;
}

std::string require_quote(const json& doc, const char* key, std::string_view turn_words,
                          const char* which) {
    auto it = doc.find(key);
    if (it == doc.end()) throw Error(ErrorKind::parse, std::string("missing key \"") + key + "\"");
    if (!it->is_string()) throw Error(ErrorKind::parse, std::string("key \"") + key + "\" must be a string");
    const std::string quote = it->get<std::string>();
    const std::string norm_quote = links::collapse_whitespace(quote);
    const std::string norm_turn = links::collapse_whitespace(turn_words);
    if (norm_quote.empty()) {
        throw QuoteMismatchError(std::string(which) + " quote is empty", 0);
    }
    if (norm_turn.find(norm_quote) == std::string::npos) {
        throw QuoteMismatchError(std::string(which) + " quote \"" + norm_quote + "\" not found in its turn",
                                 closest_offset(norm_turn, norm_quote));
    }
    return norm_quote;
}

} // namespace

StageOneResult parse_stage1(std::string_view response_text, TurnId source_turn,
                            const std::set<TurnId>& window_ids) {
    const json doc = detail::extract_json_object(response_text);
    auto it = doc.find("link_turn_id");
    if (it == doc.end()) throw Error(ErrorKind::parse, "missing key \"link_turn_id\"");

    StageOneResult result;
    result.source_turn = source_turn;
    json items = *it;
    if (!items.is_array()) items = json::array({items});

    bool saw_na = false;
    std::vector<long long> offenders;
    for (const json& v : items) {
        if (is_na(v)) {
            saw_na = true;
            continue;
        }
        const auto id = as_turn_id(v);
        if (!id) throw Error(ErrorKind::validation, "link_turn_id entry " + v.dump() + " is not a turn id");
        if (*id < 0 || !window_ids.count(static_cast<TurnId>(*id))) {
            offenders.push_back(*id);
            continue;
        }
        result.target_ids.insert(static_cast<TurnId>(*id));
    }
    if (!offenders.empty()) {
        throw Error(ErrorKind::validation, "link_turn_id outside the window: " + join_ids(offenders));
    }
    if (saw_na && !result.target_ids.empty()) {
        throw Error(ErrorKind::validation, "link_turn_id mixes \"NA\" with turn ids");
    }
    return result;
}

StageTwoResult parse_stage2(std::string_view response_text, std::string_view response_turn_words,
                            std::string_view target_turn_words) {
    const json doc = detail::extract_json_object(response_text);
    StageTwoResult result;
    result.response_segment = require_quote(doc, "step_2", response_turn_words, "step_2");
    result.target_segment = require_quote(doc, "step_3", target_turn_words, "step_3");
    return result;
}

StageThreeResult parse_stage3(std::string_view response_text) {
    const json doc = detail::extract_json_object(response_text);
    auto it = doc.find("label");
    if (it == doc.end()) throw Error(ErrorKind::parse, "missing key \"label\"");
    if (!it->is_string()) throw Error(ErrorKind::validation, "label must be a string");
    const std::string label = it->get<std::string>();
    if (label == "responsive_substantive") return {StageThreeLabel::responsive_substantive};
    if (label == "responsive_mechanical") return {StageThreeLabel::responsive_mechanical};
    throw Error(ErrorKind::validation, "unknown label \"" + label + "\"");
}

} // namespace responsivity::llm
