#pragma once

#include "responsivity/corpus.hpp"
#include "responsivity/linkspace.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace responsivity::llm {

using corpus::TurnId;

// System and user templates for the three annotation stages. Placeholders use
// brace syntax ({excerpt}, {current}, {speaker_turn_1}, ...) with {{ and }}
// standing for literal braces.
struct PromptTemplates {
    std::string name;
    std::string stage1_system;
    std::string stage1_user;
    std::string stage2_system;
    std::string stage2_user;
    std::string stage3_system;
    std::string stage3_user;
};

// The one-shot templates used by default.
const PromptTemplates& default_templates();

// Alternate template set (e.g. few-shot variants) from a JSON object with the
// same keys as PromptTemplates. Missing keys fall back to the defaults.
PromptTemplates load_templates(const std::string& path);
PromptTemplates templates_from_json(const nlohmann::json& doc);

// Substitutes {name} placeholders. Throws Error(argument) for a placeholder
// without a value or an unbalanced brace.
std::string format_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;

    bool operator==(const RenderedPrompt&) const = default;
};

// "[turn_id] speaker: words"
std::string format_turn_line(const corpus::Turn& turn);

RenderedPrompt render_stage1(const corpus::Conversation& conv, TurnId turn_id,
                             const corpus::WindowConfig& window,
                             const PromptTemplates& templates = default_templates());

// Speaker Turn 1 is the earlier (target) turn, Speaker Turn 2 the responder.
RenderedPrompt render_stage2(const corpus::Conversation& conv, TurnId source, TurnId target,
                             const PromptTemplates& templates = default_templates());

RenderedPrompt render_stage3(const corpus::Conversation& conv, TurnId source, TurnId target,
                             const links::SegmentPair& segments,
                             const PromptTemplates& templates = default_templates());

struct StageOneResult {
    TurnId source_turn = 0;
    std::set<TurnId> target_ids;
};

struct StageTwoResult {
    std::string response_segment;
    std::string target_segment;
};

enum class StageThreeLabel { responsive_mechanical, responsive_substantive };

struct StageThreeResult {
    StageThreeLabel label = StageThreeLabel::responsive_mechanical;

    links::LinkKind kind() const {
        return label == StageThreeLabel::responsive_substantive ? links::LinkKind::substantive
                                                                : links::LinkKind::mechanical;
    }
};

// {"link_turn_id": [ids]} or {"link_turn_id": ["NA"]}. Ids outside
// window_ids are a validation error listing the offenders.
StageOneResult parse_stage1(std::string_view response_text, TurnId source_turn,
                            const std::set<TurnId>& window_ids);

// {"step_2": response quote, "step_3": target quote}. Each quote must occur in
// its turn after whitespace collapsing; otherwise QuoteMismatchError.
StageTwoResult parse_stage2(std::string_view response_text, std::string_view response_turn_words,
                            std::string_view target_turn_words);

// {"label": "responsive_mechanical" | "responsive_substantive"}.
StageThreeResult parse_stage3(std::string_view response_text);

} // namespace responsivity::llm
