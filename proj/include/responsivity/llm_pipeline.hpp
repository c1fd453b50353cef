#pragma once

#include "responsivity/chat_client.hpp"
#include "responsivity/linkspace.hpp"
#include "responsivity/prompts.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace responsivity::llm {

struct PipelineConfig {
    std::string model_id = "default-model";
    std::string method_id = "llm";
    int runs = 3;
    corpus::WindowConfig window{};
    // Extra attempts after a malformed or invalid response.
    int retry_budget = 2;
    // Extra attempts after a transport failure.
    int transport_retries = 2;
    int max_in_flight = 1;
    PromptTemplates templates = default_templates();

    void validate() const;
    // Votes needed out of `runs` for a stage-1 link or stage-3 label to survive.
    int majority() const { return runs / 2 + 1; }
    nlohmann::json echo() const;
};

struct RetryEvent {
    int stage = 1;
    int run = 0;
    TurnId source = 0;
    TurnId target = -1;
    int attempts = 0;
    bool abandoned = false;
    std::string last_error;
};

struct RetryReport {
    std::vector<RetryEvent> events;

    int retries() const;
    int abandoned() const;
    nlohmann::json to_json() const;
};

struct AnnotationOutcome {
    std::vector<links::AnnotationRun> runs;
    RetryReport report;
};

// Runs the three-stage pipeline:
//  1. stage 1 over every turn with a nonempty window, `runs` times;
//  2. stage 2 once per link kept by stage-1 majority;
//  3. stage 3 `runs` times per segment pair, majority-voted into the link kind.
// A (turn, run) whose responses stay malformed after the retry budget
// contributes no links. Transport exhaustion throws RunError listing the
// failed turns; a replay cache miss propagates as Error(cache_miss).
AnnotationOutcome annotate_conversation(const corpus::Conversation& conv, ChatClient& client,
                                        const PipelineConfig& config = {});

} // namespace responsivity::llm
