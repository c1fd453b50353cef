#include "responsivity/llm_pipeline.hpp"

#include "responsivity/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <thread>

namespace responsivity::llm {

using nlohmann::json;

void PipelineConfig::validate() const {
    if (runs < 1) throw Error(ErrorKind::argument, "runs must be >= 1");
    if (retry_budget < 0 || transport_retries < 0) {
        throw Error(ErrorKind::argument, "retry budgets must be >= 0");
    }
    if (max_in_flight < 1) throw Error(ErrorKind::argument, "max_in_flight must be >= 1");
    if (model_id.empty()) throw Error(ErrorKind::argument, "model_id is empty");
    window.validate();
}

json PipelineConfig::echo() const {
    return {{"model_id", model_id},
            {"method_id", method_id},
            {"runs", runs},
            {"window_size", window.size},
            {"retry_budget", retry_budget},
            {"transport_retries", transport_retries},
            {"majority", majority()},
            {"temperature", 0},
            {"templates", templates.name}};
}

int RetryReport::retries() const {
    int n = 0;
    for (const auto& e : events) n += e.attempts - 1;
    return n;
}

int RetryReport::abandoned() const {
    return static_cast<int>(std::count_if(events.begin(), events.end(), [](const auto& e) { return e.abandoned; }));
}

json RetryReport::to_json() const {
    json items = json::array();
    for (const auto& e : events) {
        items.push_back({{"stage", e.stage},
                         {"run", e.run},
                         {"source", e.source},
                         {"target", e.target},
                         {"attempts", e.attempts},
                         {"abandoned", e.abandoned},
                         {"last_error", e.last_error}});
    }
    return {{"retries", retries()}, {"abandoned", abandoned()}, {"events", std::move(items)}};
}

namespace {

// Runs fn(0..n-1) on up to `workers` threads; rethrows the lowest-index
// exception after all tasks finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct CallOutcome {
    std::optional<std::string> response;
    bool transport_failed = false;
    std::string error;
};

CallOutcome call_with_transport_retry(ChatClient& client, const ChatRequest& request, int transport_retries) {
    CallOutcome out;
    for (int attempt = 0; attempt <= transport_retries; ++attempt) {
        try {
            out.response = client.complete(request).response_text;
            return out;
        } catch (const TransportError& e) {
            out.error = e.what();
        }
    }
    out.transport_failed = true;
    return out;
}

// Outcome of one logical request with malformed-response retries.
template <typename T>
struct Attempted {
    std::optional<T> value;
    RetryEvent event;
    bool transport_failed = false;
};

template <typename T>
Attempted<T> attempt_stage(ChatClient& client, const PipelineConfig& cfg, const RenderedPrompt& prompt,
                           const std::string& salt_prefix, RetryEvent event,
                           const std::function<T(const std::string&)>& parse) {
    Attempted<T> out;
    for (int attempt = 0; attempt <= cfg.retry_budget; ++attempt) {
        event.attempts = attempt + 1;
        ChatRequest request{cfg.model_id, prompt.system_text, prompt.user_text,
                            salt_prefix + "/attempt=" + std::to_string(attempt)};
        CallOutcome call = call_with_transport_retry(client, request, cfg.transport_retries);
        if (call.transport_failed) {
            event.last_error = call.error;
            event.abandoned = true;
            out.transport_failed = true;
            out.event = event;
            return out;
        }
        try {
            out.value = parse(*call.response);
            out.event = event;
            return out;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::cache_miss) throw;
            event.last_error = e.what();
        }
    }
    event.abandoned = true;
    out.event = event;
    return out;
}

std::string stage_salt(int stage, int run) {
    return "stage" + std::to_string(stage) + "/run=" + std::to_string(run);
}

} // namespace

AnnotationOutcome annotate_conversation(const corpus::Conversation& conv, ChatClient& client,
                                        const PipelineConfig& cfg) {
    cfg.validate();
    const int turn_count = static_cast<int>(conv.size());

    // Stage 1: (run, turn) tasks for every turn with preceding context.
    struct Stage1Task {
        int run;
        TurnId turn;
    };
    std::vector<Stage1Task> stage1_tasks;
    for (int r = 0; r < cfg.runs; ++r) {
        for (TurnId t = 1; t < turn_count; ++t) stage1_tasks.push_back({r, t});
    }
    std::vector<Attempted<StageOneResult>> stage1(stage1_tasks.size());
    parallel_for(stage1_tasks.size(), cfg.max_in_flight, [&](std::size_t i) {
        const auto [run, turn] = stage1_tasks[i];
        std::set<TurnId> window_ids;
        for (const corpus::Turn& w : corpus::window(conv, turn, cfg.window)) window_ids.insert(w.turn_id);
        const RenderedPrompt prompt = render_stage1(conv, turn, cfg.window, cfg.templates);
        stage1[i] = attempt_stage<StageOneResult>(
            client, cfg, prompt, stage_salt(1, run), RetryEvent{1, run, turn, -1, 0, false, {}},
            [&](const std::string& text) { return parse_stage1(text, turn, window_ids); });
    });

    std::set<int> failed_turns;
    RetryReport report;
    std::vector<links::AnnotationRun> runs;
    for (int r = 0; r < cfg.runs; ++r) runs.emplace_back(conv.id(), cfg.method_id, r, cfg.window);
    for (std::size_t i = 0; i < stage1_tasks.size(); ++i) {
        const auto& outcome = stage1[i];
        if (outcome.event.attempts > 1 || outcome.event.abandoned) report.events.push_back(outcome.event);
        if (outcome.transport_failed) failed_turns.insert(stage1_tasks[i].turn);
        if (!outcome.value) continue;
        for (TurnId target : outcome.value->target_ids) {
            // Parsing already restricted ids to the window; LinkTable re-checks.
            runs[static_cast<std::size_t>(stage1_tasks[i].run)].links.add(
                {stage1_tasks[i].turn, target, links::LinkKind::unclassified, {}});
        }
    }

    const links::ConsolidatedAnnotation candidates = links::consolidate_runs(runs, cfg.majority());
    const std::vector<links::Link> candidate_links = candidates.links.links();

    // Stage 2: one segmentation per surviving link. Unrecoverable responses
    // fall back to quoting the whole turns.
    std::vector<Attempted<StageTwoResult>> stage2(candidate_links.size());
    parallel_for(candidate_links.size(), cfg.max_in_flight, [&](std::size_t i) {
        const links::Link& link = candidate_links[i];
        const auto& source_words = conv.turn(link.source_turn).words;
        const auto& target_words = conv.turn(link.target_turn).words;
        const RenderedPrompt prompt = render_stage2(conv, link.source_turn, link.target_turn, cfg.templates);
        stage2[i] = attempt_stage<StageTwoResult>(
            client, cfg, prompt, "stage2", RetryEvent{2, 0, link.source_turn, link.target_turn, 0, false, {}},
            [&](const std::string& text) { return parse_stage2(text, source_words, target_words); });
    });
    std::vector<links::SegmentPair> segments(candidate_links.size());
    for (std::size_t i = 0; i < candidate_links.size(); ++i) {
        const auto& outcome = stage2[i];
        if (outcome.event.attempts > 1 || outcome.event.abandoned) report.events.push_back(outcome.event);
        if (outcome.transport_failed) failed_turns.insert(candidate_links[i].source_turn);
        if (outcome.value) {
            segments[i] = {outcome.value->response_segment, outcome.value->target_segment,
                           links::LinkKind::unclassified};
        } else {
            segments[i] = {links::collapse_whitespace(conv.turn(candidate_links[i].source_turn).words),
                           links::collapse_whitespace(conv.turn(candidate_links[i].target_turn).words),
                           links::LinkKind::unclassified};
        }
    }

    // Stage 3: `runs` classifications per segment pair.
    const std::size_t stage3_count = candidate_links.size() * static_cast<std::size_t>(cfg.runs);
    std::vector<Attempted<StageThreeResult>> stage3(stage3_count);
    parallel_for(stage3_count, cfg.max_in_flight, [&](std::size_t k) {
        const std::size_t i = k / static_cast<std::size_t>(cfg.runs);
        const int run = static_cast<int>(k % static_cast<std::size_t>(cfg.runs));
        const links::Link& link = candidate_links[i];
        const RenderedPrompt prompt =
            render_stage3(conv, link.source_turn, link.target_turn, segments[i], cfg.templates);
        stage3[k] = attempt_stage<StageThreeResult>(
            client, cfg, prompt, stage_salt(3, run),
            RetryEvent{3, run, link.source_turn, link.target_turn, 0, false, {}},
            [](const std::string& text) { return parse_stage3(text); });
    });

    std::map<std::pair<TurnId, TurnId>, links::SegmentPair> classified;
    for (std::size_t i = 0; i < candidate_links.size(); ++i) {
        int substantive = 0;
        int mechanical = 0;
        for (int run = 0; run < cfg.runs; ++run) {
            const auto& outcome = stage3[i * static_cast<std::size_t>(cfg.runs) + static_cast<std::size_t>(run)];
            if (outcome.event.attempts > 1 || outcome.event.abandoned) report.events.push_back(outcome.event);
            if (outcome.transport_failed) failed_turns.insert(candidate_links[i].source_turn);
            if (!outcome.value) continue;
            (outcome.value->kind() == links::LinkKind::substantive ? substantive : mechanical) += 1;
        }
        links::SegmentPair pair = segments[i];
        if (substantive >= cfg.majority()) {
            pair.kind = links::LinkKind::substantive;
        } else if (mechanical >= cfg.majority()) {
            pair.kind = links::LinkKind::mechanical;
        }
        classified[{candidate_links[i].source_turn, candidate_links[i].target_turn}] = pair;
    }

    if (!failed_turns.empty()) {
        std::string list;
        for (int t : failed_turns) list += (list.empty() ? "" : ", ") + std::to_string(t);
        throw RunError("transport retries exhausted for turns " + list,
                       std::vector<int>(failed_turns.begin(), failed_turns.end()));
    }

    // Rebuild each run with stage-2/3 results attached to its surviving links.
    AnnotationOutcome out;
    for (const links::AnnotationRun& raw : runs) {
        links::AnnotationRun run(raw.conversation_id, raw.method_id, raw.run_index, raw.window());
        for (links::Link link : raw.links.links()) {
            if (auto it = classified.find({link.source_turn, link.target_turn}); it != classified.end()) {
                link.kind = it->second.kind;
                link.segments = {it->second};
            }
            run.links.add(std::move(link));
        }
        out.runs.push_back(std::move(run));
    }
    std::stable_sort(report.events.begin(), report.events.end(), [](const RetryEvent& a, const RetryEvent& b) {
        return std::tie(a.stage, a.source, a.target, a.run) < std::tie(b.stage, b.source, b.target, b.run);
    });
    out.report = std::move(report);
    return out;
}

} // namespace responsivity::llm
