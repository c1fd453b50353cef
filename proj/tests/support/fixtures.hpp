#pragma once

#include "responsivity/corpus.hpp"
#include "responsivity/linkspace.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

inline std::filesystem::path fixture_dir() { return RESPONSIVITY_FIXTURE_DIR; }
inline std::filesystem::path golden_dir() { return RESPONSIVITY_GOLDEN_DIR; }

inline const std::vector<std::string>& fixture_ids() {
    static const std::vector<std::string> ids = {"forum-a", "forum-b", "forum-c"};
    return ids;
}

inline std::string transcript_path(const std::string& id) {
    return (fixture_dir() / "corpus" / (id + ".json")).string();
}

inline std::string gold_path(const std::string& id, int annotator) {
    return (fixture_dir() / "gold" / (id + ".annotator-" + std::to_string(annotator) + ".json")).string();
}

inline std::string replay_dir() { return (fixture_dir() / "replay").string(); }
inline std::string embeddings_path() { return (fixture_dir() / "embeddings.json").string(); }

// Fresh scratch directory under the build tree, emptied on creation.
std::filesystem::path scratch_dir(const std::string& name);

std::string slurp(const std::filesystem::path& path);

// Random conversation with alternating speakers (never the same twice in a
// row); speaker "s0" is the facilitator.
responsivity::corpus::Conversation random_conversation(std::mt19937_64& rng, int min_turns, int max_turns,
                                                       int max_speakers, bool timed);

// Random in-window links for every source turn, with random kinds.
responsivity::links::AnnotationRun random_run(const responsivity::corpus::Conversation& conv,
                                              std::mt19937_64& rng, const std::string& method, int index,
                                              double density, int window = 10);

} // namespace testsupport
