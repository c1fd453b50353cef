#include "fixtures.hpp"

#include <fstream>
#include <sstream>

namespace testsupport {

namespace fs = std::filesystem;
using namespace responsivity;

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::path(RESPONSIVITY_SCRATCH_DIR) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

corpus::Conversation random_conversation(std::mt19937_64& rng, int min_turns, int max_turns, int max_speakers,
                                         bool timed) {
    std::uniform_int_distribution<int> turns_dist(min_turns, max_turns);
    std::uniform_int_distribution<int> speakers_dist(2, max_speakers);
    std::uniform_int_distribution<int> len_dist(1, 30);
    const int n = turns_dist(rng);
    const int s = speakers_dist(rng);
    std::vector<corpus::Turn> turns;
    int last = -1;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
        int who = std::uniform_int_distribution<int>(0, s - 1)(rng);
        if (who == last) who = (who + 1) % s;
        last = who;
        corpus::Turn turn;
        turn.turn_id = i;
        turn.speaker_id = "s" + std::to_string(who);
        turn.role = who == 0 ? corpus::SpeakerRole::facilitator : corpus::SpeakerRole::participant;
        const int words = len_dist(rng);
        for (int w = 0; w < words; ++w) turn.words += (w ? " w" : "w") + std::to_string(w + i);
        if (timed) {
            const double dur = 0.5 + words / 2.5;
            turn.start_time = t;
            turn.end_time = t + dur;
            t += dur + 0.3;
        }
        turns.push_back(std::move(turn));
    }
    return corpus::Conversation::create("rand-" + std::to_string(rng() % 100000), std::move(turns));
}

links::AnnotationRun random_run(const corpus::Conversation& conv, std::mt19937_64& rng, const std::string& method,
                                int index, double density, int window) {
    links::AnnotationRun run(conv.id(), method, index, corpus::WindowConfig{window});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> kind(0, 2);
    for (int src = 1; src < static_cast<int>(conv.size()); ++src) {
        for (int tgt = std::max(0, src - window); tgt < src; ++tgt) {
            if (u(rng) < density) {
                run.links.add({src, tgt, static_cast<links::LinkKind>(kind(rng)), {}});
            }
        }
    }
    return run;
}

} // namespace testsupport
