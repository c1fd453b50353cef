#include "responsivity/simlink.hpp"

#include "responsivity/error.hpp"

#include <algorithm>
#include <cmath>

namespace responsivity::simlink {

void SimilarityConfig::validate() const {
    if (!(threshold > -1.0 && threshold <= 1.0)) {
        throw Error(ErrorKind::argument,
                    "similarity threshold must lie in (-1, 1], got " + std::to_string(threshold));
    }
    window.validate();
}

nlohmann::json SimilarityConfig::echo() const {
    return {{"threshold", threshold}, {"window_size", window.size}, {"normalize", normalize}};
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw Error(ErrorKind::argument, "dimension mismatch: " + std::to_string(u.size()) + " vs " +
                                             std::to_string(v.size()));
    }
    double uv = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (!std::isfinite(uv) || !std::isfinite(uu) || !std::isfinite(vv)) {
        throw Error(ErrorKind::numeric, "non-finite embedding component");
    }
    if (uu == 0.0 || vv == 0.0) {
        throw Error(ErrorKind::numeric, "cosine similarity of a zero vector");
    }
    // sqrt(uu * vv) rather than sqrt(uu) * sqrt(vv): for u == v this is exact.
    return std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
    return cosine_similarity(std::span<const double>(u.values), std::span<const double>(v.values));
}

EmbeddingVector l2_normalized(const EmbeddingVector& v) {
    double norm2 = 0.0;
    for (double x : v.values) {
        if (!std::isfinite(x)) throw Error(ErrorKind::numeric, "non-finite embedding component");
        norm2 += x * x;
    }
    if (norm2 == 0.0) throw Error(ErrorKind::numeric, "cannot normalize a zero vector");
    const double norm = std::sqrt(norm2);
    EmbeddingVector out = v;
    for (double& x : out.values) x /= norm;
    return out;
}

links::AnnotationRun link_by_similarity(const corpus::Conversation& conv,
                                        const std::map<TurnId, EmbeddingVector>& embeddings,
                                        const SimilarityConfig& cfg, const std::string& method_id) {
    cfg.validate();
    std::vector<EmbeddingVector> vectors;
    vectors.reserve(conv.size());
    std::size_t dimension = 0;
    for (const corpus::Turn& t : conv.turns()) {
        auto it = embeddings.find(t.turn_id);
        if (it == embeddings.end()) {
            throw Error(ErrorKind::lookup, "no embedding for turn " + std::to_string(t.turn_id));
        }
        if (t.turn_id == 0) {
            dimension = it->second.dimension();
        } else if (it->second.dimension() != dimension) {
            throw Error(ErrorKind::argument,
                        "embedding dimension of turn " + std::to_string(t.turn_id) + " differs");
        }
        vectors.push_back(cfg.normalize ? l2_normalized(it->second) : it->second);
    }

    links::AnnotationRun run(conv.id(), method_id, 0, cfg.window);
    for (const corpus::Turn& t : conv.turns()) {
        for (const corpus::Turn& p : corpus::window(conv, t.turn_id, cfg.window)) {
            const double sim = cosine_similarity(vectors[static_cast<std::size_t>(t.turn_id)],
                                                 vectors[static_cast<std::size_t>(p.turn_id)]);
            if (sim >= cfg.threshold) {
                run.links.add({t.turn_id, p.turn_id, links::LinkKind::unclassified, {}});
            }
        }
    }
    return run;
}

} // namespace responsivity::simlink
