#pragma once

#include "responsivity/corpus.hpp"
#include "responsivity/linkspace.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace responsivity::simlink {

using corpus::TurnId;

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

struct SimilarityConfig {
    double threshold = 0.5;
    corpus::WindowConfig window{};
    bool normalize = true;

    // threshold must lie in (-1, 1].
    void validate() const;
    nlohmann::json echo() const;
};

// dot(u, v) / (|u| |v|), clamped to [-1, 1]. Parallel vectors give exactly 1.
double cosine_similarity(std::span<const double> u, std::span<const double> v);
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

// Unit-length copy. Throws Error(numeric) for the zero vector or non-finite
// entries.
EmbeddingVector l2_normalized(const EmbeddingVector& v);

// One unclassified link t -> p for every p in window(t) whose cosine is at
// least the threshold.
links::AnnotationRun link_by_similarity(const corpus::Conversation& conv,
                                        const std::map<TurnId, EmbeddingVector>& embeddings,
                                        const SimilarityConfig& cfg,
                                        const std::string& method_id = "similarity");

} // namespace responsivity::simlink
