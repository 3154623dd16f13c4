#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ravu/backends.hpp"
#include "ravu/graph_builder.hpp"

namespace ravu {

struct Candidate {
    EntityId entity_id = 0;
    FrameIndex frame_index = 0;
    double score = 0.0;  // cosine similarity
    std::string description;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

inline constexpr std::size_t kDefaultRerankK = 10;

struct LocalizeResult {
    Candidate candidate;
    std::size_t rank = 0;   // position among the top-k candidates
    bool fallback = false;  // backend answer unusable; rank-1 returned
};

// Exact cosine search over node embeddings. Immutable after construction,
// safe for concurrent queries.
class EmbeddingIndex {
public:
    EmbeddingIndex() = default;
    explicit EmbeddingIndex(std::vector<EmbeddingRecord> records);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::span<const EmbeddingRecord> records() const noexcept { return records_; }

    // min(k, size()) candidates by descending score, ties by (frame, entity).
    // Throws EmptyIndex on an empty index, std::invalid_argument for k == 0.
    std::vector<Candidate> top_k(const EmbeddingVector& query, std::size_t k) const;

    // Cosine of `query` against every stored record, in storage order.
    std::vector<double> scores(const EmbeddingVector& query) const;

    // Two-stage lookup: embedding top-k filter, then the backend picks the
    // best description (rerank role). A reply that is not an index in
    // [0, k) after retries falls back to rank 1.
    LocalizeResult localize(std::string_view grounding_phrase, std::size_t k, Backend& backend,
                            const PromptLibrary& prompts,
                            int max_retries = kDefaultMaxRetries) const;

    const EmbeddingRecord* find(EntityId entity_id, FrameIndex frame_index) const;

private:
    std::vector<EmbeddingRecord> records_;
};

// Strict ordering used by top_k: higher score first, then frame, then entity.
bool ranks_before(const Candidate& a, const Candidate& b) noexcept;

}  // namespace ravu
