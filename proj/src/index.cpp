#include "ravu/index.hpp"

#include <algorithm>
#include <numeric>

#include "ravu/payload.hpp"

namespace ravu {

bool ranks_before(const Candidate& a, const Candidate& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    if (a.frame_index != b.frame_index) return a.frame_index < b.frame_index;
    return a.entity_id < b.entity_id;
}

EmbeddingIndex::EmbeddingIndex(std::vector<EmbeddingRecord> records)
    : records_(std::move(records)) {}

std::vector<double> EmbeddingIndex::scores(const EmbeddingVector& query) const {
    std::vector<double> out(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        out[i] = cosine(query, records_[i].vector);
    }
    return out;
}

std::vector<Candidate> EmbeddingIndex::top_k(const EmbeddingVector& query, std::size_t k) const {
    if (records_.empty()) throw EmptyIndex();
    if (k == 0) throw std::invalid_argument("top_k needs k >= 1");
    const auto s = scores(query);
    std::vector<std::size_t> rows(records_.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    auto key = [&](std::size_t i) {
        return Candidate{records_[i].entity_id, records_[i].frame_index, s[i], {}};
    };
    const auto n = std::min(k, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n), rows.end(),
                      [&](std::size_t a, std::size_t b) { return ranks_before(key(a), key(b)); });
    std::vector<Candidate> all;
    all.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto c = key(rows[r]);
        c.description = records_[rows[r]].description;
        all.push_back(std::move(c));
    }
    return all;
}

LocalizeResult EmbeddingIndex::localize(std::string_view grounding_phrase, std::size_t k,
                                        Backend& backend, const PromptLibrary& prompts,
                                        int max_retries) const {
    if (records_.empty()) throw EmptyIndex();
    if (grounding_phrase.empty()) throw std::invalid_argument("empty grounding phrase");
    const auto candidates = top_k(backend.embed(grounding_phrase), k);
    if (candidates.size() == 1) return {candidates.front(), 0, false};

    std::vector<std::string> texts;
    for (const auto& c : candidates) texts.push_back(c.description);
    const auto bundle = prompts.bundle(Role::rerank, payload::rerank(grounding_phrase, texts));
    try {
        const auto idx = generate_parsed(backend, bundle, max_retries, [&](const std::string& out) {
            const auto v = parse_bare_integer(out);
            if (v < 0 || v >= static_cast<std::int64_t>(candidates.size())) {
                throw MalformedResponse("rerank index out of range: " + std::to_string(v));
            }
            return static_cast<std::size_t>(v);
        });
        return {candidates[idx], idx, false};
    } catch (const MalformedResponse&) {
        return {candidates.front(), 0, true};
    }
}

const EmbeddingRecord* EmbeddingIndex::find(EntityId entity_id, FrameIndex frame_index) const {
    auto it = std::find_if(records_.begin(), records_.end(), [&](const EmbeddingRecord& r) {
        return r.entity_id == entity_id && r.frame_index == frame_index;
    });
    return it == records_.end() ? nullptr : &*it;
}

}  // namespace ravu
