#pragma once

// Slow, obviously-correct reference implementations the tests compare
// the library against.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "ravu/index.hpp"
#include "ravu/ingestion.hpp"

namespace ravu::oracle {

// Number of cell centres (i + 0.5) * h, i in [0, cells), inside [lo, hi).
inline std::int64_t centres_inside(double lo, double hi, double h, std::int64_t cells) {
    std::int64_t n = 0;
    for (std::int64_t i = 0; i < cells; ++i) {
        const double c = (static_cast<double>(i) + 0.5) * h;
        if (c >= lo && c < hi) ++n;
    }
    return n;
}

// IoU by counting grid cells over [0, extent]^2. Boxes are axis-aligned so
// the count factors into one count per axis.
inline double raster_iou(const BoundingBox& a, const BoundingBox& b, double extent = 10.0,
                         double h = 2e-4) {
    const auto cells = static_cast<std::int64_t>(extent / h);
    const auto ax = centres_inside(a.x_min, a.x_max, h, cells);
    const auto ay = centres_inside(a.y_min, a.y_max, h, cells);
    const auto bx = centres_inside(b.x_min, b.x_max, h, cells);
    const auto by = centres_inside(b.y_min, b.y_max, h, cells);
    const auto ix = centres_inside(std::max(a.x_min, b.x_min), std::min(a.x_max, b.x_max), h, cells);
    const auto iy = centres_inside(std::max(a.y_min, b.y_min), std::min(a.y_max, b.y_max), h, cells);
    const double inter = static_cast<double>(ix) * static_cast<double>(iy);
    const double uni = static_cast<double>(ax * ay + bx * by) - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

// Key of a candidate pair: lower sorts first.
using PairKey = std::tuple<double, EntityId, std::int64_t>;  // (-iou, track, local)

// Among all maximal matchings of admissible pairs (iou >= min_iou), the one
// whose sorted key list is lexicographically smallest. Returns local -> track.
inline std::map<std::int64_t, EntityId> best_matching(
    const std::vector<ObservedEntity>& entities,
    const std::vector<std::pair<EntityId, BoundingBox>>& tracks, double min_iou) {
    std::vector<PairKey> pairs;
    for (const auto& e : entities) {
        for (const auto& [tid, box] : tracks) {
            const auto v = iou(e.box, box);
            if (v >= min_iou && v > 0.0) pairs.emplace_back(-v, tid, e.local_id);
        }
    }
    std::vector<PairKey> best;
    bool have = false;
    std::vector<PairKey> chosen;
    std::set<EntityId> used_t;
    std::set<std::int64_t> used_l;

    auto maximal = [&] {
        for (const auto& p : pairs) {
            if (!used_t.contains(std::get<1>(p)) && !used_l.contains(std::get<2>(p))) return false;
        }
        return true;
    };
    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == pairs.size()) {
            if (!maximal()) return;
            auto sorted = chosen;
            std::sort(sorted.begin(), sorted.end());
            if (!have || sorted < best) {
                best = sorted;
                have = true;
            }
            return;
        }
        self(self, i + 1);
        const auto& p = pairs[i];
        if (!used_t.contains(std::get<1>(p)) && !used_l.contains(std::get<2>(p))) {
            used_t.insert(std::get<1>(p));
            used_l.insert(std::get<2>(p));
            chosen.push_back(p);
            self(self, i + 1);
            chosen.pop_back();
            used_t.erase(std::get<1>(p));
            used_l.erase(std::get<2>(p));
        }
    };
    recurse(recurse, 0);
    std::map<std::int64_t, EntityId> out;
    for (const auto& p : best) out[std::get<2>(p)] = std::get<1>(p);
    return out;
}

// Full association by the oracle: per-frame best matching, then fresh IDs
// above the largest track ID in (frame, local_id) order.
inline std::map<FrameIndex, std::map<std::int64_t, EntityId>> associate_ids(
    const std::vector<FrameObservation>& frames, const std::vector<Tracklet>& tracklets,
    double min_iou) {
    EntityId next = 0;
    for (const auto& t : tracklets) next = std::max(next, t.track_id);
    ++next;
    auto sorted = frames;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    std::map<FrameIndex, std::map<std::int64_t, EntityId>> out;
    for (const auto& f : sorted) {
        std::vector<std::pair<EntityId, BoundingBox>> tracks;
        for (const auto& t : tracklets) {
            if (auto it = t.boxes.find(f.frame_index); it != t.boxes.end()) {
                tracks.emplace_back(t.track_id, it->second);
            }
        }
        auto m = best_matching(f.entities, tracks, min_iou);
        std::vector<std::int64_t> locals;
        for (const auto& e : f.entities) locals.push_back(e.local_id);
        std::sort(locals.begin(), locals.end());
        for (auto l : locals) {
            if (!m.contains(l)) m[l] = next++;
        }
        out[f.frame_index] = m;
    }
    return out;
}

// Every score computed, everything sorted, first k kept.
inline std::vector<Candidate> top_k(std::span<const EmbeddingRecord> records,
                                    const EmbeddingVector& query, std::size_t k) {
    std::vector<Candidate> all;
    for (const auto& r : records) {
        all.push_back({r.entity_id, r.frame_index, cosine(query, r.vector), r.description});
    }
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.score, a.frame_index, a.entity_id) <
               std::tie(a.score, b.frame_index, b.entity_id);
    });
    all.resize(std::min(all.size(), k));
    return all;
}

}  // namespace ravu::oracle
