#pragma once

// Hand-rolled random case generators for property tests.

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "ravu/graph_builder.hpp"
#include "ravu/ingestion.hpp"

namespace ravu::gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline std::size_t below(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Box inside [0, extent]^2 with both sides >= min_side.
inline BoundingBox box(Rng& rng, double extent = 10.0, double min_side = 1.0) {
    const double w = uniform(rng, min_side, extent);
    const double h = uniform(rng, min_side, extent);
    const double x = uniform(rng, 0.0, extent - w);
    const double y = uniform(rng, 0.0, extent - h);
    return {x, y, x + w, y + h};
}

// Box on a coarse integer grid, so exact IoU ties and exact 0.1 values occur.
inline BoundingBox grid_box(Rng& rng) {
    static const std::vector<BoundingBox> shapes = {
        {0, 0, 1, 1},  {0, 0, 10, 1}, {0, 0, 2, 2}, {1, 1, 3, 3},
        {0, 0, 4, 4},  {2, 2, 4, 4},  {0, 0, 5, 2}, {3, 0, 5, 2},
        {5, 5, 9, 9},  {6, 6, 9, 9},  {0, 0, 2, 1},
    };
    return shapes[below(rng, shapes.size())];
}

struct AssociationCase {
    std::vector<FrameObservation> observations;
    std::vector<Tracklet> tracklets;
};

// `frames` frames with up to 4 entities and 4 present tracks each. Track
// boxes are either near-copies of an entity box, grid boxes (ties, exact
// thresholds) or unrelated random boxes.
inline AssociationCase association_case(Rng& rng, std::size_t frames) {
    AssociationCase c;
    std::vector<Tracklet> tracks(6);
    for (std::size_t t = 0; t < tracks.size(); ++t) tracks[t].track_id = static_cast<EntityId>(t + 1) * 3;
    for (std::size_t f = 0; f < frames; ++f) {
        FrameObservation obs;
        obs.frame_index = static_cast<FrameIndex>(f);
        const auto n_ent = below(rng, 5);
        for (std::size_t i = 0; i < n_ent; ++i) {
            ObservedEntity e;
            e.local_id = static_cast<std::int64_t>(i + 1);
            e.attributes = {{"appearance", "x"}, {"action", "y"}, {"body_pose", "z"}};
            e.box = below(rng, 2) ? grid_box(rng) : box(rng);
            obs.entities.push_back(e);
        }
        const auto n_tr = below(rng, 5);
        std::vector<std::size_t> ids = {0, 1, 2, 3, 4, 5};
        std::shuffle(ids.begin(), ids.end(), rng);
        for (std::size_t i = 0; i < n_tr; ++i) {
            BoundingBox b;
            const auto mode = below(rng, 3);
            if (mode == 0 && !obs.entities.empty()) {
                b = obs.entities[below(rng, obs.entities.size())].box;
                const double d = uniform(rng, 0.0, 0.5);
                b.x_max += d;
            } else if (mode == 1) {
                b = grid_box(rng);
            } else {
                b = box(rng);
            }
            tracks[ids[i]].boxes[obs.frame_index] = b;
        }
        c.observations.push_back(std::move(obs));
    }
    for (auto& t : tracks) {
        if (!t.boxes.empty()) c.tracklets.push_back(std::move(t));
    }
    return c;
}

// Unit vector in `dim` dimensions.
inline std::vector<float> unit_vector(Rng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    double n = 0;
    for (auto& x : v) {
        x = static_cast<float>(uniform(rng, -1.0, 1.0));
        n += static_cast<double>(x) * x;
    }
    n = std::sqrt(n);
    for (auto& x : v) x = static_cast<float>(x / (n > 0 ? n : 1.0));
    return v;
}

// Index records (unique node keys, at most 2400) with duplicated vectors,
// so exact score ties occur, and frame indices shared across entities.
inline std::vector<EmbeddingRecord> index_records(Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<EmbeddingRecord> out;
    std::set<std::pair<EntityId, FrameIndex>> used;
    for (std::size_t i = 0; i < n; ++i) {
        EmbeddingRecord r;
        do {
            r.entity_id = static_cast<EntityId>(below(rng, 40));
            r.frame_index = static_cast<FrameIndex>(below(rng, 60));
        } while (!used.insert({r.entity_id, r.frame_index}).second);
        r.description = "node " + std::to_string(i);
        if (!out.empty() && below(rng, 4) == 0) {
            r.vector = out[below(rng, out.size())].vector;
        } else {
            r.vector.values = unit_vector(rng, dim);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ravu::gen
