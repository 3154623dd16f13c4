#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ravu/graph_model.hpp"

namespace ravu {

// One entity as described by the per-frame model, before ID association.
struct ObservedEntity {
    std::int64_t local_id = 0;
    Attributes attributes;
    BoundingBox box;
};

struct FrameObservation {
    FrameIndex frame_index = 0;
    std::string description;  // mentions entities as [E<local_id>]
    std::string source_ref;
    std::vector<ObservedEntity> entities;
};

struct Tracklet {
    EntityId track_id = 0;
    std::map<FrameIndex, BoundingBox> boxes;
};

// observations.jsonl: one frame object per non-blank line. Frame indices
// must be unique and dense once sorted.
std::vector<FrameObservation> parse_observations(std::string_view document);

// tracklets.json: {"tracks": [{"track_id": k, "boxes": {"<frame>": [x0,y0,x1,y1]}}]}
std::vector<Tracklet> parse_tracklets(std::string_view document);

std::string observations_to_jsonl(const std::vector<FrameObservation>& observations);
std::string tracklets_to_json(const std::vector<Tracklet>& tracklets);

// Intersection-over-union in [0, 1]; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

struct AssociationResult {
    std::vector<EntityNode> nodes;    // canonical (frame, entity) order
    std::vector<FrameRecord> frames;  // descriptions rewritten to consistent IDs
    // frame_index -> (local_id -> entity_id)
    std::map<FrameIndex, std::map<std::int64_t, EntityId>> id_map;
};

inline constexpr double kDefaultMinIou = 0.1;

// Assigns each observed entity the tracklet with maximal IoU in its frame.
// Pairs are taken greedily by descending IoU (ties: lower track_id, then
// lower local_id) so each tracklet claims at most one entity per frame.
// Entities left without an overlapping pair at IoU >= min_iou get fresh singleton IDs
// above every track_id, allocated in (frame, local_id) order.
AssociationResult associate(const std::vector<FrameObservation>& observations,
                            const std::vector<Tracklet>& tracklets,
                            double min_iou = kDefaultMinIou, double fps = 1.0);

// Replaces every [E<local>] mention through `mapping`; unknown mentions
// are left untouched.
std::string rewrite_mentions(std::string_view description,
                             const std::map<std::int64_t, EntityId>& mapping);

// IDs mentioned as [E<id>] in order of appearance (duplicates kept).
std::vector<std::int64_t> mentioned_ids(std::string_view text);

}  // namespace ravu
