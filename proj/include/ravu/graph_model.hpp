#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ravu {

using EntityId = std::int64_t;
using FrameIndex = std::int64_t;

// Attribute keys every entity node carries (values may be empty).
inline constexpr std::string_view kAppearance = "appearance";
inline constexpr std::string_view kAction = "action";
inline constexpr std::string_view kBodyPose = "body_pose";

using Attributes = std::map<std::string, std::string>;

// Axis-aligned box in frame pixel coordinates.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool valid() const noexcept {
        return x_min >= 0.0 && y_min >= 0.0 && x_min < x_max && y_min < y_max;
    }
    double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// One entity observed in one frame.
struct EntityNode {
    EntityId entity_id = 0;
    FrameIndex frame_index = 0;
    Attributes attributes;
    BoundingBox box;
    std::optional<std::string> description;

    const std::string& attribute(std::string_view key) const;

    friend bool operator==(const EntityNode&, const EntityNode&) = default;
};

// Within-frame relation: subject --relation--> object.
struct RelationEdge {
    FrameIndex frame_index = 0;
    EntityId subject_id = 0;
    std::string relation;
    EntityId object_id = 0;

    friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
};

struct FrameRecord {
    FrameIndex frame_index = 0;
    double timestamp_s = 0.0;
    std::string description;
    std::string source_ref;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

// Contiguous span [start_frame, end_frame] of one entity with a summary.
struct EntityEvent {
    EntityId entity_id = 0;
    FrameIndex start_frame = 0;
    FrameIndex end_frame = 0;
    std::string summary;

    bool contains(FrameIndex f) const noexcept { return f >= start_frame && f <= end_frame; }

    friend bool operator==(const EntityEvent&, const EntityEvent&) = default;
};

// Per-frame entity/relation graphs; nodes sharing an entity_id form the
// temporal links, so no link list is stored.
struct SpatioTemporalGraph {
    std::vector<FrameRecord> frames;
    std::vector<EntityNode> nodes;
    std::vector<RelationEdge> edges;
    std::map<EntityId, std::vector<EntityEvent>> events;
    double fps = 1.0;

    std::size_t frame_count() const noexcept { return frames.size(); }

    friend bool operator==(const SpatioTemporalGraph&, const SpatioTemporalGraph&) = default;
};

struct Violation {
    std::string rule;     // e.g. "dangling-edge", "event-overlap"
    std::string element;  // human-readable locator of the offending element

    friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate(const SpatioTemporalGraph& graph);

// Sorts frames, nodes, edges and events into canonical order in place.
void canonicalize(SpatioTemporalGraph& graph);

nlohmann::json to_json(const SpatioTemporalGraph& graph);
SpatioTemporalGraph graph_from_json(const nlohmann::json& doc);

// Canonical document: sorted keys, canonical element order, trailing newline.
std::string serialize(const SpatioTemporalGraph& graph);
SpatioTemporalGraph deserialize(std::string_view document);

// Element-level (de)serialization, shared with the line-delimited artifacts.
nlohmann::json to_json(const BoundingBox& box);
BoundingBox box_from_json(const nlohmann::json& j, std::string_view field = "box");
nlohmann::json to_json(const EntityNode& node);
EntityNode node_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RelationEdge& edge);
RelationEdge edge_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FrameRecord& frame);
FrameRecord frame_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EntityEvent& event);
EntityEvent event_from_json(const nlohmann::json& j);

// Nodes of one entity ordered by frame. Throws NotFound for unknown IDs.
std::vector<EntityNode> entity_timeline(const SpatioTemporalGraph& graph, EntityId entity_id);

// Edges of `frame_index` with the entity as subject or object.
// Throws NotFound when the node does not exist.
std::vector<RelationEdge> node_edges(const SpatioTemporalGraph& graph, EntityId entity_id,
                                     FrameIndex frame_index);

const EntityNode* find_node(const SpatioTemporalGraph& graph, EntityId entity_id,
                            FrameIndex frame_index);

// Distinct entity IDs in ascending order.
std::vector<EntityId> entity_ids(const SpatioTemporalGraph& graph);

// Frames where the entity appears, ascending.
std::vector<FrameIndex> appearance_frames(const SpatioTemporalGraph& graph, EntityId entity_id);

}  // namespace ravu
