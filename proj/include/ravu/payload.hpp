#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ravu/graph_model.hpp"

// JSON user payloads, one builder per role. Callers build them here and
// the mock provider reads the same keys back.
namespace ravu::payload {

// {"frame_index", "description", "entities": [{"entity_id", "attributes"}],
//  "context": [{"frame_index", "description"}]}
std::string frame_graph(const FrameRecord& frame, std::span<const EntityNode> nodes,
                        std::span<const FrameRecord> context);

// {"entity_id", "frame_index", "attributes",
//  "relations": [{"subject_id", "relation", "object_id"}]}
std::string node_description(const EntityNode& node, std::span<const RelationEdge> edges);

// {"entity_id", "nodes": [{"frame_index", "description", "attributes"}]}
std::string event_segmentation(EntityId entity_id, std::span<const EntityNode> timeline);

// {"grounding", "candidates": [text...]}
std::string rerank(std::string_view grounding, std::span<const std::string> candidates);

// {"query", "entity_id", "first_frame", "last_frame",
//  "events": [{"start_frame", "end_frame", "summary"}]}
std::string event_analysis(std::string_view query, EntityId entity_id,
                           std::span<const EntityEvent> events, FrameIndex first_frame,
                           FrameIndex last_frame);

struct BreakdownExample {
    std::string question;
    std::string analysis;
    std::string plan;
};

// {"question", "examples": [{"question", "analysis", "plan"}]}
std::string breakdown(std::string_view question, std::span<const BreakdownExample> examples);

// {"question", "options": [text...], "notes": [text...]}
std::string answer(std::string_view question, std::span<const std::string> options,
                   std::span<const std::string> notes);

// {"question", "top", "candidates": [text...]}
std::string event_select(std::string_view question, std::span<const std::string> candidates,
                         std::size_t top);

}  // namespace ravu::payload
