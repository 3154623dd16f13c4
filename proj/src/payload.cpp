#include "ravu/payload.hpp"

#include <json.hpp>

namespace ravu::payload {

using nlohmann::json;

std::string frame_graph(const FrameRecord& frame, std::span<const EntityNode> nodes,
                        std::span<const FrameRecord> context) {
    json j;
    j["frame_index"] = frame.frame_index;
    j["description"] = frame.description;
    j["entities"] = json::array();
    for (const auto& n : nodes) {
        j["entities"].push_back({{"entity_id", n.entity_id}, {"attributes", n.attributes}});
    }
    j["context"] = json::array();
    for (const auto& c : context) {
        j["context"].push_back({{"frame_index", c.frame_index}, {"description", c.description}});
    }
    return j.dump(1);
}

std::string node_description(const EntityNode& node, std::span<const RelationEdge> edges) {
    json j;
    j["entity_id"] = node.entity_id;
    j["frame_index"] = node.frame_index;
    j["attributes"] = node.attributes;
    j["relations"] = json::array();
    for (const auto& e : edges) {
        j["relations"].push_back(
            {{"subject_id", e.subject_id}, {"relation", e.relation}, {"object_id", e.object_id}});
    }
    return j.dump(1);
}

std::string event_segmentation(EntityId entity_id, std::span<const EntityNode> timeline) {
    json j;
    j["entity_id"] = entity_id;
    j["nodes"] = json::array();
    for (const auto& n : timeline) {
        j["nodes"].push_back({{"frame_index", n.frame_index},
                              {"description", n.description.value_or("")},
                              {"attributes", n.attributes}});
    }
    return j.dump(1);
}

std::string rerank(std::string_view grounding, std::span<const std::string> candidates) {
    json j;
    j["grounding"] = grounding;
    j["candidates"] = json(std::vector<std::string>(candidates.begin(), candidates.end()));
    return j.dump(1);
}

std::string event_analysis(std::string_view query, EntityId entity_id,
                           std::span<const EntityEvent> events, FrameIndex first_frame,
                           FrameIndex last_frame) {
    json j;
    j["query"] = query;
    j["entity_id"] = entity_id;
    j["first_frame"] = first_frame;
    j["last_frame"] = last_frame;
    j["events"] = json::array();
    for (const auto& e : events) {
        j["events"].push_back({{"start_frame", e.start_frame},
                               {"end_frame", e.end_frame},
                               {"summary", e.summary}});
    }
    return j.dump(1);
}

std::string breakdown(std::string_view question, std::span<const BreakdownExample> examples) {
    json j;
    j["question"] = question;
    j["examples"] = json::array();
    for (const auto& e : examples) {
        j["examples"].push_back(
            {{"question", e.question}, {"analysis", e.analysis}, {"plan", e.plan}});
    }
    return j.dump(1);
}

std::string answer(std::string_view question, std::span<const std::string> options,
                   std::span<const std::string> notes) {
    json j;
    j["question"] = question;
    j["options"] = json(std::vector<std::string>(options.begin(), options.end()));
    j["notes"] = json(std::vector<std::string>(notes.begin(), notes.end()));
    return j.dump(1);
}

std::string event_select(std::string_view question, std::span<const std::string> candidates,
                         std::size_t top) {
    json j;
    j["question"] = question;
    j["top"] = top;
    j["candidates"] = json(std::vector<std::string>(candidates.begin(), candidates.end()));
    return j.dump(1);
}

}  // namespace ravu::payload
