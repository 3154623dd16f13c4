#include "ravu/graph_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "ravu/errors.hpp"

namespace ravu {

namespace {

using nlohmann::json;

const json& require(const json& j, std::string_view key, std::string_view context) {
    if (!j.is_object()) throw ParseError(std::string(context), "expected an object");
    auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(std::string(key), "missing key" +
                                               (context.empty() ? std::string()
                                                                : " in " + std::string(context)));
    }
    return *it;
}

std::int64_t require_int(const json& j, std::string_view key, std::string_view context) {
    const auto& v = require(j, key, context);
    if (!v.is_number_integer()) throw ParseError(std::string(key), "expected an integer");
    return v.get<std::int64_t>();
}

std::string require_string(const json& j, std::string_view key, std::string_view context) {
    const auto& v = require(j, key, context);
    if (!v.is_string()) throw ParseError(std::string(key), "expected a string");
    return v.get<std::string>();
}

double require_number(const json& j, std::string_view key, std::string_view context) {
    const auto& v = require(j, key, context);
    if (!v.is_number()) throw ParseError(std::string(key), "expected a number");
    return v.get<double>();
}

std::string node_locator(EntityId e, FrameIndex f) {
    return "node(entity=" + std::to_string(e) + ", frame=" + std::to_string(f) + ")";
}

std::string edge_locator(const RelationEdge& e) {
    return "edge(frame=" + std::to_string(e.frame_index) + ", " + std::to_string(e.subject_id) +
           " " + e.relation + " " + std::to_string(e.object_id) + ")";
}

std::string event_locator(const EntityEvent& e) {
    return "event(entity=" + std::to_string(e.entity_id) + ", " + std::to_string(e.start_frame) +
           ".." + std::to_string(e.end_frame) + ")";
}

auto node_key(const EntityNode& n) { return std::tuple(n.frame_index, n.entity_id); }
auto edge_key(const RelationEdge& e) {
    return std::tie(e.frame_index, e.subject_id, e.object_id, e.relation);
}

}  // namespace

const std::string& EntityNode::attribute(std::string_view key) const {
    static const std::string empty;
    auto it = attributes.find(std::string(key));
    return it == attributes.end() ? empty : it->second;
}

ValidationReport validate(const SpatioTemporalGraph& graph) {
    ValidationReport report;
    auto add = [&](std::string rule, std::string element) {
        report.push_back({std::move(rule), std::move(element)});
    };

    if (!(graph.fps > 0.0)) add("fps", "fps=" + std::to_string(graph.fps));

    for (std::size_t i = 0; i < graph.frames.size(); ++i) {
        const auto& f = graph.frames[i];
        if (f.frame_index != static_cast<FrameIndex>(i)) {
            add("frame-index", "frame at position " + std::to_string(i) + " has index " +
                                   std::to_string(f.frame_index));
        }
        if (i > 0 && !(f.timestamp_s > graph.frames[i - 1].timestamp_s)) {
            add("timestamp-order", "frame " + std::to_string(f.frame_index));
        }
    }
    const auto n_frames = static_cast<FrameIndex>(graph.frames.size());

    std::set<std::pair<EntityId, FrameIndex>> present;
    for (const auto& n : graph.nodes) {
        const auto loc = node_locator(n.entity_id, n.frame_index);
        if (!present.emplace(n.entity_id, n.frame_index).second) add("duplicate-node", loc);
        if (n.entity_id < 0) add("entity-id", loc);
        if (n.frame_index < 0 || n.frame_index >= n_frames) add("node-frame-range", loc);
        if (!n.box.valid()) add("bad-box", loc);
        for (auto key : {kAppearance, kAction, kBodyPose}) {
            if (!n.attributes.contains(std::string(key))) {
                add("missing-attribute", loc + " lacks " + std::string(key));
            }
        }
    }

    for (const auto& e : graph.edges) {
        if (e.subject_id == e.object_id) {
            add("self-edge", edge_locator(e));
            continue;
        }
        if (!present.contains({e.subject_id, e.frame_index}) ||
            !present.contains({e.object_id, e.frame_index})) {
            add("dangling-edge", edge_locator(e));
        }
    }

    for (const auto& [entity, events] : graph.events) {
        std::set<FrameIndex> frames;
        for (const auto& [e, f] : present) {
            if (e == entity) frames.insert(f);
        }
        if (frames.empty()) {
            add("event-entity-unknown", "entity " + std::to_string(entity));
            continue;
        }
        std::set<FrameIndex> covered;
        for (std::size_t i = 0; i < events.size(); ++i) {
            const auto& ev = events[i];
            const auto loc = event_locator(ev);
            if (ev.entity_id != entity) add("event-entity-mismatch", loc);
            if (ev.start_frame > ev.end_frame) {
                add("event-span", loc);
                continue;
            }
            if (i > 0) {
                const auto& prev = events[i - 1];
                if (ev.start_frame <= prev.end_frame) {
                    add(ev.start_frame < prev.start_frame ? "event-order" : "event-overlap", loc);
                }
            }
            bool gap = false;
            for (auto f = ev.start_frame; f <= ev.end_frame; ++f) {
                if (frames.contains(f)) {
                    covered.insert(f);
                } else {
                    gap = true;
                }
            }
            if (gap) add("event-gap", loc);
        }
        for (auto f : frames) {
            if (!covered.contains(f)) {
                add("event-coverage", node_locator(entity, f) + " outside every event");
            }
        }
    }
    return report;
}

void canonicalize(SpatioTemporalGraph& graph) {
    std::sort(graph.frames.begin(), graph.frames.end(),
              [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    std::sort(graph.nodes.begin(), graph.nodes.end(),
              [](const auto& a, const auto& b) { return node_key(a) < node_key(b); });
    std::sort(graph.edges.begin(), graph.edges.end(),
              [](const auto& a, const auto& b) { return edge_key(a) < edge_key(b); });
    for (auto& [_, evs] : graph.events) {
        std::sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) {
            return std::tie(a.start_frame, a.end_frame) < std::tie(b.start_frame, b.end_frame);
        });
    }
}

json to_json(const BoundingBox& box) {
    return json::array({box.x_min, box.y_min, box.x_max, box.y_max});
}

BoundingBox box_from_json(const json& j, std::string_view field) {
    if (!j.is_array() || j.size() != 4) {
        throw ParseError(std::string(field), "expected [x0, y0, x1, y1]");
    }
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(std::string(field), "coordinates must be numbers");
    }
    BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.valid()) {
        throw ParseError(std::string(field),
                         "invalid box (need 0 <= x0 < x1 and 0 <= y0 < y1)");
    }
    return b;
}

json to_json(const EntityNode& node) {
    json j;
    j["entity_id"] = node.entity_id;
    j["frame_index"] = node.frame_index;
    j["attributes"] = node.attributes;
    j["box"] = to_json(node.box);
    if (node.description) j["description"] = *node.description;
    return j;
}

EntityNode node_from_json(const json& j) {
    EntityNode n;
    n.entity_id = require_int(j, "entity_id", "node");
    n.frame_index = require_int(j, "frame_index", "node");
    const auto& attrs = require(j, "attributes", "node");
    if (!attrs.is_object()) throw ParseError("attributes", "expected an object");
    for (const auto& [k, v] : attrs.items()) {
        if (!v.is_string()) throw ParseError("attributes." + k, "expected a string");
        n.attributes[k] = v.get<std::string>();
    }
    n.box = box_from_json(require(j, "box", "node"));
    if (auto it = j.find("description"); it != j.end()) {
        if (!it->is_string()) throw ParseError("description", "expected a string");
        n.description = it->get<std::string>();
    }
    return n;
}

json to_json(const RelationEdge& edge) {
    return {{"frame_index", edge.frame_index},
            {"subject_id", edge.subject_id},
            {"relation", edge.relation},
            {"object_id", edge.object_id}};
}

RelationEdge edge_from_json(const json& j) {
    return {require_int(j, "frame_index", "edge"), require_int(j, "subject_id", "edge"),
            require_string(j, "relation", "edge"), require_int(j, "object_id", "edge")};
}

json to_json(const FrameRecord& frame) {
    return {{"frame_index", frame.frame_index},
            {"timestamp_s", frame.timestamp_s},
            {"description", frame.description},
            {"source_ref", frame.source_ref}};
}

FrameRecord frame_from_json(const json& j) {
    return {require_int(j, "frame_index", "frame"), require_number(j, "timestamp_s", "frame"),
            require_string(j, "description", "frame"), require_string(j, "source_ref", "frame")};
}

json to_json(const EntityEvent& event) {
    return {{"entity_id", event.entity_id},
            {"start_frame", event.start_frame},
            {"end_frame", event.end_frame},
            {"summary", event.summary}};
}

EntityEvent event_from_json(const json& j) {
    return {require_int(j, "entity_id", "event"), require_int(j, "start_frame", "event"),
            require_int(j, "end_frame", "event"), require_string(j, "summary", "event")};
}

json to_json(const SpatioTemporalGraph& input) {
    SpatioTemporalGraph graph = input;
    canonicalize(graph);
    json doc = json::object();
    doc["fps"] = graph.fps;
    doc["frames"] = json::array();
    for (const auto& f : graph.frames) doc["frames"].push_back(to_json(f));
    doc["nodes"] = json::array();
    for (const auto& n : graph.nodes) doc["nodes"].push_back(to_json(n));
    doc["edges"] = json::array();
    for (const auto& e : graph.edges) doc["edges"].push_back(to_json(e));
    // Flattened (entity, start) order; string-keyed maps would sort "10" before "2".
    doc["events"] = json::array();
    for (const auto& [_, evs] : graph.events) {
        for (const auto& ev : evs) doc["events"].push_back(to_json(ev));
    }
    return doc;
}

SpatioTemporalGraph graph_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("document", "expected a JSON object");
    SpatioTemporalGraph g;
    auto array_of = [&](std::string_view key) -> const json& {
        const auto& v = require(doc, key, "");
        if (!v.is_array()) throw ParseError(std::string(key), "expected an array");
        return v;
    };
    const auto& frames = array_of("frames");
    const auto& nodes = array_of("nodes");
    const auto& edges = array_of("edges");
    const auto& events = array_of("events");
    g.fps = require_number(doc, "fps", "");

    auto indexed = [](std::string_view what, std::size_t i, auto&& fn) {
        try {
            return fn();
        } catch (const ParseError& e) {
            throw ParseError(std::string(what) + "[" + std::to_string(i) + "]." + e.field(),
                             e.reason());
        }
    };
    for (std::size_t i = 0; i < frames.size(); ++i) {
        g.frames.push_back(indexed("frames", i, [&] { return frame_from_json(frames[i]); }));
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        g.nodes.push_back(indexed("nodes", i, [&] { return node_from_json(nodes[i]); }));
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        g.edges.push_back(indexed("edges", i, [&] { return edge_from_json(edges[i]); }));
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto ev = indexed("events", i, [&] { return event_from_json(events[i]); });
        g.events[ev.entity_id].push_back(std::move(ev));
    }
    canonicalize(g);
    return g;
}

std::string serialize(const SpatioTemporalGraph& graph) {
    return to_json(graph).dump(1) + "\n";
}

SpatioTemporalGraph deserialize(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError("document", e.what());
    }
    return graph_from_json(doc);
}

std::vector<EntityNode> entity_timeline(const SpatioTemporalGraph& graph, EntityId entity_id) {
    std::vector<EntityNode> out;
    std::copy_if(graph.nodes.begin(), graph.nodes.end(), std::back_inserter(out),
                 [&](const EntityNode& n) { return n.entity_id == entity_id; });
    if (out.empty()) throw NotFound("unknown entity " + std::to_string(entity_id));
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    return out;
}

std::vector<RelationEdge> node_edges(const SpatioTemporalGraph& graph, EntityId entity_id,
                                     FrameIndex frame_index) {
    if (!find_node(graph, entity_id, frame_index)) {
        throw NotFound("unknown " + node_locator(entity_id, frame_index));
    }
    std::vector<RelationEdge> out;
    std::copy_if(graph.edges.begin(), graph.edges.end(), std::back_inserter(out),
                 [&](const RelationEdge& e) {
                     return e.frame_index == frame_index &&
                            (e.subject_id == entity_id || e.object_id == entity_id);
                 });
    return out;
}

const EntityNode* find_node(const SpatioTemporalGraph& graph, EntityId entity_id,
                            FrameIndex frame_index) {
    auto it = std::find_if(graph.nodes.begin(), graph.nodes.end(), [&](const EntityNode& n) {
        return n.entity_id == entity_id && n.frame_index == frame_index;
    });
    return it == graph.nodes.end() ? nullptr : &*it;
}

std::vector<EntityId> entity_ids(const SpatioTemporalGraph& graph) {
    std::set<EntityId> ids;
    for (const auto& n : graph.nodes) ids.insert(n.entity_id);
    return {ids.begin(), ids.end()};
}

std::vector<FrameIndex> appearance_frames(const SpatioTemporalGraph& graph, EntityId entity_id) {
    std::vector<FrameIndex> out;
    for (const auto& n : graph.nodes) {
        if (n.entity_id == entity_id) out.push_back(n.frame_index);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace ravu
