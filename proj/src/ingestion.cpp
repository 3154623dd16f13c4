#include "ravu/ingestion.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "ravu/errors.hpp"
#include "ravu/text.hpp"

namespace ravu {

namespace {

using nlohmann::json;

const std::regex& mention_regex() {
    static const std::regex re(R"(\[E(\d+)\])");
    return re;
}

template <typename Fn>
auto at_line(int line, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ParseError(e.field(), e.reason(), line);
    } catch (const json::exception& e) {
        throw ParseError("json", e.what(), line);
    }
}

std::int64_t get_int(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(key, "missing key");
    if (!it->is_number_integer()) throw ParseError(key, "expected an integer");
    return it->get<std::int64_t>();
}

FrameObservation observation_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("frame", "expected an object");
    FrameObservation obs;
    obs.frame_index = get_int(j, "frame_index");
    if (obs.frame_index < 0) throw ParseError("frame_index", "must be >= 0");
    obs.description = j.value("description", std::string());
    obs.source_ref = j.value("source_ref", std::string());
    std::set<std::int64_t> seen;
    for (const auto& e : j.value("entities", json::array())) {
        ObservedEntity ent;
        ent.local_id = get_int(e, "local_id");
        if (!seen.insert(ent.local_id).second) {
            throw ParseError("local_id", "duplicate local_id " + std::to_string(ent.local_id));
        }
        if (auto a = e.find("attributes"); a != e.end()) {
            if (!a->is_object()) throw ParseError("attributes", "expected an object");
            for (const auto& [k, v] : a->items()) {
                if (!v.is_string()) throw ParseError("attributes." + k, "expected a string");
                ent.attributes[k] = v.get<std::string>();
            }
        }
        for (auto key : {kAppearance, kAction, kBodyPose}) {
            ent.attributes.try_emplace(std::string(key));
        }
        auto b = e.find("box");
        if (b == e.end()) throw ParseError("box", "missing key");
        ent.box = box_from_json(*b, "box");
        obs.entities.push_back(std::move(ent));
    }
    return obs;
}

}  // namespace

std::vector<FrameObservation> parse_observations(std::string_view document) {
    std::vector<FrameObservation> out;
    std::set<FrameIndex> seen;
    std::istringstream in{std::string(document)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto obs = at_line(line_no, [&] { return observation_from_json(json::parse(line)); });
        if (!seen.insert(obs.frame_index).second) {
            throw ParseError("frame_index",
                             "duplicate frame " + std::to_string(obs.frame_index), line_no);
        }
        out.push_back(std::move(obs));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].frame_index != static_cast<FrameIndex>(i)) {
            throw ParseError("frame_index", "frames not dense: missing frame " + std::to_string(i));
        }
    }
    return out;
}

std::vector<Tracklet> parse_tracklets(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError("tracklets", e.what());
    }
    auto tracks = doc.find("tracks");
    if (!doc.is_object() || tracks == doc.end() || !tracks->is_array()) {
        throw ParseError("tracks", "missing key");
    }
    std::vector<Tracklet> out;
    std::set<EntityId> ids;
    for (const auto& t : *tracks) {
        Tracklet tr;
        tr.track_id = get_int(t, "track_id");
        if (tr.track_id < 0) throw ParseError("track_id", "must be >= 0");
        if (!ids.insert(tr.track_id).second) {
            throw ParseError("track_id", "duplicate track " + std::to_string(tr.track_id));
        }
        auto boxes = t.find("boxes");
        if (boxes == t.end() || !boxes->is_object()) throw ParseError("boxes", "missing key");
        for (const auto& [k, v] : boxes->items()) {
            FrameIndex f = 0;
            try {
                std::size_t pos = 0;
                f = std::stoll(k, &pos);
                if (pos != k.size() || f < 0) throw std::invalid_argument(k);
            } catch (const std::exception&) {
                throw ParseError("boxes", "bad frame key '" + k + "'");
            }
            tr.boxes[f] = box_from_json(v, "box");
        }
        if (tr.boxes.empty()) {
            throw ParseError("boxes", "track " + std::to_string(tr.track_id) + " has no boxes");
        }
        out.push_back(std::move(tr));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.track_id < b.track_id; });
    return out;
}

std::string observations_to_jsonl(const std::vector<FrameObservation>& observations) {
    std::string out;
    for (const auto& obs : observations) {
        json j;
        j["frame_index"] = obs.frame_index;
        j["description"] = obs.description;
        if (!obs.source_ref.empty()) j["source_ref"] = obs.source_ref;
        j["entities"] = json::array();
        for (const auto& e : obs.entities) {
            j["entities"].push_back(
                {{"local_id", e.local_id}, {"attributes", e.attributes}, {"box", to_json(e.box)}});
        }
        out += j.dump() + "\n";
    }
    return out;
}

std::string tracklets_to_json(const std::vector<Tracklet>& tracklets) {
    json tracks = json::array();
    for (const auto& t : tracklets) {
        json boxes = json::object();
        for (const auto& [f, b] : t.boxes) boxes[std::to_string(f)] = to_json(b);
        tracks.push_back({{"track_id", t.track_id}, {"boxes", std::move(boxes)}});
    }
    return json{{"tracks", std::move(tracks)}}.dump() + "\n";
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

AssociationResult associate(const std::vector<FrameObservation>& observations,
                            const std::vector<Tracklet>& tracklets, double min_iou, double fps) {
    if (!(min_iou >= 0.0 && min_iou <= 1.0)) {
        throw std::invalid_argument("min_iou must lie in [0, 1]");
    }
    std::set<FrameIndex> frame_set;
    for (const auto& o : observations) frame_set.insert(o.frame_index);
    EntityId next_fresh = 0;
    for (const auto& t : tracklets) {
        for (const auto& [f, _] : t.boxes) {
            if (!frame_set.contains(f)) {
                throw ParseError("tracklets", "track " + std::to_string(t.track_id) +
                                                  " references unknown frame " + std::to_string(f));
            }
        }
        next_fresh = std::max(next_fresh, t.track_id + 1);
    }

    std::vector<const FrameObservation*> ordered;
    for (const auto& o : observations) ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(),
              [](auto* a, auto* b) { return a->frame_index < b->frame_index; });

    AssociationResult result;
    for (const auto* obs : ordered) {
        struct Pair {
            double score;
            EntityId track;
            std::int64_t local;
        };
        std::vector<Pair> pairs;
        for (const auto& t : tracklets) {
            auto box = t.boxes.find(obs->frame_index);
            if (box == t.boxes.end()) continue;
            for (const auto& e : obs->entities) {
                const double s = iou(box->second, e.box);
                if (s >= min_iou && s > 0.0) pairs.push_back({s, t.track_id, e.local_id});
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.score != b.score) return a.score > b.score;
            return std::tie(a.track, a.local) < std::tie(b.track, b.local);
        });

        auto& mapping = result.id_map[obs->frame_index];
        std::set<EntityId> used_tracks;
        for (const auto& p : pairs) {
            if (mapping.contains(p.local) || used_tracks.contains(p.track)) continue;
            mapping[p.local] = p.track;
            used_tracks.insert(p.track);
        }

        std::vector<std::int64_t> locals;
        for (const auto& e : obs->entities) locals.push_back(e.local_id);
        std::sort(locals.begin(), locals.end());
        for (auto l : locals) {
            if (!mapping.contains(l)) mapping[l] = next_fresh++;
        }

        for (const auto& e : obs->entities) {
            result.nodes.push_back(
                {mapping.at(e.local_id), obs->frame_index, e.attributes, e.box, std::nullopt});
        }
        result.frames.push_back({obs->frame_index, static_cast<double>(obs->frame_index) / fps,
                                 rewrite_mentions(obs->description, mapping), obs->source_ref});
    }
    std::sort(result.nodes.begin(), result.nodes.end(), [](const auto& a, const auto& b) {
        return std::tie(a.frame_index, a.entity_id) < std::tie(b.frame_index, b.entity_id);
    });
    return result;
}

std::string rewrite_mentions(std::string_view description,
                             const std::map<std::int64_t, EntityId>& mapping) {
    std::string out;
    std::string input(description);
    auto begin = std::sregex_iterator(input.begin(), input.end(), mention_regex());
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        out.append(input, last, static_cast<std::size_t>(m.position()) - last);
        std::int64_t local = 0;
        try {
            local = std::stoll(m[1].str());
        } catch (const std::out_of_range&) {
            local = -1;
        }
        if (auto f = mapping.find(local); f != mapping.end()) {
            out += "[E" + std::to_string(f->second) + "]";
        } else {
            out += m.str();
        }
        last = static_cast<std::size_t>(m.position() + m.length());
    }
    out.append(input, last);
    return out;
}

std::vector<std::int64_t> mentioned_ids(std::string_view text) {
    std::vector<std::int64_t> out;
    std::string input(text);
    for (auto it = std::sregex_iterator(input.begin(), input.end(), mention_regex());
         it != std::sregex_iterator(); ++it) {
        try {
            out.push_back(std::stoll((*it)[1].str()));
        } catch (const std::out_of_range&) {
        }
    }
    return out;
}

}  // namespace ravu
