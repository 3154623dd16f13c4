#include "ravu/graph_builder.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "ravu/parallel.hpp"
#include "ravu/payload.hpp"
#include "ravu/text.hpp"

namespace ravu {

namespace {

using nlohmann::json;

std::optional<std::int64_t> to_int(std::string_view s) {
    try {
        return parse_bare_integer(s);
    } catch (const MalformedResponse&) {
        return std::nullopt;
    }
}

// True when some sentence mentions two different entities of the frame.
bool co_mentioned(std::string_view description, const std::set<EntityId>& ids) {
    static const std::regex split(R"([.!?;\n]+)");
    const std::string d(description);
    for (std::sregex_token_iterator it(d.begin(), d.end(), split, -1), end; it != end; ++it) {
        std::set<EntityId> found;
        for (auto id : mentioned_ids(it->str())) {
            if (ids.contains(id)) found.insert(id);
        }
        if (found.size() >= 2) return true;
    }
    return false;
}

template <typename Fn>
auto with_node_context(EntityId e, FrameIndex f, Fn&& fn) {
    const auto where = " (entity " + std::to_string(e) + ", frame " + std::to_string(f) + ")";
    try {
        return fn();
    } catch (const Timeout& ex) {
        throw Timeout(ex.what() + where);
    } catch (const BlockedContent& ex) {
        throw BlockedContent(ex.what() + where);
    } catch (const MalformedResponse& ex) {
        throw MalformedResponse(ex.what() + where);
    }
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    }
    return v;
}

}  // namespace

FrameGraphResult build_frame_graph(const FrameRecord& frame,
                                   std::span<const EntityNode> nodes_in_frame, Backend& backend,
                                   const PromptLibrary& prompts, const BuildOptions& options,
                                   std::span<const FrameRecord> context) {
    std::set<EntityId> ids;
    for (const auto& n : nodes_in_frame) ids.insert(n.entity_id);
    const bool needs_edges = co_mentioned(frame.description, ids);
    if (ids.size() < 2) return {};

    const auto bundle = prompts.bundle(
        Role::frame_graph, payload::frame_graph(frame, nodes_in_frame, context));
    return generate_parsed(backend, bundle, options.max_retries, [&](const std::string& out) {
        FrameGraphResult r;
        std::set<std::tuple<EntityId, std::string, EntityId>> seen;
        std::size_t parsed = 0;
        std::istringstream in(out);
        std::string line;
        while (std::getline(in, line)) {
            line = text::trim(line);
            if (line.empty() || line == "NONE") continue;
            const auto parts = text::split(line, '|');
            if (parts.size() != 3) {
                ++r.dropped_lines;
                continue;
            }
            const auto s = to_int(parts[0]);
            const auto o = to_int(parts[2]);
            const auto rel = text::trim(parts[1]);
            if (!s || !o || rel.empty()) {
                ++r.dropped_lines;
                continue;
            }
            ++parsed;
            if (*s == *o || !ids.contains(*s) || !ids.contains(*o)) {
                ++r.dropped_lines;
                continue;
            }
            if (seen.emplace(*s, rel, *o).second) {
                r.edges.push_back({frame.frame_index, *s, rel, *o});
            }
        }
        if (parsed == 0 && needs_edges) {
            throw MalformedResponse("no relation lines for frame " +
                                    std::to_string(frame.frame_index));
        }
        return r;
    });
}

std::string describe_node(const EntityNode& node, std::span<const RelationEdge> edges,
                          Backend& backend, const PromptLibrary& prompts, int max_retries) {
    const auto bundle =
        prompts.bundle(Role::node_description, payload::node_description(node, edges));
    return generate_parsed(backend, bundle, max_retries, [](const std::string& out) {
        auto t = text::trim(out);
        if (t.empty()) throw MalformedResponse("empty node description");
        std::replace(t.begin(), t.end(), '\n', ' ');
        return t;
    });
}

std::vector<EmbeddingRecord> embed_graph(const SpatioTemporalGraph& graph, Backend& backend,
                                         int workers) {
    std::vector<const EntityNode*> nodes;
    for (const auto& n : graph.nodes) nodes.push_back(&n);
    std::sort(nodes.begin(), nodes.end(), [](auto* a, auto* b) {
        return std::tie(a->frame_index, a->entity_id) < std::tie(b->frame_index, b->entity_id);
    });
    std::vector<EmbeddingRecord> out(nodes.size());
    parallel_for(nodes.size(), workers, [&](std::size_t i) {
        const auto& n = *nodes[i];
        out[i] = with_node_context(n.entity_id, n.frame_index, [&] {
            const auto desc = n.description.value_or("");
            return EmbeddingRecord{n.entity_id, n.frame_index, desc, backend.embed(desc)};
        });
    });
    return out;
}

std::vector<EntityEvent> contiguous_runs(const SpatioTemporalGraph& graph, EntityId entity_id) {
    const auto timeline = entity_timeline(graph, entity_id);
    std::vector<EntityEvent> out;
    for (std::size_t i = 0; i < timeline.size(); ++i) {
        if (i == 0 || timeline[i].frame_index != timeline[i - 1].frame_index + 1) {
            auto summary = timeline[i].description.value_or("");
            if (summary.empty()) summary = "entity " + std::to_string(entity_id);
            out.push_back({entity_id, timeline[i].frame_index, timeline[i].frame_index, summary});
        } else {
            out.back().end_frame = timeline[i].frame_index;
        }
    }
    return out;
}

SegmentResult segment_events(const SpatioTemporalGraph& graph, EntityId entity_id,
                             Backend& backend, const PromptLibrary& prompts, int max_retries) {
    const auto timeline = entity_timeline(graph, entity_id);
    std::set<FrameIndex> present;
    for (const auto& n : timeline) present.insert(n.frame_index);

    const auto bundle =
        prompts.bundle(Role::event_segmentation, payload::event_segmentation(entity_id, timeline));
    auto parse = [&](const std::string& out) {
        std::vector<EntityEvent> events;
        std::istringstream in(out);
        std::string line;
        while (std::getline(in, line)) {
            line = text::trim(line);
            if (line.empty()) continue;
            const auto first = line.find('|');
            const auto second = first == std::string::npos ? first : line.find('|', first + 1);
            if (second == std::string::npos) {
                throw MalformedResponse("event line without start|end|summary: " + line);
            }
            const auto s = to_int(line.substr(0, first));
            const auto e = to_int(line.substr(first + 1, second - first - 1));
            const auto summary = text::trim(line.substr(second + 1));
            if (!s || !e || summary.empty()) throw MalformedResponse("bad event line: " + line);
            events.push_back({entity_id, *s, *e, summary});
        }
        std::set<FrameIndex> covered;
        for (std::size_t i = 0; i < events.size(); ++i) {
            const auto& ev = events[i];
            if (ev.start_frame > ev.end_frame) throw MalformedResponse("event span reversed");
            if (i > 0 && ev.start_frame <= events[i - 1].end_frame) {
                throw MalformedResponse("events overlap or are unsorted");
            }
            for (auto f = ev.start_frame; f <= ev.end_frame; ++f) {
                if (!present.contains(f)) {
                    throw MalformedResponse("event spans frame " + std::to_string(f) +
                                            " where the entity is absent");
                }
                covered.insert(f);
            }
        }
        if (covered != present) throw MalformedResponse("events do not cover every appearance");
        return events;
    };
    try {
        return {generate_parsed(backend, bundle, max_retries, parse), false};
    } catch (const MalformedResponse&) {
        return {contiguous_runs(graph, entity_id), true};
    }
}

SpatioTemporalGraph build_graph(const AssociationResult& associated, double fps,
                                Backend& backend, const PromptLibrary& prompts,
                                const BuildOptions& options, BuildStats* stats) {
    SpatioTemporalGraph g;
    g.fps = fps;
    g.frames = associated.frames;
    g.nodes = associated.nodes;
    canonicalize(g);

    std::map<FrameIndex, std::vector<EntityNode>> by_frame;
    for (const auto& n : g.nodes) by_frame[n.frame_index].push_back(n);

    const auto n_frames = g.frames.size();
    std::vector<FrameGraphResult> per_frame(n_frames);
    parallel_for(n_frames, options.workers, [&](std::size_t i) {
        const auto& frame = g.frames[i];
        const auto lo = static_cast<std::ptrdiff_t>(i) - options.context_frames;
        const auto hi = static_cast<std::ptrdiff_t>(i) + options.context_frames;
        std::vector<FrameRecord> context;
        for (auto c = std::max<std::ptrdiff_t>(0, lo);
             c <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n_frames) - 1, hi); ++c) {
            if (c != static_cast<std::ptrdiff_t>(i)) context.push_back(g.frames[c]);
        }
        const auto& nodes = by_frame[frame.frame_index];
        per_frame[i] = build_frame_graph(frame, nodes, backend, prompts, options, context);
    });
    std::size_t dropped = 0;
    for (auto& r : per_frame) {
        dropped += r.dropped_lines;
        for (auto& e : r.edges) g.edges.push_back(std::move(e));
    }
    canonicalize(g);

    std::vector<std::string> descriptions(g.nodes.size());
    parallel_for(g.nodes.size(), options.workers, [&](std::size_t i) {
        const auto& n = g.nodes[i];
        const auto edges = node_edges(g, n.entity_id, n.frame_index);
        descriptions[i] = with_node_context(n.entity_id, n.frame_index, [&] {
            return describe_node(n, edges, backend, prompts, options.max_retries);
        });
    });
    for (std::size_t i = 0; i < g.nodes.size(); ++i) g.nodes[i].description = descriptions[i];

    if (stats) {
        stats->frames = g.frames.size();
        stats->nodes = g.nodes.size();
        stats->edges = g.edges.size();
        stats->dropped_edge_lines = dropped;
    }
    return g;
}

void add_events(SpatioTemporalGraph& graph, Backend& backend, const PromptLibrary& prompts,
                const BuildOptions& options, BuildStats* stats) {
    const auto ids = entity_ids(graph);
    std::vector<SegmentResult> results(ids.size());
    parallel_for(ids.size(), options.workers, [&](std::size_t i) {
        results[i] = segment_events(graph, ids[i], backend, prompts, options.max_retries);
    });
    graph.events.clear();
    std::size_t fallbacks = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        fallbacks += results[i].fallback ? 1 : 0;
        count += results[i].events.size();
        graph.events[ids[i]] = std::move(results[i].events);
    }
    if (stats) {
        stats->events = count;
        stats->event_fallbacks = fallbacks;
    }
}

std::string edges_to_jsonl(const SpatioTemporalGraph& graph) {
    auto g = graph;
    canonicalize(g);
    std::string out;
    for (const auto& e : g.edges) out += to_json(e).dump() + "\n";
    return out;
}

std::string descriptions_to_jsonl(const SpatioTemporalGraph& graph) {
    auto g = graph;
    canonicalize(g);
    std::string out;
    for (const auto& n : g.nodes) {
        out += json{{"entity_id", n.entity_id},
                    {"frame_index", n.frame_index},
                    {"description", n.description.value_or("")}}
                   .dump() +
               "\n";
    }
    return out;
}

std::string encode_matrix(std::span<const EmbeddingRecord> records, std::size_t dimension) {
    std::string out;
    out.reserve(8 + records.size() * dimension * 4);
    put_u32(out, static_cast<std::uint32_t>(dimension));
    put_u32(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        if (r.vector.dimension() != dimension) {
            throw std::invalid_argument("embedding dimension mismatch");
        }
        for (float v : r.vector.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

std::vector<std::vector<float>> decode_matrix(std::string_view bytes, std::size_t* dimension) {
    if (bytes.size() < 8) throw ParseError("embeddings.bin", "truncated header");
    const auto dim = get_u32(bytes, 0);
    const auto count = get_u32(bytes, 4);
    const auto expected = 8 + static_cast<std::size_t>(dim) * count * 4;
    if (bytes.size() != expected) {
        throw ParseError("embeddings.bin", "size " + std::to_string(bytes.size()) +
                                               " != expected " + std::to_string(expected));
    }
    std::vector<std::vector<float>> rows(count, std::vector<float>(dim));
    std::size_t at = 8;
    for (auto& row : rows) {
        for (auto& v : row) {
            v = std::bit_cast<float>(get_u32(bytes, at));
            at += 4;
        }
    }
    if (dimension) *dimension = dim;
    return rows;
}

void write_embeddings(const std::filesystem::path& dir, std::span<const EmbeddingRecord> records) {
    const std::size_t dim = records.empty() ? 0 : records.front().vector.dimension();
    write_file(dir / "embeddings.bin", encode_matrix(records, dim));
    std::string index;
    for (std::size_t i = 0; i < records.size(); ++i) {
        index += json{{"row", i},
                      {"entity_id", records[i].entity_id},
                      {"frame_index", records[i].frame_index},
                      {"description", records[i].description}}
                     .dump() +
                 "\n";
    }
    write_file(dir / "embeddings.index.jsonl", index);
}

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& dir) {
    const auto rows = decode_matrix(read_file(dir / "embeddings.bin"), nullptr);
    std::istringstream in(read_file(dir / "embeddings.index.jsonl"));
    std::vector<EmbeddingRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            const auto row = j.at("row").get<std::size_t>();
            if (row >= rows.size()) throw ParseError("row", "row out of range", line_no);
            out.push_back({j.at("entity_id").get<EntityId>(), j.at("frame_index").get<FrameIndex>(),
                           j.value("description", std::string()), EmbeddingVector{rows[row]}});
        } catch (const json::exception& e) {
            throw ParseError("embeddings.index.jsonl", e.what(), line_no);
        }
    }
    if (out.size() != rows.size()) {
        throw ParseError("embeddings.index.jsonl", "row count does not match embeddings.bin");
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace ravu
