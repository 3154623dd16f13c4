#include <algorithm>
#include <set>

#include "ravu/errors.hpp"
#include "ravu/graph_builder.hpp"
#include "ravu/reasoning.hpp"
#include "ravu/text.hpp"

namespace ravu {

namespace {

std::vector<FrameIndex> frames_in(const std::vector<EntityEvent>& events) {
    std::vector<FrameIndex> out;
    for (const auto& e : events) {
        for (auto f = e.start_frame; f <= e.end_frame; ++f) out.push_back(f);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<FrameIndex> all_frames(const SpatioTemporalGraph& graph) {
    std::vector<FrameIndex> out;
    out.reserve(graph.frames.size());
    for (const auto& f : graph.frames) out.push_back(f.frame_index);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t ceil_div(std::size_t a, std::size_t b) {
    return b == 0 ? 0 : (a + b - 1) / b;
}

// Indices of distinct in-range candidates, e.g. "3, 0, 7"; at most `top`.
std::vector<std::size_t> parse_selection(const std::string& out, std::size_t n, std::size_t top) {
    std::vector<std::size_t> picked;
    std::set<std::size_t> seen;
    for (const auto& part : text::split(out, ',')) {
        const auto v = parse_bare_integer(part);
        if (v < 0 || static_cast<std::size_t>(v) >= n) {
            throw MalformedResponse("event_select index out of range: " + std::to_string(v));
        }
        if (!seen.insert(static_cast<std::size_t>(v)).second) {
            throw MalformedResponse("event_select repeated index " + std::to_string(v));
        }
        picked.push_back(static_cast<std::size_t>(v));
    }
    if (picked.empty() || picked.size() > top) {
        throw MalformedResponse("event_select returned " + std::to_string(picked.size()) +
                                " indices");
    }
    return picked;
}

}  // namespace

std::vector<FrameIndex> uniform_sample(std::span<const FrameIndex> sorted, std::size_t budget) {
    const auto n = sorted.size();
    if (budget >= n) return {sorted.begin(), sorted.end()};
    if (budget == 0) return {};
    if (budget == 1) return {sorted[(n - 1) / 2]};
    std::vector<FrameIndex> out;
    out.reserve(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        out.push_back(sorted[ceil_div(i * (n - 1), budget - 1)]);
    }
    return out;
}

ReasoningContext::ReasoningContext(const SpatioTemporalGraph& graph, const EmbeddingIndex& index,
                                   Backend& backend, const PromptLibrary& prompts,
                                   ExecOptions options)
    : graph_(graph), index_(index), backend_(backend), prompts_(prompts), options_(options) {}

std::vector<EntityEvent> ReasoningContext::events_of(EntityId entity_id) const {
    if (auto it = graph_.events.find(entity_id); it != graph_.events.end() && !it->second.empty()) {
        return it->second;
    }
    return contiguous_runs(graph_, entity_id);
}

ReasoningContext::NodeResult ReasoningContext::localize_node(std::string_view query) const {
    const auto r = index_.localize(query, options_.rerank_k, backend_, prompts_,
                                   options_.max_retries);
    return {{r.candidate.entity_id, r.candidate.frame_index}, r.fallback};
}

ReasoningContext::NodeResult ReasoningContext::identify_node(std::string_view query) const {
    if (index_.empty()) throw EmptyIndex();
    // Earliest described node stands in for each entity.
    std::map<EntityId, const EmbeddingRecord*> first;
    for (const auto& r : index_.records()) {
        auto& slot = first[r.entity_id];
        if (!slot || r.frame_index < slot->frame_index) slot = &r;
    }
    std::vector<const EmbeddingRecord*> reps;
    std::vector<std::string> texts;
    for (const auto& [id, rec] : first) {
        reps.push_back(rec);
        texts.push_back(rec->description);
    }
    if (reps.size() == 1) return {{reps[0]->entity_id, reps[0]->frame_index}, false};

    const auto bundle = prompts_.bundle(Role::rerank, payload::rerank(query, texts));
    try {
        const auto idx =
            generate_parsed(backend_, bundle, options_.max_retries, [&](const std::string& out) {
                const auto v = parse_bare_integer(out);
                if (v < 0 || v >= static_cast<std::int64_t>(reps.size())) {
                    throw MalformedResponse("identify index out of range: " + std::to_string(v));
                }
                return static_cast<std::size_t>(v);
            });
        return {{reps[idx]->entity_id, reps[idx]->frame_index}, false};
    } catch (const MalformedResponse&) {
        const auto best = index_.top_k(backend_.embed(query), 1).front();
        const auto* rep = first.at(best.entity_id);
        return {{rep->entity_id, rep->frame_index}, true};
    }
}

ReasoningContext::TimeResult ReasoningContext::analyze_events(std::string_view query,
                                                              const NodeRef& node) const {
    const auto events = events_of(node.entity_id);
    if (events.empty()) throw NotFound("entity " + std::to_string(node.entity_id) + " has no nodes");
    const auto first = events.front().start_frame;
    const auto last = events.back().end_frame;
    const auto bundle = prompts_.bundle(
        Role::event_analysis,
        payload::event_analysis(query, node.entity_id, events, first, last));
    try {
        const auto v = generate_parsed(backend_, bundle, options_.max_retries,
                                       [](const std::string& out) { return parse_bare_integer(out); });
        if (v < first) return {{first}, {"clamped"}};
        if (v > last) return {{last}, {"clamped"}};
        return {{v}, {}};
    } catch (const MalformedResponse&) {
        for (const auto& e : events) {
            if (e.contains(node.frame_index)) return {{e.start_frame}, {"analysis-fallback"}};
        }
        return {{std::clamp(node.frame_index, first, last)}, {"analysis-fallback"}};
    }
}

FrameSet ReasoningContext::sample_entity_events(const NodeRef& node,
                                                std::optional<FrameIndex> start,
                                                const EventSelector& selector,
                                                std::size_t quota) const {
    const auto events = events_of(node.entity_id);
    const auto t = start.value_or(node.frame_index);
    std::vector<EntityEvent> chosen;

    // Events wholly before / after t, nearest last / first.
    std::vector<EntityEvent> before, after;
    std::optional<std::size_t> containing;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].contains(t)) containing = i;
        if (events[i].end_frame < t && !events[i].contains(t)) before.push_back(events[i]);
        if (events[i].start_frame > t) after.push_back(events[i]);
    }
    switch (selector.kind) {
        case EventSelector::Kind::previous: {
            const auto n = std::min(selector.count, before.size());
            chosen.assign(before.end() - static_cast<std::ptrdiff_t>(n), before.end());
            break;
        }
        case EventSelector::Kind::next: {
            const auto n = std::min(selector.count, after.size());
            chosen.assign(after.begin(), after.begin() + static_cast<std::ptrdiff_t>(n));
            break;
        }
        case EventSelector::Kind::current:
            if (containing) {
                chosen.push_back(events[*containing]);
            } else if (!events.empty()) {
                // t falls outside the entity's events: nearest one by frame distance.
                auto dist = [&](const EntityEvent& e) {
                    return t < e.start_frame ? e.start_frame - t : t - e.end_frame;
                };
                chosen.push_back(*std::min_element(
                    events.begin(), events.end(),
                    [&](const EntityEvent& a, const EntityEvent& b) { return dist(a) < dist(b); }));
            }
            break;
        case EventSelector::Kind::all: chosen = events; break;
    }
    const auto frames = frames_in(chosen);
    return {uniform_sample(frames, quota)};
}

Segment ReasoningContext::extract_temporal_part(std::string_view part_in,
                                                std::size_t quota) const {
    const auto frames = all_frames(graph_);
    if (frames.empty()) throw NotFound("video has no frames");
    const auto part = text::to_lower(part_in);
    const auto n = frames.size();
    std::size_t lo = 0, hi = n - 1;
    if (n >= 3) {
        const auto third = n / 3;
        if (part == "beginning") {
            hi = third - 1;
        } else if (part == "middle") {
            lo = third;
            hi = 2 * third - 1;
        } else if (part == "end") {
            lo = 2 * third;
        } else {
            throw std::invalid_argument("unknown temporal part '" + part + "'");
        }
    }
    const std::span<const FrameIndex> seg(frames.data() + lo, hi - lo + 1);
    return {frames[lo], frames[hi], {uniform_sample(seg, quota)}};
}

CountValue ReasoningContext::count_nodes(std::string_view node_query,
                                         std::optional<std::string_view> event_condition) const {
    std::set<EntityId> matched;
    for (const auto& n : graph_.nodes) {
        if (matched.contains(n.entity_id)) continue;
        const auto& text = n.description ? *n.description : n.attribute(kAppearance);
        if (text::contains_all_content_words(node_query, text)) matched.insert(n.entity_id);
    }
    if (event_condition && !text::content_words(*event_condition).empty()) {
        std::erase_if(matched, [&](EntityId id) {
            const auto events = events_of(id);
            return std::none_of(events.begin(), events.end(), [&](const EntityEvent& e) {
                return text::contains_all_content_words(*event_condition, e.summary);
            });
        });
    }
    return {static_cast<std::int64_t>(matched.size())};
}

FrameSet ReasoningContext::get_global_context(std::size_t quota) const {
    return {uniform_sample(all_frames(graph_), quota)};
}

ExecutionResult execute(const ReasoningPlan& plan, const ReasoningContext& context) {
    const auto budget = context.options().budget;
    ExecutionResult result;
    std::set<FrameIndex> pool;

    std::size_t frame_steps_left = 0;
    for (const auto& s : plan.steps) frame_steps_left += produces_frames(s.function) ? 1 : 0;

    auto add = [&](const std::vector<FrameIndex>& frames) { pool.insert(frames.begin(), frames.end()); };

    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& step = plan.steps[i];
        StepOutcome outcome{i + 1, step.function, std::nullopt, std::nullopt, {}};
        std::size_t quota = 0;
        if (produces_frames(step.function)) {
            const auto remaining = budget > pool.size() ? budget - pool.size() : 0;
            quota = std::max<std::size_t>(1, ceil_div(remaining, frame_steps_left));
            --frame_steps_left;
        }

        auto text_arg = [&](const std::string& name) -> std::optional<std::string> {
            auto it = step.args.find(name);
            if (it == step.args.end()) return std::nullopt;
            return std::get<std::string>(it->second);
        };
        auto ref_value = [&](const std::string& name) -> std::optional<StepValue> {
            auto it = step.args.find(name);
            if (it == step.args.end()) return std::nullopt;
            if (const auto* r = std::get_if<StepRef>(&it->second)) {
                const auto& dep = result.steps.at(r->step - 1);
                if (!dep.value) {
                    throw Error("depends on failed step $" + std::to_string(r->step));
                }
                return dep.value;
            }
            return TimeIndex{std::get<std::int64_t>(it->second)};
        };
        auto node_arg = [&](const std::string& name) {
            const auto v = ref_value(name);
            if (!v || !std::holds_alternative<NodeRef>(*v)) throw Error("'" + name + "' is not a node");
            return std::get<NodeRef>(*v);
        };

        try {
            switch (step.function) {
                case Function::localize_node:
                case Function::identify_node: {
                    const auto q = *text_arg("query");
                    const auto r = step.function == Function::localize_node
                                       ? context.localize_node(q)
                                       : context.identify_node(q);
                    if (r.fallback) outcome.flags.push_back("rerank-fallback");
                    outcome.value = r.node;
                    add({r.node.frame_index});
                    break;
                }
                case Function::analyze_events: {
                    const auto r = context.analyze_events(*text_arg("query"), node_arg("node"));
                    outcome.flags = r.flags;
                    outcome.value = r.time;
                    break;
                }
                case Function::sample_entity_events: {
                    const auto node = node_arg("node");
                    std::optional<FrameIndex> start;
                    if (const auto v = ref_value("sample_start_time")) {
                        if (!std::holds_alternative<TimeIndex>(*v)) {
                            throw Error("'sample_start_time' is not a time");
                        }
                        start = std::get<TimeIndex>(*v).frame;
                    }
                    const auto selector = parse_event_selector(*text_arg("events_to_sample"));
                    if (!selector) throw Error("bad events_to_sample");
                    auto fs = context.sample_entity_events(node, start, *selector, quota);
                    add(fs.frames);
                    outcome.value = std::move(fs);
                    break;
                }
                case Function::extract_temporal_part: {
                    auto seg = context.extract_temporal_part(*text_arg("target_part"), quota);
                    add(seg.sampled.frames);
                    outcome.value = std::move(seg);
                    break;
                }
                case Function::count_nodes: {
                    const auto cond = text_arg("event_condition");
                    const auto c = context.count_nodes(
                        *text_arg("node_query"),
                        cond ? std::optional<std::string_view>(*cond) : std::nullopt);
                    result.notes.push_back("count = " + std::to_string(c.count));
                    outcome.value = c;
                    break;
                }
                case Function::get_global_context: {
                    auto fs = context.get_global_context(quota);
                    add(fs.frames);
                    outcome.value = std::move(fs);
                    break;
                }
            }
        } catch (const BlockedContent&) {
            throw;
        } catch (const std::exception& e) {
            outcome.value.reset();
            outcome.error = e.what();
        }
        result.steps.push_back(std::move(outcome));
    }

    std::vector<FrameIndex> frames(pool.begin(), pool.end());
    if (frames.empty()) {
        result.global_fallback = true;
        frames = context.get_global_context(budget).frames;
    }
    result.frames = uniform_sample(frames, budget);
    return result;
}

HierarchicalResult hierarchical_retrieve(std::string_view question,
                                         const ReasoningContext& context, std::size_t per_event,
                                         std::size_t top) {
    const auto& index = context.index();
    if (index.empty()) throw EmptyIndex();
    if (per_event == 0 || top == 0) throw std::invalid_argument("per_event and top must be >= 1");
    const auto query = context.backend().embed(question);

    std::vector<Candidate> pool;
    for (const auto id : entity_ids(context.graph())) {
        for (const auto& event : context.events_of(id)) {
            std::vector<Candidate> in_event;
            for (const auto& r : index.records()) {
                if (r.entity_id == id && event.contains(r.frame_index)) {
                    in_event.push_back({r.entity_id, r.frame_index, cosine(query, r.vector),
                                        r.description});
                }
            }
            std::sort(in_event.begin(), in_event.end(), ranks_before);
            in_event.resize(std::min(in_event.size(), per_event));
            pool.insert(pool.end(), in_event.begin(), in_event.end());
        }
    }
    std::sort(pool.begin(), pool.end(), ranks_before);

    HierarchicalResult out;
    out.pool_size = pool.size();
    if (pool.size() <= top) {
        out.selected = pool;
    } else {
        std::vector<std::string> texts;
        for (const auto& c : pool) texts.push_back(c.description);
        const auto bundle = context.prompts().bundle(Role::event_select,
                                                     payload::event_select(question, texts, top));
        try {
            const auto picked =
                generate_parsed(context.backend(), bundle, context.options().max_retries,
                                [&](const std::string& s) { return parse_selection(s, pool.size(), top); });
            for (auto i : picked) out.selected.push_back(pool[i]);
        } catch (const MalformedResponse&) {
            out.fallback = true;
            out.selected.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(top));
        }
    }
    std::set<FrameIndex> frames;
    for (const auto& c : out.selected) frames.insert(c.frame_index);
    out.frames.assign(frames.begin(), frames.end());
    return out;
}

}  // namespace ravu
