#include "ravu/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "ravu/errors.hpp"
#include "ravu/parallel.hpp"
#include "ravu/text.hpp"

namespace ravu {

using nlohmann::json;

std::string_view to_string(Category c) {
    switch (c) {
        case Category::causal: return "causal";
        case Category::temporal: return "temporal";
        case Category::descriptive: return "descriptive";
        case Category::global: return "global";
    }
    return "descriptive";
}

Category category_from_string(std::string_view name) {
    for (auto c : {Category::causal, Category::temporal, Category::descriptive, Category::global}) {
        if (to_string(c) == name) return c;
    }
    throw ParseError("category", "unknown category '" + std::string(name) + "'");
}

AnswerMode answer_mode_from_string(std::string_view name) {
    if (name == "auto") return AnswerMode::automatic;
    if (name == "plan") return AnswerMode::plan;
    if (name == "global") return AnswerMode::global;
    throw ParseError("mode", "expected auto, plan or global, got '" + std::string(name) + "'");
}

ReportMode report_mode_from_string(std::string_view name) {
    if (name == "non-blocked" || name == "non_blocked") return ReportMode::non_blocked;
    if (name == "overall") return ReportMode::overall;
    throw ParseError("mode", "expected non-blocked or overall, got '" + std::string(name) + "'");
}

LocMethod loc_method_from_string(std::string_view name) {
    for (auto m : {LocMethod::rerank, LocMethod::text_embedding, LocMethod::raw_vector}) {
        if (to_string(m) == name) return m;
    }
    throw ParseError("method", "expected rerank, text_embedding or raw_vector, got '" +
                                   std::string(name) + "'");
}

std::string_view to_string(LocMethod m) {
    switch (m) {
        case LocMethod::rerank: return "rerank";
        case LocMethod::text_embedding: return "text_embedding";
        case LocMethod::raw_vector: return "raw_vector";
    }
    return "rerank";
}

// ---------------------------------------------------------------------------
// Dataset files

namespace {

template <typename Fn>
void for_each_line(std::string_view document, Fn&& fn) {
    std::istringstream in{std::string(document)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("json", e.what(), line_no);
        }
        try {
            fn(j, line_no);
        } catch (const ParseError& e) {
            throw ParseError(e.field(), e.reason(), line_no);
        } catch (const json::exception& e) {
            throw ParseError("json", e.what(), line_no);
        }
    }
}

template <typename T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(key, "missing");
    return j.at(key).get<T>();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::vector<McqItem> parse_mcq(std::string_view document) {
    std::vector<McqItem> out;
    for_each_line(document, [&](const json& j, int line_no) {
        McqItem item;
        item.video_id = required<std::string>(j, "video_id");
        item.item_id = j.value("item_id", item.video_id + "#" + std::to_string(line_no));
        item.question = required<std::string>(j, "question");
        item.options = required<std::vector<std::string>>(j, "options");
        const auto answer = required<std::int64_t>(j, "answer_index");
        if (answer < 0 || answer >= static_cast<std::int64_t>(item.options.size())) {
            throw ParseError("answer_index", "out of range for " +
                                                 std::to_string(item.options.size()) + " options");
        }
        item.answer_index = static_cast<std::size_t>(answer);
        item.category = category_from_string(required<std::string>(j, "category"));
        if (j.contains("subcategory")) item.subcategory = j.at("subcategory").get<std::string>();
        if (j.contains("gt_frames")) item.gt_frames = j.at("gt_frames").get<std::vector<FrameIndex>>();
        out.push_back(std::move(item));
    });
    return out;
}

std::string mcq_to_jsonl(const std::vector<McqItem>& items) {
    std::string out;
    for (const auto& item : items) {
        json j = {{"item_id", item.item_id},
                  {"video_id", item.video_id},
                  {"question", item.question},
                  {"options", item.options},
                  {"answer_index", item.answer_index},
                  {"category", to_string(item.category)}};
        if (item.subcategory) j["subcategory"] = *item.subcategory;
        if (!item.gt_frames.empty()) j["gt_frames"] = item.gt_frames;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<LocalizationAnnotation> parse_localization(std::string_view document) {
    std::vector<LocalizationAnnotation> out;
    for_each_line(document, [&](const json& j, int line_no) {
        LocalizationAnnotation a;
        a.video_id = required<std::string>(j, "video_id");
        a.item_id = j.value("item_id", a.video_id + "#" + std::to_string(line_no));
        a.question = required<std::string>(j, "question");
        if (j.contains("query")) a.query = j.at("query").get<std::string>();
        if (j.contains("category")) a.category = category_from_string(j.at("category").get<std::string>());
        a.gt_frames = required<std::vector<FrameIndex>>(j, "gt_frames");
        if (a.gt_frames.empty()) throw ParseError("gt_frames", "empty");
        if (j.contains("frame_vectors")) {
            for (const auto& [k, v] : j.at("frame_vectors").items()) {
                try {
                    a.frame_vectors[std::stoll(k)] = v.get<std::vector<float>>();
                } catch (const std::logic_error&) {
                    throw ParseError("frame_vectors", "bad frame key '" + k + "'");
                }
            }
        }
        if (j.contains("query_vector")) a.query_vector = j.at("query_vector").get<std::vector<float>>();
        out.push_back(std::move(a));
    });
    return out;
}

std::string localization_to_jsonl(const std::vector<LocalizationAnnotation>& items) {
    std::string out;
    for (const auto& a : items) {
        json j = {{"item_id", a.item_id},
                  {"video_id", a.video_id},
                  {"question", a.question},
                  {"category", to_string(a.category)},
                  {"gt_frames", a.gt_frames}};
        if (a.query) j["query"] = *a.query;
        if (!a.frame_vectors.empty()) {
            json fv = json::object();
            for (const auto& [f, v] : a.frame_vectors) fv[std::to_string(f)] = v;
            j["frame_vectors"] = fv;
        }
        if (!a.query_vector.empty()) j["query_vector"] = a.query_vector;
        out += j.dump() + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Memory

VideoMemory build_memory(const std::vector<FrameObservation>& observations,
                         const std::vector<Tracklet>& tracklets, Backend& backend,
                         const PromptLibrary& prompts, const Config& config, BuildStats* stats) {
    const BuildOptions options{config.max_retries, config.context_frames, config.workers};
    const auto associated = associate(observations, tracklets, config.min_iou, config.fps);
    auto graph = build_graph(associated, config.fps, backend, prompts, options, stats);
    add_events(graph, backend, prompts, options, stats);
    auto records = embed_graph(graph, backend, config.workers);
    return {std::move(graph), EmbeddingIndex(std::move(records))};
}

VideoMemory load_memory(const std::filesystem::path& dir) {
    const auto graph_path = dir / "graph.json";
    if (!std::filesystem::exists(graph_path)) throw NotFound(graph_path.string() + " not found");
    auto graph = deserialize(read_file(graph_path));
    auto records = read_embeddings(dir);
    return {std::move(graph), EmbeddingIndex(std::move(records))};
}

void save_memory(const std::filesystem::path& dir, const VideoMemory& memory) {
    std::filesystem::create_directories(dir);
    write_file(dir / "graph.json", serialize(memory.graph));
    write_file(dir / "edges.jsonl", edges_to_jsonl(memory.graph));
    write_file(dir / "descriptions.jsonl", descriptions_to_jsonl(memory.graph));
    std::vector<EmbeddingRecord> records(memory.index.records().begin(),
                                         memory.index.records().end());
    write_embeddings(dir, records);
}

// ---------------------------------------------------------------------------
// Question answering

Answer answer_question(const VideoMemory& memory, std::string_view question,
                       const std::vector<std::string>& options, std::optional<Category> category,
                       Backend& backend, const PromptLibrary& prompts,
                       const ExampleLibrary& examples, const AskOptions& ask) {
    const ReasoningContext context(memory.graph, memory.index, backend, prompts,
                                   ExecOptions{ask.budget, ask.rerank_k, ask.max_retries});
    Answer out;
    bool hierarchical = ask.mode == AnswerMode::global ||
                        (ask.mode == AnswerMode::automatic && category == Category::global);
    if (hierarchical) {
        out.plan.question = std::string(question);
        out.plan.analysis = "whole-video question; hierarchical retrieval over events";
        out.plan.steps.push_back({Function::get_global_context, {}});
    } else {
        auto b = breakdown(question, examples, backend, prompts, ask.max_retries);
        out.plan = std::move(b.plan);
        out.breakdown_fallback = b.fallback;
        hierarchical = ask.mode == AnswerMode::automatic && is_global_plan(out.plan);
    }

    if (hierarchical) {
        const auto r = hierarchical_retrieve(question, context, ask.per_event_candidates,
                                             ask.global_budget);
        out.frames = r.frames;
        if (out.frames.empty()) out.frames = context.get_global_context(ask.global_budget).frames;
    } else {
        auto r = execute(out.plan, context);
        out.frames = std::move(r.frames);
        out.notes = std::move(r.notes);
    }
    out.hierarchical = hierarchical;

    std::map<FrameIndex, const FrameRecord*> by_index;
    for (const auto& f : memory.graph.frames) by_index[f.frame_index] = &f;
    std::vector<FrameRef> refs;
    for (auto f : out.frames) {
        if (auto it = by_index.find(f); it != by_index.end()) {
            refs.push_back({f, it->second->source_ref, it->second->description});
        }
    }
    if (!options.empty()) {
        out.choice = answer(backend, prompts, std::move(refs), question, options, out.notes,
                            ask.max_retries);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

double AccuracyRow::non_blocked() const {
    const auto n = items - blocked - errored;
    return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

double AccuracyRow::overall() const {
    const auto n = items - errored;
    return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

double LocRow::accuracy() const {
    const auto n = items - skipped;
    return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

QaReport eval_qa(const std::vector<McqItem>& items, const MemoryStore& memories, Backend& backend,
                 const PromptLibrary& prompts, const ExampleLibrary& examples,
                 const AskOptions& options, int workers) {
    std::vector<ItemOutcome> outcomes(items.size());
    parallel_for(items.size(), workers, [&](std::size_t i) {
        const auto& item = items[i];
        auto& o = outcomes[i];
        o.item_id = item.item_id;
        o.category = item.category;
        o.subcategory = item.subcategory;
        auto mem = memories.find(item.video_id);
        if (mem == memories.end()) {
            o.error = "no memory for video '" + item.video_id + "'";
            return;
        }
        CountingBackend counter(backend);
        try {
            const auto a = answer_question(mem->second, item.question, item.options,
                                           item.category, counter, prompts, examples, options);
            o.choice = a.choice;
            o.correct = a.choice == item.answer_index;
            o.frames = a.frames;
            o.plan = render_plan(a.plan);
            o.hierarchical = a.hierarchical;
        } catch (const BlockedContent&) {
            o.blocked = true;
        } catch (const std::exception& e) {
            o.error = e.what();
        }
        o.prompt_tokens = counter.prompt_tokens();
    });
    std::stable_sort(outcomes.begin(), outcomes.end(),
                     [](const ItemOutcome& a, const ItemOutcome& b) { return a.item_id < b.item_id; });

    QaReport report;
    std::size_t answered = 0, frames = 0, counted = 0, tokens = 0;
    for (const auto& o : outcomes) {
        auto tally = [&](AccuracyRow& row) {
            ++row.items;
            row.correct += o.correct ? 1 : 0;
            row.blocked += o.blocked ? 1 : 0;
            row.errored += o.error ? 1 : 0;
        };
        tally(report.total);
        tally(report.by_category[std::string(to_string(o.category))]);
        if (o.subcategory) tally(report.by_category[*o.subcategory]);
        if (o.error) continue;
        ++counted;
        tokens += o.prompt_tokens;
        if (!o.blocked) {
            ++answered;
            frames += o.frames.size();
        }
    }
    report.mean_frames = answered ? static_cast<double>(frames) / static_cast<double>(answered) : 0.0;
    report.mean_prompt_tokens =
        counted ? static_cast<double>(tokens) / static_cast<double>(counted) : 0.0;
    report.outcomes = std::move(outcomes);
    return report;
}

std::string qa_report_csv(const QaReport& report, ReportMode mode) {
    std::string out = "category,metric,value\n";
    auto rows = [&](const std::string& name, const AccuracyRow& r) {
        const auto acc = mode == ReportMode::non_blocked ? r.non_blocked() : r.overall();
        out += name + ",items," + std::to_string(r.items) + "\n";
        out += name + ",correct," + std::to_string(r.correct) + "\n";
        out += name + ",blocked," + std::to_string(r.blocked) + "\n";
        out += name + ",errored," + std::to_string(r.errored) + "\n";
        out += name + ",accuracy," + fmt(acc) + "\n";
        out += name + ",accuracy_non_blocked," + fmt(r.non_blocked()) + "\n";
        out += name + ",accuracy_overall," + fmt(r.overall()) + "\n";
    };
    for (const auto& [name, row] : report.by_category) rows(name, row);
    rows("overall", report.total);
    out += "overall,mean_frames," + fmt(report.mean_frames) + "\n";
    out += "overall,mean_prompt_tokens," + fmt(report.mean_prompt_tokens) + "\n";
    return out;
}

json qa_report_json(const QaReport& report, ReportMode mode) {
    auto row = [&](const AccuracyRow& r) {
        return json{{"items", r.items},
                    {"correct", r.correct},
                    {"blocked", r.blocked},
                    {"errored", r.errored},
                    {"accuracy", mode == ReportMode::non_blocked ? r.non_blocked() : r.overall()},
                    {"accuracy_non_blocked", r.non_blocked()},
                    {"accuracy_overall", r.overall()}};
    };
    json cats = json::object();
    for (const auto& [name, r] : report.by_category) cats[name] = row(r);
    json items = json::array();
    for (const auto& o : report.outcomes) {
        json j = {{"item_id", o.item_id},
                  {"category", to_string(o.category)},
                  {"correct", o.correct},
                  {"blocked", o.blocked},
                  {"frames", o.frames},
                  {"hierarchical", o.hierarchical},
                  {"prompt_tokens", o.prompt_tokens},
                  {"plan", o.plan}};
        if (o.subcategory) j["subcategory"] = *o.subcategory;
        j["choice"] = o.choice ? json(*o.choice) : json(nullptr);
        j["error"] = o.error ? json(*o.error) : json(nullptr);
        items.push_back(std::move(j));
    }
    return {{"mode", mode == ReportMode::non_blocked ? "non-blocked" : "overall"},
            {"categories", cats},
            {"overall", row(report.total)},
            {"mean_frames", report.mean_frames},
            {"mean_prompt_tokens", report.mean_prompt_tokens},
            {"items", items}};
}

LocReport eval_localization(const std::vector<LocalizationAnnotation>& items,
                            const MemoryStore& memories, Backend& backend,
                            const PromptLibrary& prompts, LocMethod method, std::size_t rerank_k,
                            int max_retries) {
    LocReport report;
    report.method = method;
    std::vector<const LocalizationAnnotation*> sorted;
    for (const auto& a : items) sorted.push_back(&a);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](auto* a, auto* b) { return a->item_id < b->item_id; });

    for (const auto* a : sorted) {
        auto& row = report.by_category[std::string(to_string(a->category))];
        ++row.items;
        ++report.total.items;
        std::optional<FrameIndex> predicted;
        const auto query = a->query.value_or(a->question);
        auto mem = memories.find(a->video_id);
        if (method == LocMethod::raw_vector) {
            if (!a->frame_vectors.empty() && !a->query_vector.empty()) {
                double best = -2.0;
                for (const auto& [f, v] : a->frame_vectors) {
                    const auto s = cosine(a->query_vector, v);
                    if (s > best) {
                        best = s;
                        predicted = f;
                    }
                }
            }
        } else if (mem != memories.end() && !mem->second.index.empty()) {
            const auto& index = mem->second.index;
            predicted = method == LocMethod::rerank
                            ? index.localize(query, rerank_k, backend, prompts, max_retries)
                                  .candidate.frame_index
                            : index.top_k(backend.embed(query), 1).front().frame_index;
        }
        if (!predicted) {
            ++row.skipped;
            ++report.total.skipped;
            continue;
        }
        report.predictions[a->item_id] = *predicted;
        if (std::find(a->gt_frames.begin(), a->gt_frames.end(), *predicted) != a->gt_frames.end()) {
            ++row.correct;
            ++report.total.correct;
        }
    }
    return report;
}

std::string loc_report_csv(const LocReport& report) {
    std::string out = "category,metric,value\n";
    auto rows = [&](const std::string& name, const LocRow& r) {
        out += name + ",items," + std::to_string(r.items) + "\n";
        out += name + ",correct," + std::to_string(r.correct) + "\n";
        out += name + ",skipped," + std::to_string(r.skipped) + "\n";
        out += name + ",accuracy," + fmt(r.accuracy()) + "\n";
    };
    for (const auto& [name, row] : report.by_category) rows(name, row);
    rows("overall", report.total);
    return out;
}

json loc_report_json(const LocReport& report) {
    auto row = [](const LocRow& r) {
        return json{{"items", r.items},
                    {"correct", r.correct},
                    {"skipped", r.skipped},
                    {"accuracy", r.accuracy()}};
    };
    json cats = json::object();
    for (const auto& [name, r] : report.by_category) cats[name] = row(r);
    json preds = json::object();
    for (const auto& [id, f] : report.predictions) preds[id] = f;
    return {{"method", to_string(report.method)},
            {"categories", cats},
            {"overall", row(report.total)},
            {"predictions", preds}};
}

}  // namespace ravu
