#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ravu/backends.hpp"
#include "ravu/config.hpp"
#include "ravu/graph_builder.hpp"
#include "ravu/graph_model.hpp"
#include "ravu/index.hpp"
#include "ravu/ingestion.hpp"
#include "ravu/reasoning.hpp"

namespace ravu {

enum class Category { causal, temporal, descriptive, global };

std::string_view to_string(Category c);
Category category_from_string(std::string_view name);

struct McqItem {
    std::string item_id;
    std::string video_id;
    std::string question;
    std::vector<std::string> options;
    std::size_t answer_index = 0;
    Category category = Category::descriptive;
    std::optional<std::string> subcategory;  // e.g. "TP", "DC"
    std::vector<FrameIndex> gt_frames;       // optional, for frame-span checks

    friend bool operator==(const McqItem&, const McqItem&) = default;
};

struct LocalizationAnnotation {
    std::string item_id;
    std::string video_id;
    std::string question;
    std::optional<std::string> query;  // grounding phrase; the question when absent
    Category category = Category::temporal;
    std::vector<FrameIndex> gt_frames;
    // Optional frame-image vectors for the raw_vector method.
    std::map<FrameIndex, std::vector<float>> frame_vectors;
    std::vector<float> query_vector;

    friend bool operator==(const LocalizationAnnotation&, const LocalizationAnnotation&) = default;
};

// mcq.jsonl / loc.jsonl, one object per line. Items without an "item_id"
// get "<video_id>#<line>".
std::vector<McqItem> parse_mcq(std::string_view document);
std::string mcq_to_jsonl(const std::vector<McqItem>& items);
std::vector<LocalizationAnnotation> parse_localization(std::string_view document);
std::string localization_to_jsonl(const std::vector<LocalizationAnnotation>& items);

// ---------------------------------------------------------------------------
// Per-video memory

struct VideoMemory {
    SpatioTemporalGraph graph;
    EmbeddingIndex index;
};

// observations + tracklets -> associated, described, segmented, embedded.
VideoMemory build_memory(const std::vector<FrameObservation>& observations,
                         const std::vector<Tracklet>& tracklets, Backend& backend,
                         const PromptLibrary& prompts, const Config& config,
                         BuildStats* stats = nullptr);

// <dir>/graph.json + embeddings; throws NotFound when either is missing.
VideoMemory load_memory(const std::filesystem::path& dir);
void save_memory(const std::filesystem::path& dir, const VideoMemory& memory);

using MemoryStore = std::map<std::string, VideoMemory>;

// ---------------------------------------------------------------------------
// Question answering

enum class AnswerMode {
    automatic,  // global category or a global-only plan -> hierarchical
    plan,       // always breakdown + execute
    global,     // always hierarchical retrieval
};
AnswerMode answer_mode_from_string(std::string_view name);

struct AskOptions {
    AnswerMode mode = AnswerMode::automatic;
    std::size_t budget = kDefaultBudget;
    std::size_t global_budget = kDefaultGlobalBudget;
    std::size_t rerank_k = kDefaultRerankK;
    std::size_t per_event_candidates = 1;
    int max_retries = kDefaultMaxRetries;
};

struct Answer {
    std::size_t choice = 0;
    std::vector<FrameIndex> frames;
    ReasoningPlan plan;
    bool hierarchical = false;
    bool breakdown_fallback = false;
    std::vector<std::string> notes;
};

// `category` may be unknown, in which case routing follows the breakdown
// plan. With no options only retrieval runs and `choice` stays 0.
Answer answer_question(const VideoMemory& memory, std::string_view question,
                       const std::vector<std::string>& options, std::optional<Category> category,
                       Backend& backend, const PromptLibrary& prompts,
                       const ExampleLibrary& examples, const AskOptions& options_in = {});

// ---------------------------------------------------------------------------
// Evaluation

struct ItemOutcome {
    std::string item_id;
    Category category = Category::descriptive;
    std::optional<std::string> subcategory;
    std::optional<std::size_t> choice;
    bool correct = false;
    bool blocked = false;
    std::optional<std::string> error;  // missing video, timeout, ...
    std::vector<FrameIndex> frames;
    std::string plan;  // rendered
    bool hierarchical = false;
    std::size_t prompt_tokens = 0;
};

struct AccuracyRow {
    std::size_t items = 0;
    std::size_t correct = 0;
    std::size_t blocked = 0;
    std::size_t errored = 0;

    // Blocked items excluded / counted as wrong. Errored items never count.
    double non_blocked() const;
    double overall() const;
};

struct QaReport {
    std::map<std::string, AccuracyRow> by_category;  // categories and subcategories
    AccuracyRow total;
    double mean_frames = 0.0;
    double mean_prompt_tokens = 0.0;
    std::vector<ItemOutcome> outcomes;  // sorted by item_id
};

QaReport eval_qa(const std::vector<McqItem>& items, const MemoryStore& memories, Backend& backend,
                 const PromptLibrary& prompts, const ExampleLibrary& examples,
                 const AskOptions& options = {}, int workers = 1);

enum class ReportMode { non_blocked, overall };
ReportMode report_mode_from_string(std::string_view name);

// category,metric,value rows; "accuracy" follows `mode`, both variants are
// always present as accuracy_non_blocked / accuracy_overall.
std::string qa_report_csv(const QaReport& report, ReportMode mode);
nlohmann::json qa_report_json(const QaReport& report, ReportMode mode);

enum class LocMethod { rerank, text_embedding, raw_vector };
LocMethod loc_method_from_string(std::string_view name);
std::string_view to_string(LocMethod m);

struct LocRow {
    std::size_t items = 0;
    std::size_t correct = 0;
    std::size_t skipped = 0;
    double accuracy() const;  // over non-skipped items
};

struct LocReport {
    LocMethod method = LocMethod::rerank;
    std::map<std::string, LocRow> by_category;
    LocRow total;
    // item_id -> predicted frame (absent when skipped or errored)
    std::map<std::string, FrameIndex> predictions;
};

LocReport eval_localization(const std::vector<LocalizationAnnotation>& items,
                            const MemoryStore& memories, Backend& backend,
                            const PromptLibrary& prompts, LocMethod method,
                            std::size_t rerank_k = kDefaultRerankK,
                            int max_retries = kDefaultMaxRetries);

std::string loc_report_csv(const LocReport& report);
nlohmann::json loc_report_json(const LocReport& report);

// ---------------------------------------------------------------------------
// Synthetic worlds

struct ScriptedEvent {
    FrameIndex start = 0;
    FrameIndex end = 0;
    std::string action;
};

struct EntityScript {
    EntityId entity_id = 0;
    std::string color;
    std::string noun;
    std::vector<ScriptedEvent> events;  // contiguous, ordered

    std::string appearance() const { return color + " " + noun; }
    FrameIndex first_frame() const { return events.front().start; }
    FrameIndex last_frame() const { return events.back().end; }
    const ScriptedEvent* event_at(FrameIndex f) const;
};

struct SynthParams {
    std::uint64_t seed = 42;
    std::size_t n_frames = 30;
    std::size_t n_entities = 3;
    std::size_t n_questions = 4;
};

struct SyntheticWorld {
    std::string video_id;
    SynthParams params;
    std::vector<EntityScript> script;
    std::vector<FrameObservation> observations;
    std::vector<Tracklet> tracklets;
    SpatioTemporalGraph truth;  // nodes, edges and events as scripted
    std::vector<McqItem> questions;
    std::vector<LocalizationAnnotation> localization;
};

// Deterministic per params. Entity 1 is the question subject; entity 2 is a
// near-duplicate of it (one attribute differs) that shares some actions.
SyntheticWorld synth_world(const SynthParams& params, std::string video_id = "");

struct SynthCorpus {
    std::vector<SyntheticWorld> videos;
    std::vector<McqItem> questions;
    std::vector<LocalizationAnnotation> localization;
};

SynthCorpus synth_corpus(std::uint64_t seed, std::size_t n_videos, const SynthParams& base = {});

// Layout: <dir>/mcq.jsonl, <dir>/loc.jsonl and, per video,
// <dir>/videos/<id>/{observations.jsonl, tracklets.json, truth.json}.
void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

}  // namespace ravu
