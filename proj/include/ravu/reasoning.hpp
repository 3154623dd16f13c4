#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ravu/backends.hpp"
#include "ravu/graph_model.hpp"
#include "ravu/index.hpp"
#include "ravu/payload.hpp"

namespace ravu {

// ---------------------------------------------------------------------------
// Plan DSL
//
//   # question: What did the man on the stage do before sitting?
//   # analysis: Find the man sitting, then look at the event before.
//   localize_node(query="man on stage sitting")
//   analyze_events(query="when did the man start sitting", node=$1)
//   sample_entity_events(node=$1, sample_start_time=$2, events_to_sample="previous:1")
//
// One call per line; values are double-quoted strings (\" and \\ escapes),
// integers, or $n referring to the result of an earlier line's step (1-based).
// Blank lines and # comments are ignored, except that "# question:" and
// "# analysis:" comments fill the plan's question and analysis fields.

enum class Function {
    localize_node,
    sample_entity_events,
    extract_temporal_part,
    count_nodes,
    get_global_context,
    analyze_events,
    identify_node,
};

std::string_view to_string(Function f);
// Accepts "analyze_entity_events" as a spelling of analyze_events.
std::optional<Function> function_from_string(std::string_view name);
bool produces_frames(Function f);

struct StepRef {
    std::size_t step = 0;  // 1-based
    friend bool operator==(const StepRef&, const StepRef&) = default;
};

using ArgValue = std::variant<std::string, std::int64_t, StepRef>;

struct ReasoningStep {
    Function function = Function::get_global_context;
    std::map<std::string, ArgValue> args;

    friend bool operator==(const ReasoningStep&, const ReasoningStep&) = default;
};

struct ReasoningPlan {
    std::string question;
    std::string analysis;
    std::vector<ReasoningStep> steps;

    friend bool operator==(const ReasoningPlan&, const ReasoningPlan&) = default;
};

// Throws ParseError carrying the 1-based line of the offending step.
ReasoningPlan parse_plan(std::string_view text);

// Canonical text form; parse_plan(render_plan(p)) == p.
std::string render_plan(const ReasoningPlan& plan);

// events_to_sample grammar: previous:n | next:n | current | all  (n >= 1)
struct EventSelector {
    enum class Kind { previous, next, current, all } kind = Kind::all;
    std::size_t count = 0;
};
std::optional<EventSelector> parse_event_selector(std::string_view text);

// ---------------------------------------------------------------------------
// Step values

struct NodeRef {
    EntityId entity_id = 0;
    FrameIndex frame_index = 0;
    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};
struct TimeIndex {
    FrameIndex frame = 0;
    friend bool operator==(const TimeIndex&, const TimeIndex&) = default;
};
struct FrameSet {
    std::vector<FrameIndex> frames;  // sorted, unique
    friend bool operator==(const FrameSet&, const FrameSet&) = default;
};
struct CountValue {
    std::int64_t count = 0;
    friend bool operator==(const CountValue&, const CountValue&) = default;
};
struct Segment {
    FrameIndex start = 0;
    FrameIndex end = 0;
    FrameSet sampled;
    friend bool operator==(const Segment&, const Segment&) = default;
};

using StepValue = std::variant<NodeRef, TimeIndex, FrameSet, CountValue, Segment>;

// ---------------------------------------------------------------------------
// Question breakdown

using ExampleLibrary = std::vector<payload::BreakdownExample>;

// Reads every *.plan file in `dir` (sorted by name). Each file is a plan in
// DSL form with "# question:" and "# analysis:" comments.
ExampleLibrary load_example_library(const std::filesystem::path& dir);

struct BreakdownResult {
    ReasoningPlan plan;
    bool fallback = false;  // backend text never parsed; plan is [get_global_context()]
};

BreakdownResult breakdown(std::string_view question, const ExampleLibrary& examples,
                          Backend& backend, const PromptLibrary& prompts,
                          int max_retries = kDefaultMaxRetries);

// A plan that only asks for global context routes to hierarchical retrieval.
bool is_global_plan(const ReasoningPlan& plan);

// ---------------------------------------------------------------------------
// Execution

inline constexpr std::size_t kDefaultBudget = 5;
inline constexpr std::size_t kDefaultGlobalBudget = 10;

struct ExecOptions {
    std::size_t budget = kDefaultBudget;
    std::size_t rerank_k = kDefaultRerankK;
    int max_retries = kDefaultMaxRetries;
};

struct StepOutcome {
    std::size_t step = 0;  // 1-based
    Function function = Function::get_global_context;
    std::optional<StepValue> value;
    std::optional<std::string> error;
    std::vector<std::string> flags;  // e.g. "rerank-fallback", "clamped"
};

struct ExecutionResult {
    std::vector<FrameIndex> frames;  // sorted, unique, size <= budget
    std::vector<StepOutcome> steps;
    std::vector<std::string> notes;  // non-frame results worth showing the answer model
    bool global_fallback = false;    // no frames came out; global context appended
};

// `budget` frames spread uniformly over `sorted`, keeping both ends when
// budget >= 2 (positions ceil(i*(n-1)/(budget-1))); the middle one for budget 1.
std::vector<FrameIndex> uniform_sample(std::span<const FrameIndex> sorted, std::size_t budget);

// Read-only view of one video's memory; functions below are the plan steps.
class ReasoningContext {
public:
    ReasoningContext(const SpatioTemporalGraph& graph, const EmbeddingIndex& index,
                     Backend& backend, const PromptLibrary& prompts, ExecOptions options = {});

    struct NodeResult {
        NodeRef node;
        bool fallback = false;
    };
    struct TimeResult {
        TimeIndex time;
        std::vector<std::string> flags;
    };

    NodeResult localize_node(std::string_view query) const;
    NodeResult identify_node(std::string_view query) const;
    TimeResult analyze_events(std::string_view query, const NodeRef& node) const;
    FrameSet sample_entity_events(const NodeRef& node, std::optional<FrameIndex> start,
                                  const EventSelector& selector, std::size_t quota) const;
    Segment extract_temporal_part(std::string_view part, std::size_t quota) const;
    CountValue count_nodes(std::string_view node_query,
                           std::optional<std::string_view> event_condition) const;
    FrameSet get_global_context(std::size_t quota) const;

    // Stored events of the entity, or contiguous appearance runs if none.
    std::vector<EntityEvent> events_of(EntityId entity_id) const;

    const SpatioTemporalGraph& graph() const noexcept { return graph_; }
    const ExecOptions& options() const noexcept { return options_; }
    const EmbeddingIndex& index() const noexcept { return index_; }
    Backend& backend() const noexcept { return backend_; }
    const PromptLibrary& prompts() const noexcept { return prompts_; }

private:
    const SpatioTemporalGraph& graph_;
    const EmbeddingIndex& index_;
    Backend& backend_;
    const PromptLibrary& prompts_;
    ExecOptions options_;
};

// Runs the steps in order. Step errors are recorded and never abort the
// run; a step whose reference failed fails too. Frame-producing steps share
// the budget: each gets ceil(remaining budget / remaining frame steps). The
// union of their frames is sorted and thinned uniformly to the budget; when
// it is empty, global context fills it. BlockedContent propagates.
ExecutionResult execute(const ReasoningPlan& plan, const ReasoningContext& context);

// ---------------------------------------------------------------------------
// Whole-video questions

struct HierarchicalResult {
    std::vector<FrameIndex> frames;
    std::vector<Candidate> selected;
    std::size_t pool_size = 0;
    bool fallback = false;  // event_select unusable; pool truncated by score
};

// Stage 1: for every entity event, the `per_event` node descriptions closest
// to the question embedding. Stage 2: the backend picks `top` of the pooled
// descriptions (skipped when the pool already fits). Returns their frames.
HierarchicalResult hierarchical_retrieve(std::string_view question,
                                         const ReasoningContext& context, std::size_t per_event,
                                         std::size_t top);

}  // namespace ravu
