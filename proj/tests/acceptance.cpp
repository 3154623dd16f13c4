// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "ravu/errors.hpp"
#include "ravu/harness.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/plan_cases.hpp"

using namespace ravu;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const PromptLibrary& prompts() {
    static const PromptLibrary lib =
        PromptLibrary::load(std::filesystem::path(RAVU_ASSET_DIR) / "prompts");
    return lib;
}

const ExampleLibrary& examples() {
    static const auto lib =
        load_example_library(std::filesystem::path(RAVU_ASSET_DIR) / "breakdown_examples");
    return lib;
}

// Seed-42 corpus of 50 videos (200 questions) and its memories, built once.
struct Corpus {
    SynthCorpus corpus = synth_corpus(42, 50);
    MemoryStore store;
    double build_s = 0;
};

const Corpus& seed42() {
    static const Corpus c = [] {
        Corpus c;
        const auto t0 = Clock::now();
        MockBackend m;
        for (const auto& w : c.corpus.videos) {
            c.store[w.video_id] = build_memory(w.observations, w.tracklets, m, prompts(), Config{});
        }
        c.build_s = seconds_since(t0);
        return c;
    }();
    return c;
}

// --- 1
Verdict iou_oracle() {
    const auto t0 = Clock::now();
    gen::Rng rng(1001);
    std::size_t off = 0, asym = 0, ident = 0;
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = gen::box(rng);
        const auto b = gen::box(rng);
        const double d = std::abs(iou(a, b) - oracle::raster_iou(a, b));
        worst = std::max(worst, d);
        off += d > 1e-3 ? 1 : 0;
        asym += iou(a, b) != iou(b, a) ? 1 : 0;
        ident += iou(a, a) != 1.0 ? 1 : 0;
    }
    const double s = seconds_since(t0);
    return {off == 0 && asym == 0 && ident == 0 && s < 5.0,
            fmt("1000 pairs, max |diff| %.2e, %zu asymmetric, %zu identity misses, %.2fs", worst,
                asym, ident, s)};
}

// --- 2
Verdict association() {
    const auto t0 = Clock::now();
    gen::Rng rng(1002);
    const auto c = gen::association_case(rng, 200);
    const auto got = associate(c.observations, c.tracklets, 0.1).id_map;
    const auto want = oracle::associate_ids(c.observations, c.tracklets, 0.1);
    std::size_t mismatched = 0, at_threshold = 0, ties = 0;
    for (const auto& obs : c.observations) {
        if (got.at(obs.frame_index) != want.at(obs.frame_index)) ++mismatched;
        std::vector<double> scores;
        for (const auto& e : obs.entities) {
            for (const auto& t : c.tracklets) {
                if (auto it = t.boxes.find(obs.frame_index); it != t.boxes.end()) {
                    const auto s = iou(e.box, it->second);
                    at_threshold += s == 0.1 ? 1 : 0;
                    if (s > 0) scores.push_back(s);
                }
            }
        }
        std::sort(scores.begin(), scores.end());
        ties += std::adjacent_find(scores.begin(), scores.end()) != scores.end() ? 1 : 0;
    }
    const double s = seconds_since(t0);
    return {mismatched == 0 && at_threshold > 0 && ties > 0 && s < 5.0,
            fmt("200 frames, %zu mismatched, %zu pairs at IoU 0.1, %zu frames with tied scores, %.2fs",
                mismatched, at_threshold, ties, s)};
}

// --- 3
Verdict index_exactness() {
    const auto t0 = Clock::now();
    gen::Rng rng(1003);
    std::size_t mismatched = 0, tied = 0;
    for (int i = 0; i < 100; ++i) {
        const auto n = 1 + gen::below(rng, 1000);
        const auto dim = 4 + gen::below(rng, 29);
        const auto records = gen::index_records(rng, n, dim);
        const EmbeddingIndex index(records);
        const EmbeddingVector q{gen::unit_vector(rng, dim)};
        const auto k = 1 + gen::below(rng, n);
        const auto got = index.top_k(q, k);
        const auto want = oracle::top_k(records, q, k);
        mismatched += got == want ? 0 : 1;
        for (std::size_t j = 1; j < got.size(); ++j) {
            if (got[j].score == got[j - 1].score) {
                ++tied;
                break;
            }
        }
    }
    const double s = seconds_since(t0);
    return {mismatched == 0 && s < 10.0,
            fmt("100 indexes, %zu mismatched, %zu with tied scores in the result, %.2fs", mismatched,
                tied, s)};
}

// --- 4
Verdict event_invariants() {
    MockBackend m;
    std::size_t violations = 0, fallbacks = 0, entities = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto w = synth_world({seed, 40, 5, 4}, "w" + std::to_string(seed));
        const auto assoc = associate(w.observations, w.tracklets);
        auto g = build_graph(assoc, 1.0, m, prompts());
        for (const auto id : entity_ids(g)) {
            const auto r = segment_events(g, id, m, prompts());
            fallbacks += r.fallback ? 1 : 0;
            g.events[id] = r.events;
            ++entities;
        }
        violations += validate(g).size();
    }
    return {violations == 0 && fallbacks == 0,
            fmt("20 worlds, %zu entities, %zu violations, %zu fallbacks", entities, violations,
                fallbacks)};
}

// --- 5
Verdict end_to_end_qa() {
    const auto t0 = Clock::now();
    const auto& c = seed42();
    MockBackend m;
    const auto report = eval_qa(c.corpus.questions, c.store, m, prompts(), examples());
    std::size_t temporal = 0, inside = 0;
    std::map<std::string, const McqItem*> by_id;
    for (const auto& q : c.corpus.questions) by_id[q.item_id] = &q;
    for (const auto& o : report.outcomes) {
        const auto& item = *by_id.at(o.item_id);
        if (item.category != Category::temporal) continue;
        ++temporal;
        const std::set<FrameIndex> gt(item.gt_frames.begin(), item.gt_frames.end());
        const bool ok = !o.frames.empty() &&
                        std::all_of(o.frames.begin(), o.frames.end(),
                                    [&](FrameIndex f) { return gt.contains(f); });
        inside += ok ? 1 : 0;
    }
    const double s = seconds_since(t0) + c.build_s;
    const double acc = report.total.overall();
    const double span = temporal ? static_cast<double>(inside) / static_cast<double>(temporal) : 0.0;
    return {c.corpus.questions.size() == 200 && acc >= 0.95 && span >= 0.90 && s < 60.0,
            fmt("%zu questions, accuracy %.3f, temporal frames within spans %zu/%zu, %.2fs",
                c.corpus.questions.size(), acc, inside, temporal, s)};
}

// --- 6
Verdict localization_direction() {
    const auto& c = seed42();
    MockBackend m;
    const auto rr = eval_localization(c.corpus.localization, c.store, m, prompts(), LocMethod::rerank);
    const auto te =
        eval_localization(c.corpus.localization, c.store, m, prompts(), LocMethod::text_embedding);
    return {rr.total.items > 0 && rr.total.accuracy() > te.total.accuracy(),
            fmt("%zu items, rerank %.3f vs text_embedding %.3f", rr.total.items,
                rr.total.accuracy(), te.total.accuracy())};
}

// --- 7
Verdict dual_mode() {
    const auto corpus = synth_corpus(42, 3);
    MockBackend m;
    MemoryStore store;
    for (const auto& w : corpus.videos) {
        store[w.video_id] = build_memory(w.observations, w.tracklets, m, prompts(), Config{});
    }
    std::vector<McqItem> items(corpus.questions.begin(), corpus.questions.begin() + 10);
    items[6].question += " [BLOCK]";
    const auto r = eval_qa(items, store, m, prompts(), examples());
    const double nb = r.total.non_blocked();
    const double ov = r.total.overall();
    return {r.total.blocked == 1 && nb == 1.0 && ov == 9.0 / 10.0,
            fmt("10 items, %zu blocked, non-blocked %.6f, overall %.6f", r.total.blocked, nb, ov)};
}

// --- 8
std::string pipeline_run() {
    const auto corpus = synth_corpus(42, 50);
    MockBackend m;
    Config config;
    config.workers = 4;
    const BuildOptions options{config.max_retries, config.context_frames, config.workers};
    MemoryStore store;
    std::ostringstream bytes;
    for (const auto& w : corpus.videos) {
        // Round-trip through the on-disk document formats first.
        const auto obs = parse_observations(observations_to_jsonl(w.observations));
        const auto tracks = parse_tracklets(tracklets_to_json(w.tracklets));
        const auto assoc = associate(obs, tracks, config.min_iou, config.fps);
        auto graph = build_graph(assoc, config.fps, m, prompts(), options);
        add_events(graph, m, prompts(), options);
        const auto records = embed_graph(graph, m, config.workers);
        bytes << serialize(graph) << edges_to_jsonl(graph) << descriptions_to_jsonl(graph)
              << encode_matrix(records, m.dimension());
        store[w.video_id] = {std::move(graph), EmbeddingIndex(records)};
    }
    const auto qa = eval_qa(corpus.questions, store, m, prompts(), examples(), {}, config.workers);
    const auto loc = eval_localization(corpus.localization, store, m, prompts(), LocMethod::rerank);
    bytes << qa_report_csv(qa, ReportMode::non_blocked) << qa_report_json(qa, ReportMode::overall).dump()
          << loc_report_csv(loc) << loc_report_json(loc).dump();
    return bytes.str();
}

Verdict determinism() {
    const auto a = pipeline_run();
    const auto b = pipeline_run();
    return {a == b && !a.empty(),
            fmt("two runs, %zu bytes of graphs, embeddings and reports, %s", a.size(),
                a == b ? "identical" : "different")};
}

// --- 9
Verdict budget() {
    const auto& c = seed42();
    MockBackend m;
    AskOptions ask;
    ask.budget = 5;
    ask.global_budget = 5;
    std::size_t over = 0, total = 0, max = 0;
    for (const auto& q : c.corpus.questions) {
        const auto a = answer_question(c.store.at(q.video_id), q.question, q.options, q.category, m,
                                       prompts(), examples(), ask);
        over += a.frames.size() > 5 ? 1 : 0;
        total += a.frames.size();
        max = std::max(max, a.frames.size());
    }
    const double mean = static_cast<double>(total) / static_cast<double>(c.corpus.questions.size());
    return {over == 0 && mean >= 4.5 && mean <= 5.0,
            fmt("%zu asks, max %zu frames, mean %.3f", c.corpus.questions.size(), max, mean)};
}

// --- 10
Verdict plan_dsl() {
    std::size_t accepted = 0, wrong = 0;
    try {
        const auto p = parse_plan(ravu::testing::kBeforeSittingPlan);
        accepted = p.steps.size() == 3 && p.steps[2].function == Function::sample_entity_events ? 1 : 0;
    } catch (const ParseError&) {
    }
    const auto& cases = ravu::testing::bad_plans();
    for (const auto& c : cases) {
        try {
            parse_plan(c.text);
            ++wrong;
        } catch (const ParseError& e) {
            if (e.line() != c.line || e.reason().find(c.reason) == std::string::npos) ++wrong;
        }
    }
    return {accepted == 1 && cases.size() == 20 && wrong == 0,
            fmt("canonical plan %s, %zu negative cases, %zu without the expected line/reason",
                accepted ? "accepted" : "rejected", cases.size(), wrong)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"iou-oracle", iou_oracle},
        {"association-equivalence", association},
        {"index-exactness", index_exactness},
        {"event-invariants", event_invariants},
        {"end-to-end-qa", end_to_end_qa},
        {"localization-direction", localization_direction},
        {"dual-mode-reporting", dual_mode},
        {"determinism", determinism},
        {"budget-conformance", budget},
        {"plan-dsl", plan_dsl},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s %2zu %-24s %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
