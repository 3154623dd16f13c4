#include <algorithm>
#include <random>
#include <set>

#include "ravu/errors.hpp"
#include "ravu/harness.hpp"
#include "ravu/text.hpp"

namespace ravu {

namespace {

const std::vector<std::string> kColors = {"brown", "black", "white", "red",
                                          "blue",  "green", "yellow", "gray"};
const std::vector<std::string> kNouns = {"dog", "cat", "boy", "girl", "bird", "horse", "cow", "duck"};
// No word is shared between two actions.
const std::vector<std::string> kActions = {
    "sitting",         "standing",       "walking",        "jumping",
    "running up the stairs", "eating food", "drinking water", "waving hands",
    "reading book",    "dancing",        "sleeping",       "climbing tree",
    "swimming",        "singing",        "clapping",       "digging hole",
    "rolling ball",    "kicking box",    "pushing cart",   "carrying bag",
    "opening door",    "watching television", "playing guitar", "painting wall",
};

constexpr double kLaneWidth = 80.0;
constexpr double kLaneStride = 120.0;

// mt19937_64 output is fixed by the standard; the distributions are not,
// so draws are done by hand to keep worlds identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::size_t>(hi - lo + 1)));
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }
    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::string body_pose(const std::string& action) {
    if (action == "sleeping" || action == "swimming") return "lying";
    if (action == "sitting" || action == "reading book" || action == "watching television" ||
        action == "playing guitar") {
        return "seated";
    }
    return "upright";
}

std::vector<ScriptedEvent> script_events(Rng& rng, FrameIndex start, FrameIndex end,
                                         const std::vector<std::string>& prefer) {
    std::vector<ScriptedEvent> events;
    std::set<std::string> used;
    FrameIndex f = start;
    while (f <= end) {
        const auto remaining = end - f + 1;
        const auto len = remaining <= 8 ? remaining : rng.between(4, std::min<std::int64_t>(8, remaining - 4));
        std::vector<std::string> pool;
        // Half the time reuse an action from `prefer` to build confusable nodes.
        if (rng.below(2) == 0) {
            for (const auto& a : prefer) {
                if (!used.contains(a)) pool.push_back(a);
            }
        }
        if (pool.empty()) {
            for (const auto& a : kActions) {
                if (!used.contains(a)) pool.push_back(a);
            }
        }
        const auto action = rng.pick(pool);
        used.insert(action);
        events.push_back({f, f + len - 1, action});
        f += len;
    }
    return events;
}

bool relation_on(FrameIndex f, EntityId a, EntityId b) {
    return (f / 5 + a * 3 + b) % 4 == 0;
}

BoundingBox lane_box(std::size_t lane, double jx, double jy) {
    const double x0 = 20.0 + kLaneStride * static_cast<double>(lane) + jx;
    return {x0, 40.0 + jy, x0 + kLaneWidth, 160.0 + jy};
}

std::vector<FrameIndex> span_frames(FrameIndex a, FrameIndex b) {
    std::vector<FrameIndex> out;
    for (auto f = a; f <= b; ++f) out.push_back(f);
    return out;
}

// Actions any entity performs somewhere in frames [a, b].
std::set<std::string> actions_in(const std::vector<EntityScript>& script, FrameIndex a, FrameIndex b) {
    std::set<std::string> out;
    for (const auto& e : script) {
        for (const auto& ev : e.events) {
            if (ev.end >= a && ev.start <= b) out.insert(ev.action);
        }
    }
    return out;
}

std::vector<std::string> absent_actions(const std::set<std::string>& present) {
    std::vector<std::string> out;
    for (const auto& a : kActions) {
        if (!present.contains(a)) out.push_back(a);
    }
    return out;
}

void place_options(Rng& rng, McqItem& item, const std::string& correct,
                   std::vector<std::string> wrong) {
    wrong.push_back(correct);
    rng.shuffle(wrong);
    item.answer_index = static_cast<std::size_t>(
        std::find(wrong.begin(), wrong.end(), correct) - wrong.begin());
    item.options = std::move(wrong);
}

}  // namespace

const ScriptedEvent* EntityScript::event_at(FrameIndex f) const {
    for (const auto& e : events) {
        if (f >= e.start && f <= e.end) return &e;
    }
    return nullptr;
}

SyntheticWorld synth_world(const SynthParams& params, std::string video_id) {
    if (params.n_frames == 0 || params.n_entities == 0) {
        throw std::invalid_argument("synthetic world needs at least one frame and one entity");
    }
    if (params.n_entities > kColors.size() * kNouns.size()) {
        throw std::invalid_argument("too many entities for the attribute vocabulary");
    }
    Rng rng(params.seed);
    SyntheticWorld w;
    w.params = params;
    w.video_id = video_id.empty() ? "v" + std::to_string(params.seed) : std::move(video_id);
    const auto n = static_cast<FrameIndex>(params.n_frames);

    // --- script
    std::set<std::pair<std::string, std::string>> taken;
    for (std::size_t k = 0; k < params.n_entities; ++k) {
        EntityScript e;
        e.entity_id = static_cast<EntityId>(k + 1);
        if (k == 1) {
            // Near-duplicate of entity 1: one attribute differs.
            const auto& first = w.script.front();
            e.color = first.color;
            e.noun = first.noun;
            if (rng.below(2) == 0) {
                while (e.color == first.color) e.color = rng.pick(kColors);
            } else {
                while (e.noun == first.noun) e.noun = rng.pick(kNouns);
            }
        } else {
            do {
                e.color = rng.pick(kColors);
                e.noun = rng.pick(kNouns);
            } while (taken.contains({e.color, e.noun}));
        }
        taken.insert({e.color, e.noun});

        FrameIndex start = 0, end = n - 1;
        if (k >= 2 && n > 8) {
            const auto len = rng.between(8, n);
            start = rng.between(0, n - len);
            end = start + len - 1;
        }
        std::vector<std::string> prefer;
        if (k == 1) {
            for (const auto& ev : w.script.front().events) prefer.push_back(ev.action);
        }
        e.events = script_events(rng, start, end, prefer);
        w.script.push_back(std::move(e));
    }

    // --- tracklets and observations
    for (std::size_t lane = 0; lane < w.script.size(); ++lane) {
        Tracklet t{w.script[lane].entity_id, {}};
        for (auto f = w.script[lane].first_frame(); f <= w.script[lane].last_frame(); ++f) {
            t.boxes[f] = lane_box(lane, rng.between(-3, 3), rng.between(-3, 3));
        }
        w.tracklets.push_back(std::move(t));
    }

    w.truth.fps = 1.0;
    for (FrameIndex f = 0; f < n; ++f) {
        FrameObservation obs;
        obs.frame_index = f;
        obs.source_ref = w.video_id + "/frame_" + std::to_string(f) + ".jpg";
        std::vector<std::size_t> present;
        for (std::size_t lane = 0; lane < w.script.size(); ++lane) {
            if (w.script[lane].event_at(f)) present.push_back(lane);
        }
        rng.shuffle(present);
        std::map<EntityId, std::int64_t> local;
        std::string desc, truth_desc;
        for (std::size_t i = 0; i < present.size(); ++i) {
            const auto& e = w.script[present[i]];
            const auto lid = static_cast<std::int64_t>(i + 1);
            local[e.entity_id] = lid;
            const auto& action = e.event_at(f)->action;
            const auto& tb = w.tracklets[present[i]].boxes.at(f);
            const BoundingBox box{tb.x_min + static_cast<double>(rng.between(-2, 2)),
                                  tb.y_min + static_cast<double>(rng.between(-2, 2)),
                                  tb.x_max + static_cast<double>(rng.between(-2, 2)),
                                  tb.y_max + static_cast<double>(rng.between(-2, 2))};
            const Attributes attrs = {{std::string(kAppearance), e.appearance()},
                                      {std::string(kAction), action},
                                      {std::string(kBodyPose), body_pose(action)}};
            obs.entities.push_back({lid, attrs, box});
            desc += (desc.empty() ? "" : " ") + ("[E" + std::to_string(lid) + "] is " + action + ".");
            truth_desc += (truth_desc.empty() ? "" : " ") +
                          ("[E" + std::to_string(e.entity_id) + "] is " + action + ".");
            w.truth.nodes.push_back({e.entity_id, f, attrs, box, std::nullopt});
        }
        for (const auto& [a, la] : local) {
            for (const auto& [b, lb] : local) {
                if (a >= b || !relation_on(f, a, b)) continue;
                desc += " [E" + std::to_string(la) + "] is near [E" + std::to_string(lb) + "].";
                truth_desc += " [E" + std::to_string(a) + "] is near [E" + std::to_string(b) + "].";
                w.truth.edges.push_back({f, a, "is near", b});
            }
        }
        obs.description = desc;
        w.truth.frames.push_back({f, static_cast<double>(f), truth_desc, obs.source_ref});
        w.observations.push_back(std::move(obs));
    }
    for (const auto& e : w.script) {
        auto& evs = w.truth.events[e.entity_id];
        for (const auto& ev : e.events) {
            evs.push_back({e.entity_id, ev.start, ev.end, e.appearance() + " " + ev.action});
        }
    }
    canonicalize(w.truth);

    // --- questions
    const auto& subject = w.script.front();
    enum Template { before, after, count, global };
    std::size_t q = 0;
    std::size_t attempt = 0;
    while (w.questions.size() < params.n_questions && attempt < params.n_questions * 8) {
        const auto tmpl = static_cast<Template>(attempt++ % 4);
        McqItem item;
        item.video_id = w.video_id;
        item.item_id = w.video_id + "-q" + std::to_string(q);

        if (tmpl == before || tmpl == after) {
            const auto& evs = subject.events;
            if (evs.size() < 2) continue;
            const auto anchor = tmpl == before ? 1 + rng.below(evs.size() - 1) : rng.below(evs.size() - 1);
            const auto& a = evs[anchor];
            const auto& target = tmpl == before ? evs[anchor - 1] : evs[anchor + 1];
            const auto lo = std::min(a.start, target.start);
            const auto hi = std::max(a.end, target.end);
            auto wrong = absent_actions(actions_in(w.script, lo, hi));
            if (wrong.size() < 4) continue;
            rng.shuffle(wrong);
            wrong.resize(4);
            item.question = "What did the " + subject.appearance() + " do " +
                            (tmpl == before ? "before " : "after ") + a.action + "?";
            item.category = Category::temporal;
            item.subcategory = tmpl == before ? "TP" : "TN";
            item.gt_frames = span_frames(lo, hi);
            place_options(rng, item, target.action, std::move(wrong));

            LocalizationAnnotation loc;
            loc.item_id = item.item_id;
            loc.video_id = w.video_id;
            loc.question = item.question;
            loc.query = subject.appearance() + " " + a.action;
            loc.category = Category::temporal;
            loc.gt_frames = span_frames(a.start, a.end);
            w.localization.push_back(std::move(loc));
        } else if (tmpl == count) {
            const auto& noun = rng.pick(w.script).noun;
            const auto c = static_cast<std::size_t>(std::count_if(
                w.script.begin(), w.script.end(), [&](const EntityScript& e) { return e.noun == noun; }));
            const auto n_opts = std::max<std::size_t>(5, params.n_entities);
            std::vector<std::string> wrong;
            for (std::size_t v = 1; v <= n_opts; ++v) {
                if (v != c) wrong.push_back(std::to_string(v));
            }
            item.question = "How many " + noun + "s appear in the video?";
            item.category = Category::descriptive;
            item.subcategory = "DC";
            item.options = wrong;
            item.options.insert(item.options.begin() + static_cast<std::ptrdiff_t>(c - 1),
                                std::to_string(c));
            item.answer_index = c - 1;
        } else {
            std::vector<std::string> actions;
            for (const auto& ev : subject.events) actions.push_back(ev.action);
            auto pool = absent_actions(actions_in(w.script, 0, n - 1));
            const auto per = std::min<std::size_t>(actions.size(), 3);
            std::set<std::string> wrong_set;
            for (int tries = 0; tries < 64 && wrong_set.size() < 4 && pool.size() >= per; ++tries) {
                rng.shuffle(pool);
                std::vector<std::string> pickv(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per));
                wrong_set.insert(text::join(pickv, ", "));
            }
            if (wrong_set.size() < 4) continue;
            std::vector<std::string> wrong(wrong_set.begin(), wrong_set.end());
            rng.shuffle(wrong);
            item.question = "What activities does the " + subject.appearance() + " do in the video?";
            item.category = Category::global;
            place_options(rng, item, text::join(actions, ", "), std::move(wrong));
        }
        w.questions.push_back(std::move(item));
        ++q;
    }
    return w;
}

SynthCorpus synth_corpus(std::uint64_t seed, std::size_t n_videos, const SynthParams& base) {
    SynthCorpus corpus;
    for (std::size_t i = 0; i < n_videos; ++i) {
        auto params = base;
        params.seed = splitmix(seed + i);
        char id[32];
        std::snprintf(id, sizeof id, "vid%03zu", i);
        auto w = synth_world(params, id);
        corpus.questions.insert(corpus.questions.end(), w.questions.begin(), w.questions.end());
        corpus.localization.insert(corpus.localization.end(), w.localization.begin(),
                                   w.localization.end());
        corpus.videos.push_back(std::move(w));
    }
    return corpus;
}

void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus) {
    std::filesystem::create_directories(dir / "videos");
    write_file(dir / "mcq.jsonl", mcq_to_jsonl(corpus.questions));
    write_file(dir / "loc.jsonl", localization_to_jsonl(corpus.localization));
    for (const auto& w : corpus.videos) {
        const auto vdir = dir / "videos" / w.video_id;
        std::filesystem::create_directories(vdir);
        write_file(vdir / "observations.jsonl", observations_to_jsonl(w.observations));
        write_file(vdir / "tracklets.json", tracklets_to_json(w.tracklets));
        write_file(vdir / "truth.json", serialize(w.truth));
    }
}

}  // namespace ravu
