#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>
#include <set>

#include "ravu/backends.hpp"
#include "ravu/text.hpp"

namespace ravu {

namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

json parse_payload(const PromptBundle& bundle) {
    try {
        return json::parse(bundle.user_payload);
    } catch (const json::parse_error&) {
        return json::object();
    }
}

std::string collapse_spaces(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : text::trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// --- frame_graph: `[Ea] words [Eb]` inside one sentence -> a|words|b

std::string mock_frame_graph(const json& p) {
    const std::string description = p.value("description", std::string());
    static const std::regex sentence_split(R"([.!?;\n]+)");
    static const std::regex mention(R"(\[E(\d+)\])");
    std::vector<std::string> lines;
    std::set<std::string> seen;
    for (std::sregex_token_iterator it(description.begin(), description.end(), sentence_split, -1),
         end;
         it != end; ++it) {
        const std::string sentence = it->str();
        std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> mentions;
        for (std::sregex_iterator m(sentence.begin(), sentence.end(), mention), mend; m != mend;
             ++m) {
            mentions.push_back({(*m)[1].str(),
                                {static_cast<std::size_t>(m->position()),
                                 static_cast<std::size_t>(m->position() + m->length())}});
        }
        for (std::size_t i = 0; i + 1 < mentions.size(); ++i) {
            const auto& [a, pa] = mentions[i];
            const auto& [b, pb] = mentions[i + 1];
            if (a == b) continue;
            std::string between = sentence.substr(pa.second, pb.first - pa.second);
            std::replace(between.begin(), between.end(), '|', ' ');
            between = collapse_spaces(between);
            while (!between.empty() && std::ispunct(static_cast<unsigned char>(between.front())))
                between.erase(between.begin());
            while (!between.empty() && std::ispunct(static_cast<unsigned char>(between.back())))
                between.pop_back();
            between = text::trim(between);
            if (text::words(between).empty()) continue;
            auto line = a + "|" + between + "|" + b;
            if (seen.insert(line).second) lines.push_back(std::move(line));
        }
    }
    return lines.empty() ? "NONE" : text::join(lines, "\n");
}

// --- node_description: fixed template over appearance/action/relations

std::string mock_node_description(const json& p) {
    const auto id = p.value("entity_id", std::int64_t{0});
    const auto attrs = p.value("attributes", json::object());
    const auto appearance = collapse_spaces(attrs.value(std::string(kAppearance), std::string()));
    const auto action = collapse_spaces(attrs.value(std::string(kAction), std::string()));
    std::vector<std::string> rels;
    for (const auto& r : p.value("relations", json::array())) {
        const auto s = r.value("subject_id", std::int64_t{-1});
        const auto o = r.value("object_id", std::int64_t{-1});
        const auto rel = collapse_spaces(r.value("relation", std::string()));
        if (s == id) {
            rels.push_back(rel + " entity " + std::to_string(o));
        } else {
            rels.push_back("entity " + std::to_string(s) + " " + rel + " it");
        }
    }
    auto out = "entity " + std::to_string(id) + ": " + appearance + "; " + action +
               "; relations: " + text::join(rels, ", ");
    return text::trim(out);
}

// --- event_segmentation: new event on action change or absence gap

std::string mock_event_segmentation(const json& p) {
    const auto id = p.value("entity_id", std::int64_t{0});
    struct Row {
        std::int64_t frame;
        std::string action;
        std::string summary;
    };
    std::vector<Row> rows;
    for (const auto& n : p.value("nodes", json::array())) {
        const auto attrs = n.value("attributes", json::object());
        const auto appearance =
            collapse_spaces(attrs.value(std::string(kAppearance), std::string()));
        const auto action = collapse_spaces(attrs.value(std::string(kAction), std::string()));
        auto summary = collapse_spaces(appearance + " " + action);
        if (summary.empty()) summary = collapse_spaces(n.value("description", std::string()));
        if (summary.empty()) summary = "entity " + std::to_string(id);
        rows.push_back({n.value("frame_index", std::int64_t{0}), action, summary});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.frame < b.frame; });
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
        const bool boundary = i == rows.size() || rows[i].frame != rows[i - 1].frame + 1 ||
                              rows[i].action != rows[i - 1].action;
        if (!boundary) continue;
        lines.push_back(std::to_string(rows[start].frame) + "|" +
                        std::to_string(rows[i - 1].frame) + "|" + rows[start].summary);
        start = i;
    }
    return lines.empty() ? "NONE" : text::join(lines, "\n");
}

// --- rerank: maximal word overlap with the grounding phrase, lowest index on ties

std::size_t best_overlap(std::string_view query, const std::vector<std::string>& candidates,
                         bool content_only) {
    std::size_t best = 0;
    std::size_t best_score = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto s = content_only ? text::content_overlap(query, candidates[i])
                                    : text::overlap(query, candidates[i]);
        if (i == 0 || s > best_score) {
            best = i;
            best_score = s;
        }
    }
    return best;
}

std::string mock_rerank(const json& p) {
    const auto grounding = p.value("grounding", std::string());
    const auto candidates = p.value("candidates", std::vector<std::string>{});
    return std::to_string(best_overlap(grounding, candidates, false));
}

// --- event_analysis: start of the first event whose summary holds every query content word

std::string mock_event_analysis(const json& p) {
    const auto query = p.value("query", std::string());
    for (const auto& e : p.value("events", json::array())) {
        if (text::contains_all_content_words(query, e.value("summary", std::string()))) {
            return std::to_string(e.value("start_frame", std::int64_t{0}));
        }
    }
    return std::to_string(p.value("first_frame", std::int64_t{0}));
}

// --- breakdown: question-pattern templates

std::string strip_articles(std::string_view phrase) {
    std::vector<std::string> kept;
    for (auto& w : text::split(collapse_spaces(phrase), ' ')) {
        if (w == "the" || w == "a" || w == "an") continue;
        if (!w.empty()) kept.push_back(w);
    }
    return text::join(kept, " ");
}

std::string head_noun(std::string_view phrase) {
    static const std::set<std::string> stops = {"on",   "in",   "at",      "with",    "near",
                                                "by",   "under", "of",     "from",    "wearing",
                                                "holding", "who", "that", "behind", "beside"};
    std::string head;
    for (auto& w : text::split(strip_articles(phrase), ' ')) {
        if (stops.contains(w)) break;
        head = w;
    }
    return head;
}

std::string singular(std::string w) {
    if (w.size() > 4 && w.ends_with("ies")) return w.substr(0, w.size() - 3) + "y";
    if (w.size() > 3 && w.ends_with('s') && !w.ends_with("ss")) w.pop_back();
    return w;
}

std::string normalize_question(std::string_view q) {
    auto s = collapse_spaces(text::to_lower(q));
    while (!s.empty() && (s.back() == '?' || s.back() == '.' || s.back() == '!')) s.pop_back();
    return text::trim(s);
}

std::string mock_breakdown(const json& p) {
    const auto question = normalize_question(p.value("question", std::string()));
    std::smatch m;

    static const std::regex before_after(
        R"(^(?:what|how) (?:did|does|do) (.+?) (?:do|react|respond|behave) (before|after) (.+)$)");
    if (std::regex_match(question, m, before_after)) {
        const auto subject = strip_articles(m[1].str());
        const auto event = strip_articles(m[3].str());
        const bool before = m[2].str() == "before";
        const auto head = head_noun(m[1].str());
        return "# analysis: The question asks what the " + head + " did " + m[2].str() + " " +
               event + ". Find the " + head + " " + event + ", locate when it starts, then sample " +
               (before ? "the preceding" : "the following") + " event.\n" +
               "localize_node(query=" + quote(subject + " " + event) + ")\n" +
               "analyze_events(query=" + quote("when did the " + head + " start " + event) +
               ", node=$1)\n" + "sample_entity_events(node=$1, sample_start_time=$2, " +
               "events_to_sample=" + quote(before ? "previous:1" : "next:1") + ")\n";
    }

    static const std::regex how_many(R"(^how many (.+)$)");
    if (std::regex_match(question, m, how_many)) {
        static const std::set<std::string> verbs = {"appear", "appears", "are", "is", "were",
                                                    "was",    "can",     "do",  "does", "there",
                                                    "in",     "have",    "did", "will"};
        auto ws = text::split(m[1].str(), ' ');
        std::size_t cut = ws.size();
        for (std::size_t i = 0; i < ws.size(); ++i) {
            if (verbs.contains(ws[i])) {
                cut = i;
                break;
            }
        }
        std::vector<std::string> np(ws.begin(), ws.begin() + static_cast<std::ptrdiff_t>(cut));
        if (!np.empty()) np.back() = singular(np.back());
        const auto noun = strip_articles(text::join(np, " "));
        const auto rest = text::content_words(
            text::join(std::vector<std::string>(ws.begin() + static_cast<std::ptrdiff_t>(cut),
                                                ws.end()),
                       " "));
        std::string step = "count_nodes(node_query=" + quote(noun);
        if (!rest.empty()) step += ", event_condition=" + quote(text::join(rest, " "));
        step += ")";
        return "# analysis: Counting question about " + noun +
               ". Count the matching entities and keep an overview of the video.\n" + step +
               "\nget_global_context()\n";
    }

    static const std::regex global(
        R"(^(?:what|which) (?:activities|actions|things|tasks) (?:does|did|do) (.+?) (?:do|perform|carry out)\b.*$)");
    static const std::regex summary(R"(.*\b(?:overall|summari[sz]e|throughout|main goal)\b.*)");
    if (std::regex_match(question, m, global) || std::regex_match(question, summary)) {
        return "# analysis: Global question about the whole video; gather context from every "
               "part.\nget_global_context()\n";
    }

    static const std::regex part(
        R"(^what (?:is|was|does|did) (.+?) (?:doing|do) (?:at|in|during|near) the (beginning|start|middle|end)\b.*$)");
    if (std::regex_match(question, m, part)) {
        const auto which = m[2].str() == "start" ? std::string("beginning") : m[2].str();
        return "# analysis: The question targets the " + which +
               " of the video.\nextract_temporal_part(target_part=" + quote(which) + ")\n";
    }

    static const std::regex why(R"(^why (?:did|does|is|was|were|are) (.+)$)");
    if (std::regex_match(question, m, why)) {
        const auto phrase = strip_articles(m[1].str());
        return "# analysis: Causal question; find the event and look at what led to it.\n"
               "localize_node(query=" +
               quote(phrase) +
               ")\n"
               "sample_entity_events(node=$1, events_to_sample=\"previous:1\")\n"
               "sample_entity_events(node=$1, events_to_sample=\"current\")\n";
    }

    static const std::regex doing(R"(^what (?:is|was) (.+?) doing$)");
    if (std::regex_match(question, m, doing)) {
        return "# analysis: Descriptive question about one entity across the video.\n"
               "identify_node(query=" +
               quote(strip_articles(m[1].str())) +
               ")\n"
               "sample_entity_events(node=$1, events_to_sample=\"all\")\n";
    }

    const auto words = text::content_words(question);
    if (words.empty()) {
        return "# analysis: No specific target; use global context.\nget_global_context()\n";
    }
    return "# analysis: Find the part of the video the question refers to.\n"
           "localize_node(query=" +
           quote(text::join(words, " ")) +
           ")\n"
           "sample_entity_events(node=$1, events_to_sample=\"current\")\n";
}

// --- answer: option with the most content words found in the frame context

std::string mock_answer(const PromptBundle& bundle, const json& p) {
    std::string context;
    if (bundle.frame_refs) {
        for (const auto& f : *bundle.frame_refs) context += f.description + "\n";
    }
    for (const auto& n : p.value("notes", std::vector<std::string>{})) context += n + "\n";
    const auto options = p.value("options", std::vector<std::string>{});
    std::size_t best = 0;
    std::size_t best_score = 0;
    for (std::size_t i = 0; i < options.size(); ++i) {
        const auto s = text::content_overlap(options[i], context);
        if (i == 0 || s > best_score) {
            best = i;
            best_score = s;
        }
    }
    return std::to_string(best);
}

// --- event_select: top-N candidates by content overlap with the question

std::string mock_event_select(const json& p) {
    const auto question = p.value("question", std::string());
    const auto candidates = p.value("candidates", std::vector<std::string>{});
    const auto top = p.value("top", std::size_t{10});
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> score(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        score[i] = text::content_overlap(question, candidates[i]);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    order.resize(std::min(order.size(), top));
    std::vector<std::string> parts;
    for (auto i : order) parts.push_back(std::to_string(i));
    return parts.empty() ? "NONE" : text::join(parts, ", ");
}

bool has_block_marker(const PromptBundle& bundle) {
    auto hit = [](std::string_view s) {
        return s.find(MockBackend::kBlockMarker) != std::string_view::npos;
    };
    if (hit(bundle.system_prompt) || hit(bundle.user_payload)) return true;
    if (bundle.frame_refs) {
        for (const auto& f : *bundle.frame_refs) {
            if (hit(f.description) || hit(f.source_ref)) return true;
        }
    }
    return false;
}

}  // namespace

MockBackend::MockBackend(MockConfig config) : config_(config) {
    if (config_.dimension == 0) throw std::invalid_argument("embedding dimension must be > 0");
}

std::string MockBackend::generate(const PromptBundle& bundle) {
    if (has_block_marker(bundle)) throw BlockedContent("mock provider: blocked content marker");
    const auto p = parse_payload(bundle);
    switch (bundle.role) {
        case Role::frame_graph: return mock_frame_graph(p);
        case Role::node_description: return mock_node_description(p);
        case Role::event_segmentation: return mock_event_segmentation(p);
        case Role::rerank: return mock_rerank(p);
        case Role::event_analysis: return mock_event_analysis(p);
        case Role::breakdown: return mock_breakdown(p);
        case Role::answer: return mock_answer(bundle, p);
        case Role::event_select: return mock_event_select(p);
    }
    throw MalformedResponse("mock provider: unknown role");
}

EmbeddingVector MockBackend::embed(std::string_view input) {
    const auto ws = text::words(input);
    EmbeddingVector out;
    out.values.assign(config_.dimension, 0.0f);
    if (ws.empty()) return out;
    std::vector<double> acc(config_.dimension, 0.0);
    for (const auto& w : ws) {
        std::uint64_t state = fnv1a(w) ^ (config_.seed * 0xD1B54A32D192ED03ULL);
        for (auto& a : acc) {
            const auto bits = splitmix64(state) >> 11;
            a += static_cast<double>(bits) * 0x1.0p-53 * 2.0 - 1.0;
        }
    }
    double norm = 0.0;
    for (double a : acc) norm += a * a;
    norm = std::sqrt(norm);
    if (norm == 0.0) return out;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out.values[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

}  // namespace ravu
