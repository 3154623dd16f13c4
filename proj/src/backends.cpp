#include "ravu/backends.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ravu/payload.hpp"
#include "ravu/text.hpp"

namespace ravu {

namespace {

constexpr std::pair<Role, std::string_view> kRoleNames[] = {
    {Role::frame_graph, "frame_graph"},
    {Role::node_description, "node_description"},
    {Role::event_segmentation, "event_segmentation"},
    {Role::rerank, "rerank"},
    {Role::event_analysis, "event_analysis"},
    {Role::breakdown, "breakdown"},
    {Role::answer, "answer"},
    {Role::event_select, "event_select"},
};

}  // namespace

std::string_view to_string(Role role) {
    for (const auto& [r, name] : kRoleNames) {
        if (r == role) return name;
    }
    return "unknown";
}

Role role_from_string(std::string_view name) {
    for (const auto& [r, n] : kRoleNames) {
        if (n == name) return r;
    }
    throw ParseError("role", "unknown role '" + std::string(name) + "'");
}

const std::vector<Role>& all_roles() {
    static const std::vector<Role> roles = [] {
        std::vector<Role> out;
        for (const auto& [r, _] : kRoleNames) out.push_back(r);
        return out;
    }();
    return roles;
}

double EmbeddingVector::norm() const noexcept {
    double s = 0.0;
    for (float v : values) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const noexcept {
    for (float v : values) {
        if (v != 0.0f) return false;
    }
    return true;
}

double cosine(std::span<const float> a, std::span<const float> b) noexcept {
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

PromptLibrary::PromptLibrary() {
    prompts_[Role::frame_graph] =
        "Extract relation edges between the listed entities from the frame description. "
        "Output one `subject_id|relation|object_id` line per edge.";
    prompts_[Role::node_description] =
        "Write one sentence describing the entity node, its attributes and its relations.";
    prompts_[Role::event_segmentation] =
        "Split the entity's node sequence into events. Output `start|end|summary` lines.";
    prompts_[Role::rerank] =
        "Pick the candidate that best matches the grounding phrase. Output its index only.";
    prompts_[Role::event_analysis] =
        "Read the entity events and answer the question with a single frame index.";
    prompts_[Role::breakdown] =
        "Analyse the question and write a reasoning plan, one function call per line.";
    prompts_[Role::answer] =
        "Answer the multiple-choice question from the frames. Output the option index only.";
    prompts_[Role::event_select] =
        "Select the candidate descriptions that best match the question. Output their "
        "indices separated by commas.";
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (Role role : all_roles()) {
        const auto path = dir / (std::string(to_string(role)) + ".txt");
        std::ifstream in(path);
        if (!in) continue;
        std::ostringstream ss;
        ss << in.rdbuf();
        lib.prompts_[role] = ss.str();
    }
    return lib;
}

const std::string& PromptLibrary::system_prompt(Role role) const {
    return prompts_.at(role);
}

void PromptLibrary::set(Role role, std::string prompt) {
    prompts_[role] = std::move(prompt);
}

PromptBundle PromptLibrary::bundle(Role role, std::string user_payload,
                                   std::optional<std::vector<FrameRef>> frame_refs) const {
    PromptBundle b{role, system_prompt(role), std::move(user_payload), std::move(frame_refs)};
    if (!b.valid()) {
        throw std::invalid_argument("frame refs are only allowed for answer/event_select");
    }
    return b;
}

std::int64_t parse_bare_integer(std::string_view text) {
    const auto t = text::trim(text);
    std::int64_t value = 0;
    const auto* first = t.data();
    const auto* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (t.empty() || ec != std::errc() || ptr != last) {
        throw MalformedResponse("expected a bare integer, got '" + t + "'");
    }
    return value;
}

std::size_t answer(Backend& backend, const PromptLibrary& prompts, std::vector<FrameRef> frames,
                   std::string_view question, const std::vector<std::string>& options,
                   const std::vector<std::string>& notes, int max_retries) {
    if (options.empty()) throw std::invalid_argument("answer needs at least one option");
    auto bundle = prompts.bundle(Role::answer, payload::answer(question, options, notes),
                                 std::move(frames));
    return generate_parsed(backend, bundle, max_retries, [&](const std::string& out) {
        const auto idx = parse_bare_integer(out);
        if (idx < 0 || idx >= static_cast<std::int64_t>(options.size())) {
            throw MalformedResponse("option index out of range: " + std::to_string(idx));
        }
        return static_cast<std::size_t>(idx);
    });
}

std::string CountingBackend::generate(const PromptBundle& bundle) {
    std::size_t n = text::whitespace_tokens(bundle.system_prompt) +
                    text::whitespace_tokens(bundle.user_payload);
    if (bundle.frame_refs) {
        for (const auto& f : *bundle.frame_refs) n += text::whitespace_tokens(f.description);
    }
    tokens_ += n;
    ++calls_;
    return inner_.generate(bundle);
}

}  // namespace ravu
