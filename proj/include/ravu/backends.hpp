#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ravu/errors.hpp"
#include "ravu/graph_model.hpp"

namespace ravu {

// Which instruction set a generation call carries. Each role has its own
// system prompt and a JSON user payload (schemas in payload.hpp).
enum class Role {
    frame_graph,
    node_description,
    event_segmentation,
    rerank,
    event_analysis,
    breakdown,
    answer,
    event_select,
};

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);
const std::vector<Role>& all_roles();

struct FrameRef {
    FrameIndex frame_index = 0;
    std::string source_ref;
    std::string description;
};

struct PromptBundle {
    Role role = Role::answer;
    std::string system_prompt;
    std::string user_payload;
    std::optional<std::vector<FrameRef>> frame_refs;

    // Frame references are only meaningful for answer / event_select.
    bool valid() const noexcept {
        return !frame_refs || role == Role::answer || role == Role::event_select;
    }
};

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dimension() const noexcept { return values.size(); }
    double norm() const noexcept;
    bool is_zero() const noexcept;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

// Cosine similarity; 0 when either side is the zero vector.
double cosine(std::span<const float> a, std::span<const float> b) noexcept;
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) noexcept {
    return cosine(a.values, b.values);
}

// Model provider for the three roles: text generation, multimodal answer
// (generation with frame refs) and text embedding. Implementations must be
// callable from several threads at once.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string generate(const PromptBundle& bundle) = 0;
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
};

// System prompt per role. Wording is configuration, not contract.
class PromptLibrary {
public:
    PromptLibrary();

    // Reads <dir>/<role>.txt for every role; missing files keep the
    // built-in one-line instruction.
    static PromptLibrary load(const std::filesystem::path& dir);

    const std::string& system_prompt(Role role) const;
    void set(Role role, std::string prompt);

    PromptBundle bundle(Role role, std::string user_payload,
                        std::optional<std::vector<FrameRef>> frame_refs = std::nullopt) const;

private:
    std::map<Role, std::string> prompts_;
};

// Runs `parse` on the backend output, re-asking on MalformedResponse for at
// most `max_retries` attempts in total. Timeout/BlockedContent propagate at
// once; MalformedResponse surfaces only after the last attempt.
template <typename Parse>
auto generate_parsed(Backend& backend, const PromptBundle& bundle, int max_retries, Parse&& parse)
    -> decltype(parse(std::string())) {
    const int attempts = max_retries < 1 ? 1 : max_retries;
    for (int i = 1;; ++i) {
        try {
            return parse(backend.generate(bundle));
        } catch (const MalformedResponse&) {
            if (i >= attempts) throw;
        }
    }
}

inline constexpr int kDefaultMaxRetries = 2;

// Parses a bare (optionally whitespace-padded) integer, else MalformedResponse.
std::int64_t parse_bare_integer(std::string_view text);

// Multiple-choice answer: returns an index into `options`.
std::size_t answer(Backend& backend, const PromptLibrary& prompts, std::vector<FrameRef> frames,
                   std::string_view question, const std::vector<std::string>& options,
                   const std::vector<std::string>& notes = {},
                   int max_retries = kDefaultMaxRetries);

// ---------------------------------------------------------------------------
// Deterministic offline provider.

struct MockConfig {
    std::size_t dimension = 256;
    std::uint64_t seed = 0;
};

// Rule-based stand-in for every model call site. A pure function of
// (bundle, config): no state, no randomness beyond the seeded word hash.
// Any payload containing "[BLOCK]" raises BlockedContent.
class MockBackend final : public Backend {
public:
    explicit MockBackend(MockConfig config = {});

    std::string generate(const PromptBundle& bundle) override;
    EmbeddingVector embed(std::string_view text) override;
    std::size_t dimension() const override { return config_.dimension; }

    static constexpr std::string_view kBlockMarker = "[BLOCK]";

private:
    MockConfig config_;
};

// ---------------------------------------------------------------------------
// HTTP provider.

struct RemoteConfig {
    std::string endpoint;  // e.g. "http://localhost:8080/v1"
    std::string token;
    std::string model;
    std::size_t dimension = 768;
    std::chrono::milliseconds deadline{60'000};
    std::ptrdiff_t max_in_flight = 4;
};

// POST <endpoint>/generate {role, system, user, frames?, model} -> {text}
// POST <endpoint>/embed    {text, model}                        -> {vector}
// HTTP 451 or {"blocked": true} maps to BlockedContent; transport failures
// and deadline overruns map to Timeout.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(RemoteConfig config);
    ~RemoteBackend() override;

    std::string generate(const PromptBundle& bundle) override;
    EmbeddingVector embed(std::string_view text) override;
    std::size_t dimension() const override { return config_.dimension; }

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    RemoteConfig config_;
    std::string base_;
    std::string prefix_;
    std::counting_semaphore<1 << 16> in_flight_;
};

// Decorator that tallies the whitespace-token count of every prompt it
// forwards (system prompt, payload and frame descriptions).
class CountingBackend final : public Backend {
public:
    explicit CountingBackend(Backend& inner) : inner_(inner) {}

    std::string generate(const PromptBundle& bundle) override;
    EmbeddingVector embed(std::string_view text) override { return inner_.embed(text); }
    std::size_t dimension() const override { return inner_.dimension(); }

    std::size_t prompt_tokens() const noexcept { return tokens_.load(); }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    Backend& inner_;
    std::atomic<std::size_t> tokens_{0};
    std::atomic<std::size_t> calls_{0};
};

}  // namespace ravu
