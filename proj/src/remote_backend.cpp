#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cmath>
#include <regex>

#include "ravu/backends.hpp"

namespace ravu {

namespace {

using nlohmann::json;

// Releases one in-flight slot on scope exit.
class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<1 << 16>& sem) : sem_(sem) { sem_.acquire(); }
    ~SlotGuard() { sem_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1 << 16>& sem_;
};

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config)
    : config_(std::move(config)),
      in_flight_(std::max<std::ptrdiff_t>(1, config_.max_in_flight)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) {
        throw std::invalid_argument("remote endpoint must be an http(s) URL: " + config_.endpoint);
    }
    base_ = m[1].str();
    prefix_ = m[2].matched ? m[2].str() : std::string();
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (config_.dimension == 0) throw std::invalid_argument("embedding dimension must be > 0");
}

RemoteBackend::~RemoteBackend() = default;

json RemoteBackend::post(const std::string& path, const json& body) {
    SlotGuard slot(in_flight_);
    httplib::Client client(base_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.deadline);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(config_.deadline - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

    auto res = client.Post(prefix_ + path, headers, body.dump(), "application/json");
    if (!res) {
        throw Timeout("remote provider " + config_.endpoint + ": " +
                      httplib::to_string(res.error()));
    }
    if (res->status == 451) throw BlockedContent("remote provider blocked the request");
    if (res->status < 200 || res->status >= 300) {
        throw MalformedResponse("remote provider returned HTTP " + std::to_string(res->status));
    }
    json out;
    try {
        out = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw MalformedResponse(std::string("remote provider sent invalid JSON: ") + e.what());
    }
    if (out.is_object() && out.value("blocked", false)) {
        throw BlockedContent("remote provider blocked the request");
    }
    return out;
}

std::string RemoteBackend::generate(const PromptBundle& bundle) {
    json body;
    body["role"] = to_string(bundle.role);
    body["system"] = bundle.system_prompt;
    body["user"] = bundle.user_payload;
    if (!config_.model.empty()) body["model"] = config_.model;
    if (bundle.frame_refs) {
        body["frames"] = json::array();
        for (const auto& f : *bundle.frame_refs) {
            body["frames"].push_back({{"frame_index", f.frame_index},
                                      {"source_ref", f.source_ref},
                                      {"description", f.description}});
        }
    }
    const auto out = post("/generate", body);
    if (!out.is_object() || !out.contains("text") || !out["text"].is_string()) {
        throw MalformedResponse("remote provider response lacks 'text'");
    }
    auto text = out["text"].get<std::string>();
    if (text.empty()) throw MalformedResponse("remote provider returned empty text");
    return text;
}

EmbeddingVector RemoteBackend::embed(std::string_view text) {
    EmbeddingVector v;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        v.values.assign(config_.dimension, 0.0f);
        return v;
    }
    json body{{"text", text}};
    if (!config_.model.empty()) body["model"] = config_.model;
    const auto out = post("/embed", body);
    if (!out.is_object() || !out.contains("vector") || !out["vector"].is_array()) {
        throw MalformedResponse("remote provider response lacks 'vector'");
    }
    std::vector<double> raw = out["vector"].get<std::vector<double>>();
    if (raw.size() != config_.dimension) {
        throw MalformedResponse("embedding dimension " + std::to_string(raw.size()) +
                                " != configured " + std::to_string(config_.dimension));
    }
    double norm = 0.0;
    for (double x : raw) norm += x * x;
    norm = std::sqrt(norm);
    v.values.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        v.values[i] = norm == 0.0 ? 0.0f : static_cast<float>(raw[i] / norm);
    }
    return v;
}

}  // namespace ravu
