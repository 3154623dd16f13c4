#include "ravu/config.hpp"

#include <cstdlib>
#include <fstream>

namespace ravu {

namespace {

const char* env(const char* name) {
    const char* v = std::getenv(name);
    return (v && *v) ? v : nullptr;
}

}  // namespace

Config config_from_json(const nlohmann::json& j) {
    Config c;
    if (!j.is_object()) throw ParseError("config", "expected a JSON object");
    c.provider = j.value("provider", c.provider);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.token = j.value("token", c.token);
    c.model = j.value("model", c.model);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.deadline_s = j.value("deadline_s", c.deadline_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.seed = j.value("seed", c.seed);
    c.context_frames = j.value("context_frames", c.context_frames);
    c.rerank_k = j.value("rerank_k", c.rerank_k);
    c.budget = j.value("budget", c.budget);
    c.global_budget = j.value("global_budget", c.global_budget);
    c.per_event_candidates = j.value("per_event_candidates", c.per_event_candidates);
    c.min_iou = j.value("min_iou", c.min_iou);
    c.fps = j.value("fps", c.fps);
    c.workers = j.value("workers", c.workers);
    if (j.contains("assets_dir")) c.assets_dir = j["assets_dir"].get<std::string>();
    if (c.provider != "mock" && c.provider != "remote") {
        throw ParseError("provider", "expected 'mock' or 'remote', got '" + c.provider + "'");
    }
    return c;
}

Config load_config(const std::optional<std::filesystem::path>& path) {
    std::optional<std::filesystem::path> source = path;
    if (!source) {
        if (const char* p = env("RAVU_CONFIG")) source = p;
    }
    Config c;
    if (source) {
        std::ifstream in(*source);
        if (!in) throw NotFound("config file not found: " + source->string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("config", e.what());
        }
        c = config_from_json(j);
        if (!c.assets_dir.empty() && c.assets_dir.is_relative()) {
            c.assets_dir = source->parent_path() / c.assets_dir;
        }
    }
    if (const char* v = env("RAVU_ENDPOINT")) c.endpoint = v;
    if (const char* v = env("RAVU_TOKEN")) c.token = v;
    if (const char* v = env("RAVU_EMBED_DIM")) {
        try {
            c.embed_dim = static_cast<std::size_t>(std::stoul(v));
        } catch (const std::exception&) {
            throw ParseError("RAVU_EMBED_DIM", std::string("not an integer: ") + v);
        }
    }
    return c;
}

std::unique_ptr<Backend> make_backend(const Config& config) {
    if (config.provider == "remote") {
        RemoteConfig rc;
        rc.endpoint = config.endpoint;
        rc.token = config.token;
        rc.model = config.model;
        rc.dimension = config.embed_dim;
        rc.deadline = std::chrono::milliseconds(static_cast<long long>(config.deadline_s * 1000));
        rc.max_in_flight = config.max_in_flight;
        return std::make_unique<RemoteBackend>(rc);
    }
    return std::make_unique<MockBackend>(MockConfig{config.embed_dim, config.seed});
}

}  // namespace ravu
