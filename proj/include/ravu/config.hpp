#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ravu/backends.hpp"

namespace ravu {

struct Config {
    std::string provider = "mock";  // "mock" | "remote"
    std::string endpoint;
    std::string token;
    std::string model;
    std::size_t embed_dim = 256;
    double deadline_s = 60.0;
    int max_retries = kDefaultMaxRetries;
    int max_in_flight = 4;
    std::uint64_t seed = 0;

    // Neighbouring frame descriptions passed alongside a frame to graph building.
    int context_frames = 2;
    std::size_t rerank_k = 10;
    std::size_t budget = 5;
    std::size_t global_budget = 10;
    std::size_t per_event_candidates = 1;
    double min_iou = 0.1;
    double fps = 1.0;
    int workers = 1;

    // Holds prompts/<role>.txt and breakdown_examples/*.plan.
    std::filesystem::path assets_dir;
};

// Reads `path` (JSON) when given, else $RAVU_CONFIG when set, then applies
// RAVU_ENDPOINT / RAVU_TOKEN / RAVU_EMBED_DIM overrides.
Config load_config(const std::optional<std::filesystem::path>& path = std::nullopt);

Config config_from_json(const nlohmann::json& j);

std::unique_ptr<Backend> make_backend(const Config& config);

}  // namespace ravu
