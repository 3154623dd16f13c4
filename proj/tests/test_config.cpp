#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "ravu/config.hpp"
#include "ravu/errors.hpp"
#include "ravu/graph_builder.hpp"

using namespace ravu;

namespace {

// Clears the variables load_config reads before and after each test.
class ConfigEnv : public ::testing::Test {
protected:
    void SetUp() override {
        for (const char* v : {"RAVU_CONFIG", "RAVU_ENDPOINT", "RAVU_TOKEN", "RAVU_EMBED_DIM"}) {
            unsetenv(v);
        }
        dir_ = std::filesystem::temp_directory_path() / "ravu_test_config";
        std::filesystem::remove_all(dir_);
    }
    void TearDown() override {
        SetUp();
        std::filesystem::remove_all(dir_);
    }
    std::filesystem::path dir_;
};

}  // namespace

TEST_F(ConfigEnv, DefaultsWithoutFile) {
    const auto c = load_config();
    EXPECT_EQ(c.provider, "mock");
    EXPECT_EQ(c.budget, 5u);
    EXPECT_EQ(c.global_budget, 10u);
    EXPECT_EQ(c.rerank_k, 10u);
    EXPECT_DOUBLE_EQ(c.min_iou, 0.1);
    EXPECT_EQ(c.embed_dim, 256u);
}

TEST_F(ConfigEnv, FileThenEnvironmentOverrides) {
    write_file(dir_ / "c.json",
               R"({"provider": "remote", "endpoint": "http://a", "token": "t1", "embed_dim": 8,
                   "budget": 7, "assets_dir": "assets"})");
    setenv("RAVU_CONFIG", (dir_ / "c.json").c_str(), 1);
    auto c = load_config();
    EXPECT_EQ(c.provider, "remote");
    EXPECT_EQ(c.budget, 7u);
    EXPECT_EQ(c.endpoint, "http://a");
    EXPECT_EQ(c.assets_dir, dir_ / "assets");

    setenv("RAVU_ENDPOINT", "http://b", 1);
    setenv("RAVU_TOKEN", "t2", 1);
    setenv("RAVU_EMBED_DIM", "32", 1);
    c = load_config();
    EXPECT_EQ(c.endpoint, "http://b");
    EXPECT_EQ(c.token, "t2");
    EXPECT_EQ(c.embed_dim, 32u);

    setenv("RAVU_EMBED_DIM", "lots", 1);
    EXPECT_THROW(load_config(), ParseError);
}

TEST_F(ConfigEnv, ExplicitPathWinsOverVariable) {
    write_file(dir_ / "a.json", R"({"budget": 3})");
    write_file(dir_ / "b.json", R"({"budget": 4, "assets_dir": "/abs"})");
    setenv("RAVU_CONFIG", (dir_ / "a.json").c_str(), 1);
    const auto c = load_config(dir_ / "b.json");
    EXPECT_EQ(c.budget, 4u);
    EXPECT_EQ(c.assets_dir, std::filesystem::path("/abs"));
}

TEST_F(ConfigEnv, BadFiles) {
    EXPECT_THROW(load_config(dir_ / "missing.json"), NotFound);
    write_file(dir_ / "bad.json", "{oops");
    EXPECT_THROW(load_config(dir_ / "bad.json"), ParseError);
    write_file(dir_ / "p.json", R"({"provider": "magic"})");
    EXPECT_THROW(load_config(dir_ / "p.json"), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json::array()), ParseError);
}

TEST_F(ConfigEnv, MakeBackendHonoursProvider) {
    Config c;
    c.embed_dim = 16;
    EXPECT_EQ(make_backend(c)->dimension(), 16u);
    c.provider = "remote";
    c.endpoint = "http://127.0.0.1:1";
    EXPECT_EQ(make_backend(c)->dimension(), 16u);
    c.endpoint = "gopher://x";
    EXPECT_THROW(make_backend(c), std::invalid_argument);
}
