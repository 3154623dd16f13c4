#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "ravu/backends.hpp"

namespace ravu::testing {

// Replays canned replies per role; roles without a script fall through to
// the mock. Every generate call is recorded.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(MockConfig config = {}) : mock_(config) {}

    void script(Role role, std::vector<std::string> replies) {
        std::lock_guard lock(mu_);
        auto& q = replies_[role];
        q.insert(q.end(), replies.begin(), replies.end());
    }

    // Reply used once a role's queue is empty (instead of the mock).
    void always(Role role, std::string reply) {
        std::lock_guard lock(mu_);
        fixed_[role] = std::move(reply);
    }

    std::string generate(const PromptBundle& bundle) override {
        {
            std::lock_guard lock(mu_);
            calls_.push_back(bundle);
            auto& q = replies_[bundle.role];
            if (!q.empty()) {
                auto r = q.front();
                q.pop_front();
                return r;
            }
            if (auto it = fixed_.find(bundle.role); it != fixed_.end()) return it->second;
        }
        return mock_.generate(bundle);
    }

    EmbeddingVector embed(std::string_view text) override {
        std::lock_guard lock(mu_);
        ++embeds_;
        return mock_.embed(text);
    }

    std::size_t dimension() const override { return mock_.dimension(); }

    std::size_t calls(Role role) const {
        std::lock_guard lock(mu_);
        std::size_t n = 0;
        for (const auto& c : calls_) n += c.role == role ? 1 : 0;
        return n;
    }
    std::size_t total_calls() const {
        std::lock_guard lock(mu_);
        return calls_.size();
    }
    std::size_t embeds() const {
        std::lock_guard lock(mu_);
        return embeds_;
    }
    std::vector<PromptBundle> recorded() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

private:
    mutable std::mutex mu_;
    MockBackend mock_;
    std::map<Role, std::deque<std::string>> replies_;
    std::map<Role, std::string> fixed_;
    std::vector<PromptBundle> calls_;
    std::size_t embeds_ = 0;
};

}  // namespace ravu::testing
