#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "config.hpp"

using namespace srr;
using config::EngineConfig;

namespace {

struct EnvGuard {
    explicit EnvGuard(const char* name) : name_(name) { unsetenv(name); }
    ~EnvGuard() { unsetenv(name_); }
    void set(const char* value) { setenv(name_, value, 1); }
    const char* name_;
};

}   // namespace

TEST_CASE("empty object keeps every default") {
    EngineConfig cfg = config::from_json("{}");
    CHECK(cfg.reward.beta_base == 0.1);
    CHECK(cfg.reward.c_start == 2);
    CHECK(cfg.reward.c_max == 5);
    CHECK(cfg.reward.d_top1_only == false);
    CHECK(cfg.rollout.max_retrievals == 5);
    CHECK(cfg.rollout.prune_documents == true);
    CHECK(cfg.rollout.retrieval.backend == retrieval::Backend::Local);
    CHECK(cfg.grpo.epsilon_clip == 0.2);
    CHECK(cfg.grpo.ratio_mode == grpo::RatioMode::PerToken);
    CHECK(cfg.grpo.std_mode == grpo::StdMode::Population);
}

TEST_CASE("sections override field by field") {
    EngineConfig cfg = config::from_json(R"({
        "reward": {"beta_base": 0.5, "c_start": 1, "d_top1_only": true},
        "rollout": {"max_retrievals": 3, "temperature": 0.1,
                    "system_prompt": "Answer briefly.", "prune_documents": false},
        "retrieval": {"k": 7, "bm25_k1": 1.5, "backend": "remote",
                      "endpoint": "http://127.0.0.1:9", "timeout_ms": 250},
        "grpo": {"epsilon_clip": 0.3, "beta_kl": 0.01, "group_size": 8,
                 "ratio_mode": "per_sequence", "std_mode": "sample"}
    })");
    CHECK(cfg.reward.beta_base == 0.5);
    CHECK(cfg.reward.c_start == 1);
    CHECK(cfg.reward.d_top1_only == true);
    CHECK(cfg.reward.beta_retrieval == 0.2);   // untouched default
    CHECK(cfg.rollout.max_retrievals == 3);
    CHECK(cfg.rollout.sampling.temperature == 0.1);
    CHECK(cfg.rollout.system_prompt == "Answer briefly.");
    CHECK(cfg.rollout.prune_documents == false);
    CHECK(cfg.rollout.retrieval.k == 7);
    CHECK(cfg.rollout.retrieval.bm25_k1 == 1.5);
    CHECK(cfg.rollout.retrieval.backend == retrieval::Backend::Remote);
    CHECK(cfg.rollout.retrieval.endpoint == "http://127.0.0.1:9");
    CHECK(cfg.rollout.retrieval.timeout_ms == 250);
    CHECK(cfg.grpo.epsilon_clip == 0.3);
    CHECK(cfg.grpo.beta_kl == 0.01);
    CHECK(cfg.grpo.group_size == 8);
    CHECK(cfg.grpo.ratio_mode == grpo::RatioMode::PerSequence);
    CHECK(cfg.grpo.std_mode == grpo::StdMode::Sample);
}

TEST_CASE("bad inputs") {
    CHECK_THROWS_AS(config::from_json("not json"), std::runtime_error);
    CHECK_THROWS_AS(config::from_json("[1,2]"), std::runtime_error);
    CHECK_THROWS_AS(config::from_json(R"({"retrieval":{"backend":"psychic"}})"),
                    std::runtime_error);
    CHECK_THROWS_AS(config::from_json(R"({"grpo":{"ratio_mode":"per_batch"}})"),
                    std::runtime_error);
    CHECK_THROWS_AS(config::from_json(R"({"grpo":{"std_mode":"robust"}})"),
                    std::runtime_error);
    CHECK_THROWS_AS(config::load_file("/nonexistent/config.json"),
                    std::runtime_error);
}

TEST_CASE("json round trip") {
    EngineConfig cfg = config::from_json(R"({
        "reward": {"beta_refine": 0.7},
        "retrieval": {"backend": "remote", "endpoint": "http://h:1/api"},
        "grpo": {"ratio_mode": "per_sequence"}
    })");
    EngineConfig back = config::from_json(config::to_json(cfg));
    CHECK(back.reward.beta_refine == 0.7);
    CHECK(back.rollout.retrieval.backend == retrieval::Backend::Remote);
    CHECK(back.rollout.retrieval.endpoint == "http://h:1/api");
    CHECK(back.grpo.ratio_mode == grpo::RatioMode::PerSequence);
    CHECK(config::to_json(back) == config::to_json(cfg));
}

TEST_CASE("load_file") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "srr_test_config.json";
    {
        std::ofstream out(path);
        out << R"({"rollout": {"max_total_tokens": 99}})";
    }
    EngineConfig cfg = config::load_file(path.string());
    CHECK(cfg.rollout.max_total_tokens == 99);
    fs::remove(path);
}

TEST_CASE("reward_from_json is a flat object") {
    reward::RewardConfig cfg =
        config::reward_from_json(R"({"c_start": 3, "eta_max": 0.4})");
    CHECK(cfg.c_start == 3);
    CHECK(cfg.eta_max == 0.4);
    CHECK(cfg.beta_base == 0.1);
    CHECK_THROWS_AS(config::reward_from_json("[]"), std::runtime_error);
}

TEST_CASE("environment overrides") {
    EnvGuard search("SRR_SEARCH_ENDPOINT");
    EnvGuard timeout("SRR_HTTP_TIMEOUT_MS");

    SUBCASE("unset leaves the config alone") {
        EngineConfig cfg;
        config::apply_env_overrides(cfg);
        CHECK(cfg.rollout.retrieval.backend == retrieval::Backend::Local);
    }
    SUBCASE("search endpoint flips the backend to remote") {
        search.set("http://127.0.0.1:8080");
        EngineConfig cfg;
        config::apply_env_overrides(cfg);
        CHECK(cfg.rollout.retrieval.backend == retrieval::Backend::Remote);
        CHECK(cfg.rollout.retrieval.endpoint == "http://127.0.0.1:8080");
    }
    SUBCASE("empty endpoint value is ignored") {
        search.set("");
        EngineConfig cfg;
        config::apply_env_overrides(cfg);
        CHECK(cfg.rollout.retrieval.backend == retrieval::Backend::Local);
    }
    SUBCASE("timeout override") {
        timeout.set("1234");
        EngineConfig cfg;
        config::apply_env_overrides(cfg);
        CHECK(cfg.rollout.retrieval.timeout_ms == 1234);
    }
    SUBCASE("non-integer timeout throws") {
        timeout.set("soon");
        EngineConfig cfg;
        CHECK_THROWS_AS(config::apply_env_overrides(cfg), std::runtime_error);
    }
}

TEST_CASE("validate propagates to every section") {
    EngineConfig cfg;
    CHECK_NOTHROW(config::validate(cfg));
    SUBCASE("reward") {
        cfg.reward.c_start = cfg.reward.c_max;
        CHECK_THROWS_AS(config::validate(cfg), std::invalid_argument);
    }
    SUBCASE("rollout") {
        cfg.rollout.max_retrievals = 0;
        CHECK_THROWS_AS(config::validate(cfg), std::invalid_argument);
    }
    SUBCASE("grpo") {
        cfg.grpo.group_size = 0;
        CHECK_THROWS_AS(config::validate(cfg), std::invalid_argument);
    }
}
