#pragma once

// Engine configuration: one JSON file with "reward", "rollout", "retrieval",
// and "grpo" sections, each overriding defaults field by field, plus
// environment overrides for endpoints and timeouts.

#include <string>

#include "grpo.hpp"
#include "reward.hpp"
#include "rollout.hpp"

namespace srr::config {

struct EngineConfig {
    reward::RewardConfig reward;
    rollout::RolloutConfig rollout;   // carries the retrieval section
    grpo::GrpoConfig grpo;
};

EngineConfig from_json(const std::string& json_text);   // throws std::runtime_error
EngineConfig load_file(const std::string& path);

// Flat {"beta_base": ..., ...} object overriding reward defaults.
reward::RewardConfig reward_from_json(const std::string& json_text);

std::string to_json(const EngineConfig& cfg);

// SRR_SEARCH_ENDPOINT switches retrieval to the remote backend at that URL;
// SRR_HTTP_TIMEOUT_MS overrides the retrieval timeout.
void apply_env_overrides(EngineConfig& cfg);

void validate(const EngineConfig& cfg);   // throws std::invalid_argument

}   // namespace srr::config
