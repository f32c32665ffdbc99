#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace srr::config {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void read_reward(const json& section, reward::RewardConfig& cfg) {
    cfg.beta_base = section.value("beta_base", cfg.beta_base);
    cfg.beta_retrieval = section.value("beta_retrieval", cfg.beta_retrieval);
    cfg.beta_refine = section.value("beta_refine", cfg.beta_refine);
    cfg.eta_max = section.value("eta_max", cfg.eta_max);
    cfg.eta_min = section.value("eta_min", cfg.eta_min);
    cfg.c_start = section.value("c_start", cfg.c_start);
    cfg.c_max = section.value("c_max", cfg.c_max);
    cfg.d_top1_only = section.value("d_top1_only", cfg.d_top1_only);
}

void read_rollout(const json& section, rollout::RolloutConfig& cfg) {
    cfg.max_retrievals = section.value("max_retrievals", cfg.max_retrievals);
    cfg.max_total_tokens = section.value("max_total_tokens", cfg.max_total_tokens);
    cfg.sampling.temperature = section.value("temperature", cfg.sampling.temperature);
    cfg.sampling.top_p = section.value("top_p", cfg.sampling.top_p);
    cfg.prune_documents = section.value("prune_documents", cfg.prune_documents);
    cfg.system_prompt = section.value("system_prompt", cfg.system_prompt);
}

void read_retrieval(const json& section, retrieval::RetrievalConfig& cfg) {
    cfg.k = section.value("k", cfg.k);
    cfg.bm25_k1 = section.value("bm25_k1", cfg.bm25_k1);
    cfg.bm25_b = section.value("bm25_b", cfg.bm25_b);
    if (section.contains("backend")) {
        std::string backend = section.at("backend").get<std::string>();
        if (backend == "local") {
            cfg.backend = retrieval::Backend::Local;
        } else if (backend == "remote") {
            cfg.backend = retrieval::Backend::Remote;
        } else {
            throw std::runtime_error("config: unknown retrieval backend: " + backend);
        }
    }
    cfg.endpoint = section.value("endpoint", cfg.endpoint);
    cfg.timeout_ms = section.value("timeout_ms", cfg.timeout_ms);
}

void read_grpo(const json& section, grpo::GrpoConfig& cfg) {
    cfg.epsilon_clip = section.value("epsilon_clip", cfg.epsilon_clip);
    cfg.beta_kl = section.value("beta_kl", cfg.beta_kl);
    cfg.group_size = section.value("group_size", cfg.group_size);
    if (section.contains("ratio_mode")) {
        std::string mode = section.at("ratio_mode").get<std::string>();
        if (mode == "per_token") {
            cfg.ratio_mode = grpo::RatioMode::PerToken;
        } else if (mode == "per_sequence") {
            cfg.ratio_mode = grpo::RatioMode::PerSequence;
        } else {
            throw std::runtime_error("config: unknown ratio_mode: " + mode);
        }
    }
    if (section.contains("std_mode")) {
        std::string mode = section.at("std_mode").get<std::string>();
        if (mode == "population") {
            cfg.std_mode = grpo::StdMode::Population;
        } else if (mode == "sample") {
            cfg.std_mode = grpo::StdMode::Sample;
        } else {
            throw std::runtime_error("config: unknown std_mode: " + mode);
        }
    }
    cfg.std_floor = section.value("std_floor", cfg.std_floor);
}

}   // namespace

EngineConfig from_json(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error("config: not a JSON object");
    }
    EngineConfig cfg;
    if (doc.contains("reward")) read_reward(doc.at("reward"), cfg.reward);
    if (doc.contains("rollout")) read_rollout(doc.at("rollout"), cfg.rollout);
    if (doc.contains("retrieval")) read_retrieval(doc.at("retrieval"), cfg.rollout.retrieval);
    if (doc.contains("grpo")) read_grpo(doc.at("grpo"), cfg.grpo);
    return cfg;
}

EngineConfig load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json(text);
}

reward::RewardConfig reward_from_json(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error("reward config: not a JSON object");
    }
    reward::RewardConfig cfg;
    read_reward(doc, cfg);
    return cfg;
}

std::string to_json(const EngineConfig& cfg) {
    ordered_json doc;
    doc["reward"] = {{"beta_base", cfg.reward.beta_base},
                     {"beta_retrieval", cfg.reward.beta_retrieval},
                     {"beta_refine", cfg.reward.beta_refine},
                     {"eta_max", cfg.reward.eta_max},
                     {"eta_min", cfg.reward.eta_min},
                     {"c_start", cfg.reward.c_start},
                     {"c_max", cfg.reward.c_max},
                     {"d_top1_only", cfg.reward.d_top1_only}};
    doc["rollout"] = {{"max_retrievals", cfg.rollout.max_retrievals},
                      {"max_total_tokens", cfg.rollout.max_total_tokens},
                      {"temperature", cfg.rollout.sampling.temperature},
                      {"top_p", cfg.rollout.sampling.top_p},
                      {"prune_documents", cfg.rollout.prune_documents},
                      {"system_prompt", cfg.rollout.system_prompt}};
    doc["retrieval"] = {
        {"k", cfg.rollout.retrieval.k},
        {"bm25_k1", cfg.rollout.retrieval.bm25_k1},
        {"bm25_b", cfg.rollout.retrieval.bm25_b},
        {"backend",
         cfg.rollout.retrieval.backend == retrieval::Backend::Remote ? "remote"
                                                                     : "local"},
        {"endpoint", cfg.rollout.retrieval.endpoint},
        {"timeout_ms", cfg.rollout.retrieval.timeout_ms}};
    doc["grpo"] = {
        {"epsilon_clip", cfg.grpo.epsilon_clip},
        {"beta_kl", cfg.grpo.beta_kl},
        {"group_size", cfg.grpo.group_size},
        {"ratio_mode",
         cfg.grpo.ratio_mode == grpo::RatioMode::PerSequence ? "per_sequence"
                                                             : "per_token"},
        {"std_mode",
         cfg.grpo.std_mode == grpo::StdMode::Sample ? "sample" : "population"},
        {"std_floor", cfg.grpo.std_floor}};
    return doc.dump();
}

void apply_env_overrides(EngineConfig& cfg) {
    if (const char* endpoint = std::getenv("SRR_SEARCH_ENDPOINT");
        endpoint != nullptr && endpoint[0] != '\0') {
        cfg.rollout.retrieval.backend = retrieval::Backend::Remote;
        cfg.rollout.retrieval.endpoint = endpoint;
    }
    if (const char* timeout = std::getenv("SRR_HTTP_TIMEOUT_MS");
        timeout != nullptr && timeout[0] != '\0') {
        try {
            cfg.rollout.retrieval.timeout_ms = std::stoi(timeout);
        } catch (const std::exception&) {
            throw std::runtime_error("SRR_HTTP_TIMEOUT_MS is not an integer");
        }
    }
}

void validate(const EngineConfig& cfg) {
    cfg.reward.validate();
    cfg.rollout.validate();
    cfg.grpo.validate();
}

}   // namespace srr::config
