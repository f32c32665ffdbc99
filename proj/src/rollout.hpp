#pragma once

// Multi-turn rollout orchestration: drives a policy backend turn by turn,
// intercepts closed queries, injects retrieved documents, prunes refined
// document blocks out of later contexts, enforces retrieval/token limits,
// and accounts prompt/generation tokens.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "protocol.hpp"
#include "retrieval.hpp"
#include "reward.hpp"

namespace srr::rollout {

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual long long count(std::string_view text) const = 0;
};

// Desk-scale default. Counts are not comparable to model tokenizers, but
// relative comparisons (pruned vs unpruned) hold for any tokenizer.
class WhitespaceTokenizer final : public Tokenizer {
public:
    long long count(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

// Prefix of text containing at most max_tokens whitespace tokens.
std::string take_tokens(std::string_view text, long long max_tokens);

struct Sampling {
    double temperature = 0.7;
    double top_p = 0.9;
};

struct GenerationRequest {
    std::string context;
    std::vector<std::string> stop_markers;
    Sampling sampling;
    long long token_budget = 0;   // backend must not generate past this
};

struct GenerationResult {
    std::string text;
    long long generated_token_count = 0;
    std::optional<std::vector<double>> token_logprobs;
};

// Terminal backend failure, raised only after the backend's own retries.
class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PolicyBackend {
public:
    virtual ~PolicyBackend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;

    // Fresh backend with independent sampling state; scripted backends
    // restart from their first turn.
    virtual std::unique_ptr<PolicyBackend> fork() const = 0;
};

struct RolloutConfig {
    int max_retrievals = 5;
    long long max_total_tokens = 8192;   // generation budget per rollout
    Sampling sampling;
    bool prune_documents = true;
    retrieval::RetrievalConfig retrieval;
    std::string system_prompt;   // empty selects the built-in prompt

    void validate() const;   // throws std::invalid_argument
};

const std::string& default_system_prompt();

// Injected into the context (inside a documents block) when a query arrives
// after the retrieval limit; never recorded in the trajectory.
const std::string& retrieval_limit_notice();

// Drops every documents block whose refinement is already present; the
// newest block survives until its refinement lands.
std::vector<protocol::Segment> prune_context(
    const std::vector<protocol::Segment>& segments);

struct CallRecord {
    std::string context;
    std::string generated;
    long long generated_tokens = 0;
};

struct TokenTotals {
    long long tokens_fed = 0;
    long long tokens_generated = 0;
};

TokenTotals account_tokens(const std::vector<CallRecord>& calls,
                           const Tokenizer& tokenizer = default_tokenizer());

struct RolloutResult {
    protocol::Trajectory trajectory;
    std::vector<CallRecord> calls;
    std::vector<std::string> notes;   // retrieval failures, budget breaches
};

RolloutResult run_rollout(const std::string& question, PolicyBackend& policy,
                          retrieval::Retriever& retriever,
                          const RolloutConfig& cfg,
                          const Tokenizer& tokenizer = default_tokenizer());

struct ScoredRollout {
    protocol::Trajectory trajectory;
    reward::RewardBreakdown reward;
};

// group_size independent rollouts from forks of the policy, each scored.
// Throws std::invalid_argument when group_size < 2.
std::vector<ScoredRollout> run_group(
    const std::string& question, const std::string& gold,
    const PolicyBackend& policy, retrieval::Retriever& retriever,
    const RolloutConfig& cfg, const reward::RewardConfig& reward_cfg,
    int group_size, const Tokenizer& tokenizer = default_tokenizer());

}   // namespace srr::rollout
