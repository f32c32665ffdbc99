#pragma once

// Policy backends: scripted turn players for tests and synthetic episodes,
// and an HTTP client speaking the common chat-completions wire shape.

#include <memory>
#include <string>
#include <vector>

#include "rollout.hpp"

namespace srr::rollout {

// Plays back a fixed list of turn chunks. Each generate call returns the
// next chunk, truncated to the request's token budget; an exhausted script
// returns empty text (the engine then truncates the rollout). With
// repeat_last, the final chunk replays forever.
class ScriptedPolicy final : public PolicyBackend {
public:
    explicit ScriptedPolicy(std::vector<std::string> turns,
                            bool repeat_last = false);

    GenerationResult generate(const GenerationRequest& request) override;
    std::unique_ptr<PolicyBackend> fork() const override;

private:
    std::vector<std::string> turns_;
    bool repeat_last_;
    std::size_t next_ = 0;
};

// Issues think+query turns forever; exercises the retrieval limit.
std::unique_ptr<PolicyBackend> always_query_policy();

// Single turn: think + boxed answer, no retrieval.
std::unique_ptr<PolicyBackend> direct_answer_policy(const std::string& answer);

struct HttpPolicyConfig {
    std::string endpoint;            // http://host:port[/path]; bare hosts get
                                     // /v1/chat/completions appended
    std::string model = "default";
    int timeout_ms = 30000;
    int max_attempts = 3;
    int backoff_initial_ms = 200;    // doubled after each failed attempt
};

// Remote generation over HTTP POST. Request body: {model, messages,
// temperature, top_p, stop, max_tokens}. Accepts {"text": ...} or OpenAI
// choices[0] response shapes; re-appends the stop marker the server consumed.
// Retries transport errors and 5xx/429 with exponential backoff, then throws
// PolicyError.
class HttpPolicy final : public PolicyBackend {
public:
    explicit HttpPolicy(HttpPolicyConfig cfg);

    GenerationResult generate(const GenerationRequest& request) override;
    std::unique_ptr<PolicyBackend> fork() const override;

private:
    HttpPolicyConfig cfg_;
};

}   // namespace srr::rollout
