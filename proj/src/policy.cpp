#include "policy.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace srr::rollout {

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> turns, bool repeat_last)
    : turns_(std::move(turns)), repeat_last_(repeat_last) {}

GenerationResult ScriptedPolicy::generate(const GenerationRequest& request) {
    std::size_t turn = next_;
    if (turn >= turns_.size()) {
        if (!repeat_last_ || turns_.empty()) return GenerationResult{};
        turn = turns_.size() - 1;
    }
    ++next_;

    std::string text = take_tokens(turns_[turn], request.token_budget);
    GenerationResult out;
    out.generated_token_count = default_tokenizer().count(text);
    out.text = std::move(text);
    return out;
}

std::unique_ptr<PolicyBackend> ScriptedPolicy::fork() const {
    return std::make_unique<ScriptedPolicy>(turns_, repeat_last_);
}

std::unique_ptr<PolicyBackend> always_query_policy() {
    return std::make_unique<ScriptedPolicy>(
        std::vector<std::string>{
            "<think>More evidence is needed.</think>\n<query>additional supporting facts</query>"},
        /*repeat_last=*/true);
}

std::unique_ptr<PolicyBackend> direct_answer_policy(const std::string& answer) {
    return std::make_unique<ScriptedPolicy>(std::vector<std::string>{
        "<think>No retrieval is needed for this one.</think>\n<answer>The answer is \\boxed{" +
        answer + "}</answer>"});
}

namespace {

// "http://host:port/path" -> {"http://host:port", "/path"}
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    std::size_t scheme = endpoint.find("://");
    std::size_t path_start = scheme == std::string::npos
                                 ? endpoint.find('/')
                                 : endpoint.find('/', scheme + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(0, path_start);
    std::string path = endpoint.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {base, path};
}

// Servers strip the stop sequence they matched; the engine needs it back to
// see a closed tag.
void reappend_stop_marker(std::string& text) {
    for (const char* tag : {"query", "answer"}) {
        std::string open = std::string("<") + tag + ">";
        std::string close = std::string("</") + tag + ">";
        std::size_t last_open = text.rfind(open);
        if (last_open == std::string::npos) continue;
        if (text.find(close, last_open) == std::string::npos) {
            text += close;
            return;
        }
    }
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

}   // namespace

HttpPolicy::HttpPolicy(HttpPolicyConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) {
        throw std::invalid_argument("http policy: endpoint required");
    }
    if (cfg_.max_attempts < 1) cfg_.max_attempts = 1;
}

GenerationResult HttpPolicy::generate(const GenerationRequest& request) {
    auto [base, path] = split_endpoint(cfg_.endpoint);
    if (path.empty()) path = "/v1/chat/completions";

    nlohmann::json body = {
        {"model", cfg_.model},
        {"messages",
         nlohmann::json::array({{{"role", "user"}, {"content", request.context}}})},
        {"temperature", request.sampling.temperature},
        {"top_p", request.sampling.top_p},
        {"stop", request.stop_markers},
        {"max_tokens", request.token_budget},
    };
    std::string payload = body.dump();

    std::string last_failure = "no attempts made";
    int backoff_ms = cfg_.backoff_initial_ms;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }

        httplib::Client client(base);
        client.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
        client.set_read_timeout(0, cfg_.timeout_ms * 1000LL);
        client.set_write_timeout(0, cfg_.timeout_ms * 1000LL);
        httplib::Result res = client.Post(path, payload, "application/json");

        if (!res) {
            last_failure = std::string("transport: ") + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_failure = "http status " + std::to_string(res->status);
            if (retryable_status(res->status)) continue;
            break;
        }

        nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            last_failure = "malformed response body";
            continue;
        }

        GenerationResult out;
        if (doc.contains("text") && doc["text"].is_string()) {
            out.text = doc["text"].get<std::string>();
        } else if (doc.contains("choices") && doc["choices"].is_array() &&
                   !doc["choices"].empty()) {
            const nlohmann::json& choice = doc["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content")) {
                out.text = choice["message"]["content"].get<std::string>();
            } else if (choice.contains("text")) {
                out.text = choice["text"].get<std::string>();
            } else {
                last_failure = "choice carries no text";
                continue;
            }
        } else {
            last_failure = "response carries no text";
            continue;
        }

        reappend_stop_marker(out.text);
        if (doc.contains("usage") && doc["usage"].contains("completion_tokens")) {
            out.generated_token_count =
                doc["usage"]["completion_tokens"].get<long long>();
        } else {
            out.generated_token_count = default_tokenizer().count(out.text);
        }
        return out;
    }
    throw PolicyError("remote policy failed: " + last_failure);
}

std::unique_ptr<PolicyBackend> HttpPolicy::fork() const {
    return std::make_unique<HttpPolicy>(cfg_);
}

}   // namespace srr::rollout
