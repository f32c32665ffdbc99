#include "rollout.hpp"

#include <cctype>

namespace srr::rollout {

long long WhitespaceTokenizer::count(std::string_view text) const {
    long long tokens = 0;
    bool in_token = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_token) ++tokens;
        in_token = !space;
    }
    return tokens;
}

const Tokenizer& default_tokenizer() {
    static const WhitespaceTokenizer tokenizer;
    return tokenizer;
}

std::string take_tokens(std::string_view text, long long max_tokens) {
    if (max_tokens <= 0) return "";
    long long tokens = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (!space && !in_token) {
            if (tokens == max_tokens) return std::string(text.substr(0, i));
            ++tokens;
        }
        in_token = !space;
    }
    return std::string(text);
}

void RolloutConfig::validate() const {
    if (max_retrievals < 1) {
        throw std::invalid_argument("rollout: max_retrievals must be >= 1");
    }
    if (max_total_tokens < 1) {
        throw std::invalid_argument("rollout: max_total_tokens must be >= 1");
    }
    if (sampling.temperature < 0 || sampling.top_p <= 0 || sampling.top_p > 1) {
        throw std::invalid_argument("rollout: bad sampling parameters");
    }
    retrieval.validate();
}

const std::string& default_system_prompt() {
    static const std::string prompt = R"(You are a helpful assistant who employs a step-by-step approach using the Wikipedia search tool. Each step must be based ONLY on currently known information and lead to either a new search query or a final answer. Continue this sequential process until you have sufficient information to answer.

You must STRICTLY follow the output format below:
1. Place all reasoning, thinking, explanations, and process language INSIDE <think>...</think> tags.
2. Place query INSIDE <query>...</query> tags for wikipedia search.
3. After receiving search results (in <documents>...</documents>), based on currently known information, extract information relevant to the user question and current query INSIDE <documents_refine>...</documents_refine> tags.
4. Place the final, direct, and concise answer ONLY INSIDE <answer>...</answer> tags, and wrap the direct, concise result WITHIN \boxed{}.
5. Do not output any text outside the <think>, <query>, <documents_refine>, and <answer> tags.

For example:
<think>This is your thinking process.</think>
<query>This is a search query for retrieval.</query>
<documents>This is the search result.</documents>
<documents_refine>This is the refined information extracted from the documents that are most relevant to the query and enough to promote the next step.</documents_refine>
<think>Further reasoning, explanation or search.</think>
<answer>The final answer is \boxed{exact answer here}</answer>)";
    return prompt;
}

const std::string& retrieval_limit_notice() {
    static const std::string notice =
        "Retrieval limit reached; no further documents will be provided. "
        "Answer using the information gathered so far.";
    return notice;
}

std::vector<protocol::Segment> prune_context(
    const std::vector<protocol::Segment>& segments) {
    std::vector<protocol::Segment> out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        bool refined = segments[i].kind == protocol::SegmentKind::Documents &&
                       i + 1 < segments.size() &&
                       segments[i + 1].kind == protocol::SegmentKind::DocumentsRefine;
        if (!refined) out.push_back(segments[i]);
    }
    return out;
}

TokenTotals account_tokens(const std::vector<CallRecord>& calls,
                           const Tokenizer& tokenizer) {
    TokenTotals totals;
    for (const CallRecord& call : calls) {
        totals.tokens_fed += tokenizer.count(call.context);
        totals.tokens_generated += call.generated_tokens;
    }
    return totals;
}

namespace {

std::string_view trim_trailing_space(std::string_view text) {
    while (!text.empty() &&
           std::isspace(static_cast<unsigned char>(text.back())) != 0) {
        text.remove_suffix(1);
    }
    return text;
}

std::string build_context(const std::string& system_prompt,
                          const std::string& question,
                          const std::vector<protocol::Segment>& view,
                          bool prune) {
    std::string rendered =
        protocol::render_segments(prune ? prune_context(view) : view);
    std::string context = system_prompt + "\n\nQuestion: " + question;
    if (!rendered.empty()) {
        context += "\n\n" + rendered;
    }
    return context;
}

}   // namespace

RolloutResult run_rollout(const std::string& question, PolicyBackend& policy,
                          retrieval::Retriever& retriever,
                          const RolloutConfig& cfg, const Tokenizer& tokenizer) {
    cfg.validate();

    const std::string& system_prompt =
        cfg.system_prompt.empty() ? default_system_prompt() : cfg.system_prompt;

    RolloutResult result;
    // view additionally holds engine notices shown to the policy; the
    // trajectory itself never contains them.
    std::vector<protocol::Segment> trajectory_segments;
    std::vector<protocol::Segment> view_segments;
    int retrievals_done = 0;
    long long generated_total = 0;
    bool truncated = false;
    bool answered = false;

    while (!answered) {
        long long remaining = cfg.max_total_tokens - generated_total;
        if (remaining <= 0) {
            truncated = true;
            break;
        }

        GenerationRequest request{
            build_context(system_prompt, question, view_segments,
                          cfg.prune_documents),
            {"</query>", "</answer>"},
            cfg.sampling,
            remaining};

        GenerationResult generation;
        try {
            generation = policy.generate(request);
        } catch (const PolicyError& error) {
            result.notes.push_back(std::string("policy failure: ") + error.what());
            truncated = true;
            break;
        }

        if (generation.generated_token_count > remaining) {
            result.notes.push_back("policy exceeded the token budget");
            truncated = true;
            break;
        }
        if (generation.text.empty()) {
            truncated = true;
            break;
        }
        result.calls.push_back(CallRecord{request.context, generation.text,
                                          generation.generated_token_count});
        generated_total += generation.generated_token_count;

        protocol::ParseResult parsed = protocol::parse_trajectory(generation.text);
        bool injected_documents = false;
        for (const protocol::Segment& segment : parsed.segments) {
            if (segment.kind == protocol::SegmentKind::Documents) {
                // Document blocks are the engine's to write, never the
                // policy's; emitting one forfeits the rollout.
                injected_documents = true;
                break;
            }
            trajectory_segments.push_back(segment);
            view_segments.push_back(segment);
        }
        if (!parsed.ok() || injected_documents) {
            if (injected_documents) {
                result.notes.push_back("policy emitted a documents block");
            } else {
                result.notes.push_back(
                    std::string("malformed generation: ") +
                    protocol::parse_error_name(parsed.error->kind));
            }
            truncated = true;
            break;
        }

        protocol::StopEvent event =
            protocol::detect_stop_event(trim_trailing_space(generation.text));
        if (event == protocol::StopEvent::AnswerClosed) {
            answered = true;
        } else if (event == protocol::StopEvent::QueryClosed) {
            const protocol::Segment& query = trajectory_segments.back();
            if (retrievals_done < cfg.max_retrievals) {
                retrieval::FetchResult fetched =
                    retriever.fetch(query.text, cfg.retrieval.k);
                if (fetched.error.has_value()) {
                    result.notes.push_back(*fetched.error);
                }
                protocol::Segment block = protocol::make_segment(
                    protocol::SegmentKind::Documents,
                    retrieval::format_documents_block(fetched.hits));
                trajectory_segments.push_back(block);
                view_segments.push_back(block);
                ++retrievals_done;
            } else {
                view_segments.push_back(protocol::make_segment(
                    protocol::SegmentKind::Documents, retrieval_limit_notice()));
            }
        } else {
            // The policy stopped without closing a query or an answer.
            truncated = true;
            break;
        }
    }

    protocol::Trajectory& trajectory = result.trajectory;
    trajectory.question = question;
    trajectory.segments = std::move(trajectory_segments);
    trajectory.truncated = truncated;
    trajectory.recompute_derived();
    TokenTotals totals = account_tokens(result.calls, tokenizer);
    trajectory.tokens_fed = totals.tokens_fed;
    trajectory.tokens_generated = totals.tokens_generated;
    return result;
}

std::vector<ScoredRollout> run_group(
    const std::string& question, const std::string& gold,
    const PolicyBackend& policy, retrieval::Retriever& retriever,
    const RolloutConfig& cfg, const reward::RewardConfig& reward_cfg,
    int group_size, const Tokenizer& tokenizer) {
    if (group_size < 2) {
        throw std::invalid_argument("run_group: group size must be >= 2");
    }
    std::vector<ScoredRollout> out;
    out.reserve(static_cast<std::size_t>(group_size));
    for (int i = 0; i < group_size; ++i) {
        std::unique_ptr<PolicyBackend> fork = policy.fork();
        RolloutResult rollout =
            run_rollout(question, *fork, retriever, cfg, tokenizer);
        reward::RewardBreakdown breakdown =
            reward::compute_reward(rollout.trajectory, gold, reward_cfg);
        out.push_back(ScoredRollout{std::move(rollout.trajectory), breakdown});
    }
    return out;
}

}   // namespace srr::rollout
