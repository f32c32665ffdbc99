#pragma once

// Dataset loading, run-level evaluation (EM / F1 / efficiency), report
// emission, and the dataset-wide rollout driver shared by the CLI and the
// C API.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "protocol.hpp"
#include "reward.hpp"
#include "rollout.hpp"
#include "synthenv.hpp"

namespace srr::harness {

struct QAItem {
    std::string id;
    std::string question;
    std::vector<std::string> gold_answers;   // never empty
};

class DatasetError : public std::runtime_error {
public:
    enum class Kind { Parse, EmptyAnswers };

    DatasetError(Kind kind, std::size_t line, const std::string& message)
        : std::runtime_error(message), kind_(kind), line_(line) {}

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

// Dataset file: JSONL {"id", "question", "answers": [...]}.
std::vector<QAItem> load_dataset(const std::string& path);

struct ItemScore {
    std::string id;
    int em = 0;
    double f1 = 0.0;
    int retrieval_count = 0;
    long long tokens_fed = 0;
    double reward = 0.0;
};

struct RunReport {
    std::size_t n = 0;
    double em_mean = 0.0;
    double f1_mean = 0.0;
    double avg_retrieval_count = 0.0;
    double avg_tokens_fed = 0.0;
    double reward_mean = 0.0;
    std::vector<ItemScore> per_item;
};

// Pairs trajectories with items by position; em/f1/reward take the best
// value over an item's gold answers. Throws std::invalid_argument on a
// length mismatch.
RunReport evaluate_run(const std::vector<protocol::Trajectory>& trajectories,
                       const std::vector<QAItem>& items,
                       const reward::RewardConfig& reward_cfg = {});

enum class ReportFormat { Json, Table };

// Json output is byte-deterministic and round-trips through parse_report.
std::string emit_report(const RunReport& report, ReportFormat format);
RunReport parse_report(const std::string& json_text);

// Per-item reward rows for the score command: one JSON object per line.
std::string breakdown_rows(const std::vector<protocol::Trajectory>& trajectories,
                           const std::vector<QAItem>& items,
                           const reward::RewardConfig& reward_cfg);

// Supplies one policy per dataset item (scripted policies are per-episode).
class PolicyProvider {
public:
    virtual ~PolicyProvider() = default;
    virtual std::unique_ptr<rollout::PolicyBackend> make(const QAItem& item) = 0;
};

// name: oracle | wrong_answer | skip_refine | stray_text | over_retrieve:<n>
//     | always_query | direct_answer
// Episode-driven names look items up by id in the episode list.
std::unique_ptr<PolicyProvider> scripted_provider(
    const std::string& name, std::vector<synth::SyntheticEpisode> episodes);

std::unique_ptr<PolicyProvider> http_provider(rollout::HttpPolicyConfig cfg);

struct RunOutcome {
    std::vector<protocol::Trajectory> trajectories;
    std::vector<reward::RewardBreakdown> rewards;
    std::string manifest_json;
};

// Rolls out every item and scores it; manifest_json captures the config,
// the corpus checksum, and per-question rewards.
RunOutcome run_dataset(const std::vector<QAItem>& items,
                       PolicyProvider& provider,
                       retrieval::Retriever& retriever,
                       const rollout::RolloutConfig& rollout_cfg,
                       const reward::RewardConfig& reward_cfg,
                       const std::string& corpus_checksum);

}   // namespace srr::harness
