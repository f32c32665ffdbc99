#include "harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "config.hpp"
#include "matching.hpp"

namespace srr::harness {

std::vector<QAItem> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DatasetError(DatasetError::Kind::Parse, 0,
                           "cannot open dataset file: " + path);
    }
    std::vector<QAItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") ||
            !doc.contains("question") || !doc.contains("answers") ||
            !doc.at("answers").is_array()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": malformed dataset record";
            throw DatasetError(DatasetError::Kind::Parse, line_no, msg.str());
        }
        QAItem item;
        item.id = doc.at("id").get<std::string>();
        item.question = doc.at("question").get<std::string>();
        for (const auto& answer : doc.at("answers")) {
            item.gold_answers.push_back(answer.get<std::string>());
        }
        if (item.gold_answers.empty()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": empty answers list";
            throw DatasetError(DatasetError::Kind::EmptyAnswers, line_no, msg.str());
        }
        items.push_back(std::move(item));
    }
    return items;
}

namespace {

ItemScore score_item(const protocol::Trajectory& traj, const QAItem& item,
                     const reward::RewardConfig& reward_cfg) {
    ItemScore score;
    score.id = item.id;
    std::string answer = traj.boxed_answer.value_or("");
    score.em = matching::exact_match(answer, item.gold_answers);
    for (const std::string& gold : item.gold_answers) {
        score.f1 = std::max(score.f1, matching::token_f1(answer, gold));
        score.reward = std::max(
            score.reward, reward::compute_reward(traj, gold, reward_cfg).total);
    }
    score.retrieval_count = traj.retrieval_count;
    score.tokens_fed = traj.tokens_fed;
    return score;
}

}   // namespace

RunReport evaluate_run(const std::vector<protocol::Trajectory>& trajectories,
                       const std::vector<QAItem>& items,
                       const reward::RewardConfig& reward_cfg) {
    if (trajectories.size() != items.size()) {
        throw std::invalid_argument("evaluate_run: trajectory/item count mismatch");
    }
    RunReport report;
    report.n = items.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        report.per_item.push_back(
            score_item(trajectories[i], items[i], reward_cfg));
    }
    if (report.n == 0) return report;

    double n = static_cast<double>(report.n);
    for (const ItemScore& score : report.per_item) {
        report.em_mean += static_cast<double>(score.em);
        report.f1_mean += score.f1;
        report.avg_retrieval_count += static_cast<double>(score.retrieval_count);
        report.avg_tokens_fed += static_cast<double>(score.tokens_fed);
        report.reward_mean += score.reward;
    }
    report.em_mean /= n;
    report.f1_mean /= n;
    report.avg_retrieval_count /= n;
    report.avg_tokens_fed /= n;
    report.reward_mean /= n;
    return report;
}

std::string emit_report(const RunReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json doc;
        doc["n"] = report.n;
        doc["em_mean"] = report.em_mean;
        doc["f1_mean"] = report.f1_mean;
        doc["avg_retrieval_count"] = report.avg_retrieval_count;
        doc["avg_tokens_fed"] = report.avg_tokens_fed;
        doc["reward_mean"] = report.reward_mean;
        doc["per_item"] = nlohmann::ordered_json::array();
        for (const ItemScore& score : report.per_item) {
            doc["per_item"].push_back({{"id", score.id},
                                       {"em", score.em},
                                       {"f1", score.f1},
                                       {"retrieval_count", score.retrieval_count},
                                       {"tokens_fed", score.tokens_fed},
                                       {"reward", score.reward}});
        }
        return doc.dump();
    }

    std::string out = "Metric Value\n";
    if (report.n == 0) return out;
    char row[64];
    std::snprintf(row, sizeof(row), "N %zu\n", report.n);
    out += row;
    std::snprintf(row, sizeof(row), "EM %.2f\n", report.em_mean * 100.0);
    out += row;
    std::snprintf(row, sizeof(row), "F1 %.2f\n", report.f1_mean * 100.0);
    out += row;
    std::snprintf(row, sizeof(row), "AvgRetrievals %.2f\n", report.avg_retrieval_count);
    out += row;
    std::snprintf(row, sizeof(row), "AvgTokensFed %.2f\n", report.avg_tokens_fed);
    out += row;
    std::snprintf(row, sizeof(row), "AvgReward %.4f\n", report.reward_mean);
    out += row;
    return out;
}

RunReport parse_report(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error("report is not a JSON object");
    }
    RunReport report;
    report.n = doc.at("n").get<std::size_t>();
    report.em_mean = doc.at("em_mean").get<double>();
    report.f1_mean = doc.at("f1_mean").get<double>();
    report.avg_retrieval_count = doc.at("avg_retrieval_count").get<double>();
    report.avg_tokens_fed = doc.at("avg_tokens_fed").get<double>();
    report.reward_mean = doc.at("reward_mean").get<double>();
    for (const auto& entry : doc.at("per_item")) {
        ItemScore score;
        score.id = entry.at("id").get<std::string>();
        score.em = entry.at("em").get<int>();
        score.f1 = entry.at("f1").get<double>();
        score.retrieval_count = entry.at("retrieval_count").get<int>();
        score.tokens_fed = entry.at("tokens_fed").get<long long>();
        score.reward = entry.at("reward").get<double>();
        report.per_item.push_back(std::move(score));
    }
    return report;
}

std::string breakdown_rows(const std::vector<protocol::Trajectory>& trajectories,
                           const std::vector<QAItem>& items,
                           const reward::RewardConfig& reward_cfg) {
    if (trajectories.size() != items.size()) {
        throw std::invalid_argument("breakdown_rows: trajectory/item count mismatch");
    }
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        // Best gold by total, so the row reflects the answer the item was
        // credited for.
        reward::RewardBreakdown best{};
        bool first = true;
        for (const std::string& gold : items[i].gold_answers) {
            reward::RewardBreakdown candidate =
                reward::compute_reward(trajectories[i], gold, reward_cfg);
            if (first || candidate.total > best.total) {
                best = candidate;
                first = false;
            }
        }
        nlohmann::ordered_json row;
        row["id"] = items[i].id;
        row["f_indicator"] = best.f_indicator;
        row["d_indicator"] = best.d_indicator;
        row["r_indicator"] = best.r_indicator;
        row["f1"] = best.f1;
        row["r_count"] = best.r_count;
        row["total"] = best.total;
        out += row.dump();
        out.push_back('\n');
    }
    return out;
}

namespace {

class ScriptedProvider final : public PolicyProvider {
public:
    ScriptedProvider(std::string name,
                     std::vector<synth::SyntheticEpisode> episodes)
        : name_(std::move(name)) {
        for (synth::SyntheticEpisode& episode : episodes) {
            by_question_[episode.question] = episode.id;
            episodes_[episode.id] = std::move(episode);
        }
    }

    std::unique_ptr<rollout::PolicyBackend> make(const QAItem& item) override {
        if (name_ == "always_query") return rollout::always_query_policy();
        if (name_ == "direct_answer") return rollout::direct_answer_policy("unknown");

        auto found = episodes_.find(item.id);
        if (found == episodes_.end()) {
            // Single-question entry points carry no dataset id.
            auto by_question = by_question_.find(item.question);
            if (by_question != by_question_.end()) {
                found = episodes_.find(by_question->second);
            }
        }
        if (found == episodes_.end()) {
            throw std::runtime_error("no scripted episode for item: " + item.id);
        }
        const synth::SyntheticEpisode& episode = found->second;
        if (name_ == "oracle") return synth::oracle_policy(episode);
        if (name_ == "wrong_answer") {
            return synth::perturbed_policy(episode,
                                           {synth::FlawKind::WrongAnswer, 0});
        }
        if (name_ == "skip_refine") {
            return synth::perturbed_policy(episode,
                                           {synth::FlawKind::SkipRefine, 0});
        }
        if (name_ == "stray_text") {
            return synth::perturbed_policy(episode,
                                           {synth::FlawKind::StrayText, 0});
        }
        if (name_.rfind("over_retrieve:", 0) == 0) {
            int rounds = std::stoi(name_.substr(std::string("over_retrieve:").size()));
            return synth::perturbed_policy(
                episode, {synth::FlawKind::OverRetrieve, rounds});
        }
        throw std::runtime_error("unknown scripted policy: " + name_);
    }

private:
    std::string name_;
    std::map<std::string, synth::SyntheticEpisode> episodes_;
    std::map<std::string, std::string> by_question_;
};

class HttpProvider final : public PolicyProvider {
public:
    explicit HttpProvider(rollout::HttpPolicyConfig cfg) : cfg_(std::move(cfg)) {}

    std::unique_ptr<rollout::PolicyBackend> make(const QAItem&) override {
        return std::make_unique<rollout::HttpPolicy>(cfg_);
    }

private:
    rollout::HttpPolicyConfig cfg_;
};

}   // namespace

std::unique_ptr<PolicyProvider> scripted_provider(
    const std::string& name, std::vector<synth::SyntheticEpisode> episodes) {
    return std::make_unique<ScriptedProvider>(name, std::move(episodes));
}

std::unique_ptr<PolicyProvider> http_provider(rollout::HttpPolicyConfig cfg) {
    return std::make_unique<HttpProvider>(std::move(cfg));
}

RunOutcome run_dataset(const std::vector<QAItem>& items,
                       PolicyProvider& provider,
                       retrieval::Retriever& retriever,
                       const rollout::RolloutConfig& rollout_cfg,
                       const reward::RewardConfig& reward_cfg,
                       const std::string& corpus_checksum) {
    RunOutcome outcome;
    nlohmann::ordered_json per_question = nlohmann::ordered_json::array();
    double reward_sum = 0.0;

    for (const QAItem& item : items) {
        std::unique_ptr<rollout::PolicyBackend> policy = provider.make(item);
        rollout::RolloutResult result =
            rollout::run_rollout(item.question, *policy, retriever, rollout_cfg);

        // Best gold by total, mirroring evaluate_run.
        reward::RewardBreakdown best{};
        bool first = true;
        for (const std::string& gold : item.gold_answers) {
            reward::RewardBreakdown candidate =
                reward::compute_reward(result.trajectory, gold, reward_cfg);
            if (first || candidate.total > best.total) {
                best = candidate;
                first = false;
            }
        }
        per_question.push_back({{"id", item.id}, {"reward", best.total}});
        reward_sum += best.total;
        outcome.trajectories.push_back(std::move(result.trajectory));
        outcome.rewards.push_back(best);
    }

    config::EngineConfig engine_cfg;
    engine_cfg.reward = reward_cfg;
    engine_cfg.rollout = rollout_cfg;
    nlohmann::ordered_json manifest;
    manifest["config"] = nlohmann::ordered_json::parse(config::to_json(engine_cfg));
    manifest["corpus_checksum"] = corpus_checksum;
    manifest["n"] = items.size();
    manifest["reward_mean"] =
        items.empty() ? 0.0 : reward_sum / static_cast<double>(items.size());
    manifest["per_question_rewards"] = std::move(per_question);
    outcome.manifest_json = manifest.dump();
    return outcome;
}

}   // namespace srr::harness
