#include "grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace srr::grpo {

void GrpoConfig::validate() const {
    if (epsilon_clip <= 0) {
        throw std::invalid_argument("grpo: epsilon_clip must be > 0");
    }
    if (beta_kl < 0) throw std::invalid_argument("grpo: beta_kl must be >= 0");
    if (group_size < 2) throw std::invalid_argument("grpo: group_size must be >= 2");
    if (std_floor <= 0) throw std::invalid_argument("grpo: std_floor must be > 0");
}

std::vector<double> standardize_advantages(const std::vector<double>& rewards,
                                           const GrpoConfig& cfg) {
    if (rewards.size() != static_cast<std::size_t>(cfg.group_size) ||
        rewards.empty()) {
        throw LengthMismatchError("standardize_advantages: rewards size != group_size");
    }
    double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;

    double sum_sq = 0.0;
    for (double r : rewards) sum_sq += (r - mean) * (r - mean);
    double denom = cfg.std_mode == StdMode::Sample ? n - 1.0 : n;
    double stddev = denom > 0.0 ? std::sqrt(sum_sq / denom) : 0.0;

    std::vector<double> advantages(rewards.size(), 0.0);
    if (stddev < cfg.std_floor) return advantages;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        advantages[i] = (rewards[i] - mean) / stddev;
    }
    return advantages;
}

double masked_ratio(const ScoredSequence& seq, std::size_t t) {
    if (!seq.aligned() || t >= seq.size()) {
        throw LengthMismatchError("masked_ratio: position out of range");
    }
    if (seq.mask[t] == 0) {
        throw MaskedPositionError("masked_ratio: ratio undefined on an injected token");
    }
    return std::exp(seq.logp_new[t] - seq.logp_old[t]);
}

double kl_penalty(const ScoredSequence& seq) {
    if (!seq.aligned()) throw LengthMismatchError("kl_penalty: unaligned sequence");
    double sum = 0.0;
    long long active = 0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (seq.mask[t] == 0) continue;
        double x = seq.logp_ref[t] - seq.logp_new[t];
        sum += std::exp(x) - x - 1.0;
        ++active;
    }
    return active == 0 ? 0.0 : sum / static_cast<double>(active);
}

namespace {

double clip(double ratio, double epsilon) {
    return std::min(std::max(ratio, 1.0 - epsilon), 1.0 + epsilon);
}

double clipped_term(double ratio, double advantage, double epsilon) {
    return std::min(ratio * advantage, clip(ratio, epsilon) * advantage);
}

double sequence_surrogate(const ScoredSequence& seq, const GrpoConfig& cfg) {
    if (cfg.ratio_mode == RatioMode::PerToken) {
        double sum = 0.0;
        long long active = 0;
        for (std::size_t t = 0; t < seq.size(); ++t) {
            if (seq.mask[t] == 0) continue;
            double ratio = std::exp(seq.logp_new[t] - seq.logp_old[t]);
            sum += clipped_term(ratio, seq.advantage, cfg.epsilon_clip);
            ++active;
        }
        return active == 0 ? 0.0 : sum / static_cast<double>(active);
    }

    double log_ratio = 0.0;
    bool any = false;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (seq.mask[t] == 0) continue;
        log_ratio += seq.logp_new[t] - seq.logp_old[t];
        any = true;
    }
    if (!any) return 0.0;
    return clipped_term(std::exp(log_ratio), seq.advantage, cfg.epsilon_clip);
}

}   // namespace

double surrogate_objective(const std::vector<ScoredSequence>& group,
                           const GrpoConfig& cfg) {
    if (group.empty() || group.size() != static_cast<std::size_t>(cfg.group_size)) {
        throw LengthMismatchError("surrogate_objective: group size != cfg.group_size");
    }
    double sum = 0.0;
    for (const ScoredSequence& seq : group) {
        if (!seq.aligned()) {
            throw LengthMismatchError("surrogate_objective: unaligned sequence");
        }
        sum += sequence_surrogate(seq, cfg) - cfg.beta_kl * kl_penalty(seq);
    }
    return sum / static_cast<double>(group.size());
}

ScoredSequence build_scored_sequence(const protocol::Trajectory& traj,
                                     std::vector<double> logp_new,
                                     std::vector<double> logp_old,
                                     std::vector<double> logp_ref,
                                     const rollout::Tokenizer& tokenizer) {
    std::vector<std::uint8_t> mask;
    for (const protocol::Segment& segment : traj.segments) {
        long long span = tokenizer.count(protocol::render_segment(segment));
        std::uint8_t bit =
            segment.origin == protocol::Origin::EngineInjected ? 0 : 1;
        mask.insert(mask.end(), static_cast<std::size_t>(span), bit);
    }
    if (logp_new.size() != mask.size() || logp_old.size() != mask.size() ||
        logp_ref.size() != mask.size()) {
        std::ostringstream msg;
        msg << "build_scored_sequence: layout spans " << mask.size()
            << " tokens, got " << logp_new.size() << "/" << logp_old.size()
            << "/" << logp_ref.size();
        throw AlignmentError(msg.str());
    }
    ScoredSequence seq;
    seq.logp_new = std::move(logp_new);
    seq.logp_old = std::move(logp_old);
    seq.logp_ref = std::move(logp_ref);
    seq.mask = std::move(mask);
    return seq;
}

std::vector<ScoredSequence> read_batch(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open batch file: " + path);
    std::vector<ScoredSequence> batch;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": malformed batch record";
            throw std::runtime_error(msg.str());
        }
        ScoredSequence seq;
        seq.advantage = doc.at("advantage").get<double>();
        seq.logp_new = doc.at("logp_new").get<std::vector<double>>();
        seq.logp_old = doc.at("logp_old").get<std::vector<double>>();
        seq.logp_ref = doc.at("logp_ref").get<std::vector<double>>();
        for (const auto& bit : doc.at("mask")) {
            int value = bit.get<int>();
            if (value != 0 && value != 1) {
                std::ostringstream msg;
                msg << path << ":" << line_no << ": mask values must be 0 or 1";
                throw std::runtime_error(msg.str());
            }
            seq.mask.push_back(static_cast<std::uint8_t>(value));
        }
        if (!seq.aligned()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": list lengths disagree";
            throw std::runtime_error(msg.str());
        }
        batch.push_back(std::move(seq));
    }
    return batch;
}

void write_batch(const std::string& path,
                 const std::vector<ScoredSequence>& batch) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write batch file: " + path);
    for (const ScoredSequence& seq : batch) {
        nlohmann::ordered_json doc;
        doc["advantage"] = seq.advantage;
        doc["mask"] = seq.mask;
        doc["logp_new"] = seq.logp_new;
        doc["logp_old"] = seq.logp_old;
        doc["logp_ref"] = seq.logp_ref;
        out << doc.dump() << '\n';
    }
}

BatchCheck check_batch(const std::vector<ScoredSequence>& batch, GrpoConfig cfg) {
    if (batch.empty()) throw std::invalid_argument("check_batch: empty batch");
    cfg.group_size = static_cast<int>(batch.size());

    BatchCheck check;
    check.sequences = batch.size();
    for (const ScoredSequence& seq : batch) {
        if (!seq.aligned()) {
            throw LengthMismatchError("check_batch: unaligned sequence");
        }
        check.tokens += seq.size();
        for (std::uint8_t bit : seq.mask) {
            if (bit == 0) ++check.masked_tokens;
        }
        check.kl_mean += kl_penalty(seq);
        check.advantage_mean += seq.advantage;
    }
    double n = static_cast<double>(batch.size());
    check.kl_mean /= n;
    check.advantage_mean /= n;
    double sum_sq = 0.0;
    for (const ScoredSequence& seq : batch) {
        double delta = seq.advantage - check.advantage_mean;
        sum_sq += delta * delta;
    }
    check.advantage_std = std::sqrt(sum_sq / n);

    cfg.ratio_mode = RatioMode::PerToken;
    check.objective_per_token = surrogate_objective(batch, cfg);
    cfg.ratio_mode = RatioMode::PerSequence;
    check.objective_per_sequence = surrogate_objective(batch, cfg);
    return check;
}

std::string batch_check_to_json(const BatchCheck& check, const GrpoConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["sequences"] = check.sequences;
    doc["tokens"] = check.tokens;
    doc["masked_tokens"] = check.masked_tokens;
    doc["epsilon_clip"] = cfg.epsilon_clip;
    doc["beta_kl"] = cfg.beta_kl;
    doc["objective_per_token"] = check.objective_per_token;
    doc["objective_per_sequence"] = check.objective_per_sequence;
    doc["kl_mean"] = check.kl_mean;
    doc["advantage_mean"] = check.advantage_mean;
    doc["advantage_std"] = check.advantage_std;
    return doc.dump();
}

}   // namespace srr::grpo
