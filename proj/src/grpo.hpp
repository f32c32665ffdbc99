#pragma once

// Group-relative policy optimization math: standardized advantages, masked
// importance ratios, the clipped surrogate with KL penalty, and the scored
// batch file format for offline audits. Pure numeric functions; summations
// run left to right so results are reproducible bit for bit.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "protocol.hpp"
#include "rollout.hpp"

namespace srr::grpo {

enum class RatioMode { PerToken, PerSequence };
enum class StdMode { Population, Sample };

struct GrpoConfig {
    double epsilon_clip = 0.2;
    double beta_kl = 0.0;
    int group_size = 2;
    RatioMode ratio_mode = RatioMode::PerToken;
    StdMode std_mode = StdMode::Population;
    double std_floor = 1e-8;

    // Training-config constraints (group_size >= 2 among them). The numeric
    // operations themselves accept any group matching cfg.group_size, so
    // single-sequence worked examples stay computable.
    void validate() const;   // throws std::invalid_argument
};

class LengthMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class MaskedPositionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AlignmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ScoredSequence {
    std::vector<double> logp_new;
    std::vector<double> logp_old;
    std::vector<double> logp_ref;
    std::vector<std::uint8_t> mask;   // 1 = model-generated, 0 = injected
    double advantage = 0.0;

    std::size_t size() const { return logp_new.size(); }
    bool aligned() const {
        return logp_old.size() == logp_new.size() &&
               logp_ref.size() == logp_new.size() &&
               mask.size() == logp_new.size();
    }
};

// A_i = (r_i - mean) / std, zeroed when std < std_floor. Throws
// LengthMismatchError unless rewards.size() == cfg.group_size.
std::vector<double> standardize_advantages(const std::vector<double>& rewards,
                                           const GrpoConfig& cfg);

// exp(logp_new[t] - logp_old[t]); masked positions have no ratio.
double masked_ratio(const ScoredSequence& seq, std::size_t t);

// Mean over unmasked t of exp(x) - x - 1 with x = logp_ref[t] - logp_new[t];
// nonnegative, 0 when nothing is unmasked.
double kl_penalty(const ScoredSequence& seq);

// J = (1/G) sum_i [ S_i - beta * KL_i ]. PerToken: S_i is the mean over
// unmasked t of min(r_t * A_i, clip(r_t) * A_i). PerSequence: one ratio
// exp(sum of unmasked log-prob deltas) per sequence.
double surrogate_objective(const std::vector<ScoredSequence>& group,
                           const GrpoConfig& cfg);

// Aligns per-token log-prob lists to the trajectory's canonical layout:
// segments in original (unpruned) order, each spanning the token count of
// its rendered form; the system prompt and question are not part of it.
// Mask is 0 exactly over engine-injected spans. Throws AlignmentError when
// list lengths disagree with the layout.
ScoredSequence build_scored_sequence(
    const protocol::Trajectory& traj, std::vector<double> logp_new,
    std::vector<double> logp_old, std::vector<double> logp_ref,
    const rollout::Tokenizer& tokenizer = rollout::default_tokenizer());

// Batch file: JSONL, one object per sequence:
// {advantage, mask:[...], logp_new:[...], logp_old:[...], logp_ref:[...]}.
std::vector<ScoredSequence> read_batch(const std::string& path);
void write_batch(const std::string& path,
                 const std::vector<ScoredSequence>& batch);

struct BatchCheck {
    std::size_t sequences = 0;
    std::size_t tokens = 0;
    std::size_t masked_tokens = 0;
    double objective_per_token = 0.0;
    double objective_per_sequence = 0.0;
    double kl_mean = 0.0;
    double advantage_mean = 0.0;
    double advantage_std = 0.0;   // population
};

// Audits a whole batch as one group (group_size = batch size).
BatchCheck check_batch(const std::vector<ScoredSequence>& batch,
                       GrpoConfig cfg);

std::string batch_check_to_json(const BatchCheck& check, const GrpoConfig& cfg);

}   // namespace srr::grpo
