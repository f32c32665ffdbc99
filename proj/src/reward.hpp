#pragma once

// Hierarchical scalar reward for a finished rollout. Format validity gates
// everything; document grounding, refine grounding, answer overlap, and a
// retrieval-count bonus stack on top of it.

#include <string_view>

#include "protocol.hpp"

namespace srr::reward {

struct RewardConfig {
    double beta_base = 0.1;        // granted for well-formed output
    double beta_retrieval = 0.2;   // granted when retrieved text contains the answer
    double beta_refine = 0.3;      // granted when refined text contains the answer
    double eta_max = 0.2;          // retrieval bonus at or below c_start calls
    double eta_min = 0.0;          // retrieval bonus at or above c_max calls
    int c_start = 2;
    int c_max = 5;
    bool d_top1_only = false;      // ground only against the top-ranked hit per block

    void validate() const;   // throws std::invalid_argument
};

struct RewardBreakdown {
    int f_indicator = 0;
    int d_indicator = 0;
    int r_indicator = 0;
    double f1 = 0.0;
    double r_count = 0.0;
    double total = 0.0;
};

// Gold answer appears in the final documents block (top-ranked line only when
// top1_only is set). 0 when the trajectory retrieved nothing.
int indicator_d(const protocol::Trajectory& traj, std::string_view gold,
                bool top1_only = false);

// Gold answer appears in the final refine block.
int indicator_r(const protocol::Trajectory& traj, std::string_view gold);

// Piecewise-linear bonus: eta_max up to c_start calls, decaying linearly to
// eta_min at c_max.
double retrieval_efficiency(int retrieval_count, const RewardConfig& config);

RewardBreakdown compute_reward(const protocol::Trajectory& traj,
                               std::string_view gold,
                               const RewardConfig& config = {});

}   // namespace srr::reward
