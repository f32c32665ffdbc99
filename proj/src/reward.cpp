#include "reward.hpp"

#include <stdexcept>
#include <string>

#include "matching.hpp"

namespace srr::reward {

void RewardConfig::validate() const {
    if (beta_base < 0 || beta_retrieval < 0 || beta_refine < 0) {
        throw std::invalid_argument("reward: negative tier weight");
    }
    if (eta_min < 0 || eta_max < eta_min) {
        throw std::invalid_argument("reward: need eta_max >= eta_min >= 0");
    }
    if (c_start < 0 || c_max < 1 || c_start >= c_max) {
        throw std::invalid_argument("reward: need 0 <= c_start < c_max");
    }
}

namespace {

// Blocks are rendered one hit per line; the top-ranked hit is the first line.
std::string_view first_line(std::string_view text) {
    std::size_t nl = text.find('\n');
    return nl == std::string_view::npos ? text : text.substr(0, nl);
}

const protocol::Segment* last_of(const protocol::Trajectory& traj,
                                 protocol::SegmentKind kind) {
    const protocol::Segment* found = nullptr;
    for (const protocol::Segment& segment : traj.segments) {
        if (segment.kind == kind) found = &segment;
    }
    return found;
}

}   // namespace

// Grounding is judged on the most recent retrieval only; earlier rounds that
// happened to contain the answer do not count.
int indicator_d(const protocol::Trajectory& traj, std::string_view gold,
                bool top1_only) {
    const protocol::Segment* block = last_of(traj, protocol::SegmentKind::Documents);
    if (block == nullptr) return 0;
    std::string_view scope =
        top1_only ? first_line(block->text) : std::string_view(block->text);
    return matching::contains_answer(scope, gold) ? 1 : 0;
}

int indicator_r(const protocol::Trajectory& traj, std::string_view gold) {
    const protocol::Segment* block =
        last_of(traj, protocol::SegmentKind::DocumentsRefine);
    if (block == nullptr) return 0;
    return matching::contains_answer(block->text, gold) ? 1 : 0;
}

double retrieval_efficiency(int retrieval_count, const RewardConfig& config) {
    if (retrieval_count <= config.c_start) return config.eta_max;
    if (retrieval_count >= config.c_max) return config.eta_min;
    double span = static_cast<double>(config.c_max - config.c_start);
    double slack = static_cast<double>(config.c_max - retrieval_count);
    return config.eta_min + (config.eta_max - config.eta_min) * slack / span;
}

RewardBreakdown compute_reward(const protocol::Trajectory& traj,
                               std::string_view gold,
                               const RewardConfig& config) {
    config.validate();

    RewardBreakdown out;
    out.f_indicator = validate_format(traj, config.c_max).valid ? 1 : 0;
    out.d_indicator = indicator_d(traj, gold, config.d_top1_only);
    out.r_indicator = indicator_r(traj, gold);
    if (traj.boxed_answer.has_value()) {
        out.f1 = matching::token_f1(*traj.boxed_answer, gold);
    }
    int count = 0;
    for (const protocol::Segment& segment : traj.segments) {
        if (segment.kind == protocol::SegmentKind::Documents) ++count;
    }
    out.r_count = retrieval_efficiency(count, config);

    if (out.f_indicator == 0) {
        out.total = 0.0;
    } else if (out.d_indicator == 0) {
        out.total = config.beta_base;
    } else if (out.r_indicator == 0) {
        out.total = config.beta_base + config.beta_retrieval + out.r_count;
    } else {
        out.total = config.beta_base + config.beta_retrieval + config.beta_refine +
                    out.f1 + out.r_count;
    }
    return out;
}

}   // namespace srr::reward
