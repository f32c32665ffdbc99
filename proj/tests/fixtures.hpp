#pragma once

// Shared fixtures: the two-hop airport/population episode used across the
// protocol, reward, and harness tests, plus a canned retriever.

#include <string>
#include <utility>
#include <vector>

#include "protocol.hpp"
#include "retrieval.hpp"

namespace fixtures {

inline const std::string kGold = "7,531";

// Ten segments: two full search rounds, a closing thought, and the answer.
inline std::vector<srr::protocol::Segment> case_study_segments() {
    using srr::protocol::SegmentKind;
    using srr::protocol::make_segment;
    return {
        make_segment(SegmentKind::Think,
                     "I need the county containing the airport first."),
        make_segment(SegmentKind::Query, "Eric Marcus Municipal Airport county"),
        make_segment(SegmentKind::Documents,
                     "[1] Eric Marcus Municipal Airport: Eric Marcus Municipal "
                     "Airport is a county-owned airfield in Pima County, Arizona."),
        make_segment(SegmentKind::DocumentsRefine, "Pima County, Arizona."),
        make_segment(SegmentKind::Think,
                     "Pima County's seat is Tucson; now its 1900 population."),
        make_segment(SegmentKind::Query, "Tucson 1900 census population"),
        make_segment(SegmentKind::Documents,
                     "[1] Tucson: By 1900, 7,531 people lived in the city."),
        make_segment(SegmentKind::DocumentsRefine,
                     "Tucson, Arizona had a population of 7,531 in 1900."),
        make_segment(SegmentKind::Think, "The population was 7,531."),
        make_segment(SegmentKind::Answer, "The final answer is \\boxed{7531}"),
    };
}

inline srr::protocol::Trajectory make_trajectory(
    std::vector<srr::protocol::Segment> segments, bool truncated = false,
    std::string question = "What was the 1900 population of the city in the "
                           "county where Eric Marcus Municipal Airport is?") {
    srr::protocol::Trajectory traj;
    traj.question = std::move(question);
    traj.segments = std::move(segments);
    traj.truncated = truncated;
    traj.recompute_derived();
    return traj;
}

inline srr::protocol::Trajectory case_study_trajectory() {
    return make_trajectory(case_study_segments());
}

// Hands back the same hits for every query; error when `fail` is set.
class StaticRetriever final : public srr::retrieval::Retriever {
public:
    explicit StaticRetriever(std::vector<srr::retrieval::ScoredDoc> hits = {},
                             bool fail = false)
        : hits_(std::move(hits)), fail_(fail) {}

    srr::retrieval::FetchResult fetch(const std::string& query, int k) override {
        ++calls;
        last_query = query;
        last_k = k;
        if (fail_) return {{}, std::string("retrieval failed: transport")};
        srr::retrieval::FetchResult result;
        result.hits = hits_;
        if (static_cast<int>(result.hits.size()) > k) {
            result.hits.resize(static_cast<std::size_t>(k));
        }
        return result;
    }

    int calls = 0;
    std::string last_query;
    int last_k = 0;

private:
    std::vector<srr::retrieval::ScoredDoc> hits_;
    bool fail_;
};

inline std::vector<srr::retrieval::Document> tiny_corpus() {
    return {
        {"d1", "Eric Marcus Municipal Airport",
         "Eric Marcus Municipal Airport is a county-owned airfield in Pima "
         "County, Arizona."},
        {"d2", "Tucson", "By 1900, 7,531 people lived in the city."},
        {"d3", "Pima County", "Pima County is in southern Arizona."},
        {"d4", "Phoenix", "Phoenix is the capital of Arizona."},
    };
}

}   // namespace fixtures
