#pragma once

// Tagged output protocol: the five-tag grammar used by search-refine-reason
// rollouts, a total parser for raw generation text, format validation, and
// boxed-answer extraction.
//
// Grammar accepted by validate_format:
//
//   (Think Query Documents DocumentsRefine){0..c_max}  Think?  Answer
//
// with the Answer text required to contain one balanced \boxed{...}.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srr::protocol {

enum class SegmentKind { Think, Query, Documents, DocumentsRefine, Answer };
enum class Origin { ModelGenerated, EngineInjected };

// Tag name without angle brackets ("think", "documents_refine", ...).
const char* tag_name(SegmentKind kind);
std::optional<SegmentKind> kind_from_tag(std::string_view name);

// Documents segments are always engine-injected; everything else comes from
// the model.
Origin origin_for(SegmentKind kind);

struct Segment {
    SegmentKind kind;
    std::string text;   // tag interior, byte-exact; never contains tag markers
    Origin origin;

    bool operator==(const Segment&) const = default;
};

Segment make_segment(SegmentKind kind, std::string text);

struct ParseError {
    enum class Kind { UnclosedTag, UnknownTag, StrayText };
    Kind kind;
    std::size_t offset = 0;   // byte offset of the offending position
    std::string detail;
};

const char* parse_error_name(ParseError::Kind kind);

struct ParseResult {
    std::vector<Segment> segments;
    std::optional<ParseError> error;

    bool ok() const { return !error.has_value(); }
};

// Total on arbitrary byte input: returns segments or a typed error, never
// throws. Whitespace between tags is discarded; tag interiors are preserved
// byte-exact. Angle-bracket tokens outside the five-tag set are plain text
// inside an open tag and an error at top level.
ParseResult parse_trajectory(std::string_view raw);

struct Trajectory {
    std::string question;
    std::vector<Segment> segments;
    std::optional<std::string> boxed_answer;
    int retrieval_count = 0;        // number of Documents segments
    long long tokens_fed = 0;       // cumulative prompt tokens across calls
    long long tokens_generated = 0;
    bool truncated = false;

    // Recomputes retrieval_count and boxed_answer from segments.
    void recompute_derived();
};

struct FormatVerdict {
    bool valid = false;
    std::optional<std::string> violation;   // first grammar breach
};

inline constexpr int kDefaultMaxRetrievals = 5;

FormatVerdict validate_format(const Trajectory& traj,
                              int c_max = kDefaultMaxRetrievals);

struct BoxedAnswer {
    enum class Status { Ok, NoBox, UnbalancedBraces };
    Status status = Status::NoBox;
    std::string value;

    bool ok() const { return status == Status::Ok; }
};

// Content of the first \boxed{...}, balanced with nesting, whitespace-trimmed.
BoxedAnswer extract_boxed_answer(std::string_view answer_text);

enum class StopEvent { NoEvent, QueryClosed, AnswerClosed };

// Suffix-based: QueryClosed / AnswerClosed when the stream ends at the
// corresponding closing tag.
StopEvent detect_stop_event(std::string_view stream_so_far);

std::string render_segment(const Segment& segment);

// Each segment wrapped in its tags, joined with newlines. Round-trips:
// parse_trajectory(render_segments(s)).segments == s.
std::string render_segments(const std::vector<Segment>& segments);

// JSON object with fields {question, segments:[{kind,text,origin}],
// boxed_answer, retrieval_count, tokens_fed, tokens_generated, truncated}.
std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& json_text);   // throws std::runtime_error

std::vector<Trajectory> read_trajectories(const std::string& path);
void write_trajectories(const std::string& path,
                        const std::vector<Trajectory>& trajectories);

}   // namespace srr::protocol
