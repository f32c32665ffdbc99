#include "protocol.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace srr::protocol {

namespace {

constexpr std::array<SegmentKind, 5> kAllKinds = {
    SegmentKind::Think, SegmentKind::Query, SegmentKind::Documents,
    SegmentKind::DocumentsRefine, SegmentKind::Answer};

std::string opener(SegmentKind kind) {
    return std::string("<") + tag_name(kind) + ">";
}

std::string closer(SegmentKind kind) {
    return std::string("</") + tag_name(kind) + ">";
}

bool is_space_byte(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

// Matches <name> or </name> where name is [A-Za-z0-9_]+. Used only to decide
// between UnknownTag and StrayText at top level.
bool looks_like_tag(std::string_view input, std::size_t pos, std::string_view* token) {
    if (pos >= input.size() || input[pos] != '<') return false;
    std::size_t i = pos + 1;
    if (i < input.size() && input[i] == '/') ++i;
    std::size_t name_start = i;
    while (i < input.size() &&
           (std::isalnum(static_cast<unsigned char>(input[i])) || input[i] == '_')) {
        ++i;
    }
    if (i == name_start || i >= input.size() || input[i] != '>') return false;
    *token = input.substr(pos, i + 1 - pos);
    return true;
}

}   // namespace

const char* tag_name(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::Think: return "think";
        case SegmentKind::Query: return "query";
        case SegmentKind::Documents: return "documents";
        case SegmentKind::DocumentsRefine: return "documents_refine";
        case SegmentKind::Answer: return "answer";
    }
    return "";
}

std::optional<SegmentKind> kind_from_tag(std::string_view name) {
    for (SegmentKind kind : kAllKinds) {
        if (name == tag_name(kind)) return kind;
    }
    return std::nullopt;
}

Origin origin_for(SegmentKind kind) {
    return kind == SegmentKind::Documents ? Origin::EngineInjected
                                          : Origin::ModelGenerated;
}

Segment make_segment(SegmentKind kind, std::string text) {
    return Segment{kind, std::move(text), origin_for(kind)};
}

const char* parse_error_name(ParseError::Kind kind) {
    switch (kind) {
        case ParseError::Kind::UnclosedTag: return "unclosed_tag";
        case ParseError::Kind::UnknownTag: return "unknown_tag";
        case ParseError::Kind::StrayText: return "stray_text";
    }
    return "";
}

ParseResult parse_trajectory(std::string_view raw) {
    ParseResult result;
    std::size_t pos = 0;

    auto fail = [&](ParseError::Kind kind, std::size_t offset, std::string detail) {
        result.error = ParseError{kind, offset, std::move(detail)};
        return result;
    };

    while (pos < raw.size()) {
        if (is_space_byte(raw[pos])) {
            ++pos;
            continue;
        }
        if (raw[pos] != '<') {
            return fail(ParseError::Kind::StrayText, pos,
                        "text outside of tags");
        }

        SegmentKind open_kind{};
        bool opened = false;
        for (SegmentKind kind : kAllKinds) {
            std::string tag = opener(kind);
            if (raw.compare(pos, tag.size(), tag) == 0) {
                open_kind = kind;
                opened = true;
                break;
            }
        }
        if (!opened) {
            std::string_view token;
            if (looks_like_tag(raw, pos, &token)) {
                return fail(ParseError::Kind::UnknownTag, pos,
                            std::string(token));
            }
            return fail(ParseError::Kind::StrayText, pos,
                        "text outside of tags");
        }

        std::size_t body_start = pos + opener(open_kind).size();

        // Scan for the earliest protocol marker. The matching closer ends the
        // segment; any other marker means the open tag was never closed.
        std::size_t best = std::string_view::npos;
        std::string best_marker;
        bool best_is_closer = false;
        for (SegmentKind kind : kAllKinds) {
            for (const std::string& marker : {opener(kind), closer(kind)}) {
                std::size_t at = raw.find(marker, body_start);
                if (at == std::string_view::npos) continue;
                if (at < best || (at == best && marker.size() > best_marker.size())) {
                    best = at;
                    best_marker = marker;
                    best_is_closer = (marker == closer(open_kind));
                }
            }
        }
        if (best == std::string_view::npos || !best_is_closer) {
            return fail(ParseError::Kind::UnclosedTag, pos,
                        opener(open_kind));
        }
        result.segments.push_back(make_segment(
            open_kind, std::string(raw.substr(body_start, best - body_start))));
        pos = best + best_marker.size();
    }
    return result;
}

void Trajectory::recompute_derived() {
    retrieval_count = 0;
    boxed_answer.reset();
    for (const Segment& segment : segments) {
        if (segment.kind == SegmentKind::Documents) ++retrieval_count;
        if (segment.kind == SegmentKind::Answer) {
            BoxedAnswer boxed = extract_boxed_answer(segment.text);
            if (boxed.ok()) boxed_answer = boxed.value;
        }
    }
}

FormatVerdict validate_format(const Trajectory& traj, int c_max) {
    auto invalid = [](std::string why) {
        return FormatVerdict{false, std::move(why)};
    };

    if (traj.truncated) return invalid("truncated rollout");

    int documents_seen = 0;
    for (const Segment& segment : traj.segments) {
        if (segment.kind == SegmentKind::Documents) ++documents_seen;
    }
    if (documents_seen > c_max) return invalid("retrieval limit exceeded");

    // Cycle states: 0 = start of a round, 1 = after think, 2 = after query,
    // 3 = after documents, 4 = after answer.
    int state = 0;
    const Segment* answer = nullptr;
    for (const Segment& segment : traj.segments) {
        if (state == 4) return invalid("segment after answer");
        if (state == 3 && segment.kind != SegmentKind::DocumentsRefine) {
            return invalid("missing refine");
        }
        switch (segment.kind) {
            case SegmentKind::Think:
                if (state != 0) return invalid("misplaced think");
                state = 1;
                break;
            case SegmentKind::Query:
                if (state != 1) return invalid("query without think");
                state = 2;
                break;
            case SegmentKind::Documents:
                if (state != 2) return invalid("documents without query");
                state = 3;
                break;
            case SegmentKind::DocumentsRefine:
                if (state != 3) return invalid("refine without documents");
                state = 0;
                break;
            case SegmentKind::Answer:
                if (state == 2) return invalid("query without documents");
                answer = &segment;
                state = 4;
                break;
        }
    }
    if (state == 3) return invalid("missing refine");
    if (state != 4 || answer == nullptr) return invalid("no answer");

    if (!extract_boxed_answer(answer->text).ok()) {
        return invalid("answer missing boxed value");
    }
    return FormatVerdict{true, std::nullopt};
}

BoxedAnswer extract_boxed_answer(std::string_view answer_text) {
    static constexpr std::string_view kBox = "\\boxed{";
    std::size_t at = answer_text.find(kBox);
    if (at == std::string_view::npos) return BoxedAnswer{BoxedAnswer::Status::NoBox, ""};

    std::size_t i = at + kBox.size();
    int depth = 1;
    std::string value;
    for (; i < answer_text.size(); ++i) {
        char c = answer_text[i];
        if (c == '{') ++depth;
        if (c == '}') {
            --depth;
            if (depth == 0) break;
        }
        value.push_back(c);
    }
    if (depth != 0) return BoxedAnswer{BoxedAnswer::Status::UnbalancedBraces, ""};

    std::size_t first = value.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return BoxedAnswer{BoxedAnswer::Status::Ok, ""};
    std::size_t last = value.find_last_not_of(" \t\r\n");
    return BoxedAnswer{BoxedAnswer::Status::Ok, value.substr(first, last - first + 1)};
}

StopEvent detect_stop_event(std::string_view stream_so_far) {
    auto ends_with = [&](std::string_view suffix) {
        return stream_so_far.size() >= suffix.size() &&
               stream_so_far.substr(stream_so_far.size() - suffix.size()) == suffix;
    };
    if (ends_with("</query>")) return StopEvent::QueryClosed;
    if (ends_with("</answer>")) return StopEvent::AnswerClosed;
    return StopEvent::NoEvent;
}

std::string render_segment(const Segment& segment) {
    return opener(segment.kind) + segment.text + closer(segment.kind);
}

std::string render_segments(const std::vector<Segment>& segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out += render_segment(segments[i]);
    }
    return out;
}

namespace {

const char* origin_name(Origin origin) {
    return origin == Origin::EngineInjected ? "engine" : "model";
}

Origin origin_from_name(const std::string& name) {
    if (name == "engine") return Origin::EngineInjected;
    if (name == "model") return Origin::ModelGenerated;
    throw std::runtime_error("unknown segment origin: " + name);
}

}   // namespace

std::string trajectory_to_json(const Trajectory& traj) {
    nlohmann::ordered_json doc;
    doc["question"] = traj.question;
    doc["segments"] = nlohmann::ordered_json::array();
    for (const Segment& segment : traj.segments) {
        doc["segments"].push_back({{"kind", tag_name(segment.kind)},
                                   {"text", segment.text},
                                   {"origin", origin_name(segment.origin)}});
    }
    if (traj.boxed_answer.has_value()) {
        doc["boxed_answer"] = *traj.boxed_answer;
    } else {
        doc["boxed_answer"] = nullptr;
    }
    doc["retrieval_count"] = traj.retrieval_count;
    doc["tokens_fed"] = traj.tokens_fed;
    doc["tokens_generated"] = traj.tokens_generated;
    doc["truncated"] = traj.truncated;
    return doc.dump();
}

Trajectory trajectory_from_json(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error("trajectory record is not a JSON object");
    }
    Trajectory traj;
    traj.question = doc.at("question").get<std::string>();
    for (const auto& entry : doc.at("segments")) {
        std::string kind_name = entry.at("kind").get<std::string>();
        std::optional<SegmentKind> kind = kind_from_tag(kind_name);
        if (!kind.has_value()) {
            throw std::runtime_error("unknown segment kind: " + kind_name);
        }
        Segment segment{*kind, entry.at("text").get<std::string>(),
                        origin_for(*kind)};
        if (entry.contains("origin")) {
            segment.origin = origin_from_name(entry.at("origin").get<std::string>());
        }
        traj.segments.push_back(std::move(segment));
    }
    if (doc.contains("boxed_answer") && !doc.at("boxed_answer").is_null()) {
        traj.boxed_answer = doc.at("boxed_answer").get<std::string>();
    }
    traj.retrieval_count = doc.value("retrieval_count", 0);
    traj.tokens_fed = doc.value("tokens_fed", 0LL);
    traj.tokens_generated = doc.value("tokens_generated", 0LL);
    traj.truncated = doc.value("truncated", false);
    return traj;
}

std::vector<Trajectory> read_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
    std::vector<Trajectory> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(trajectory_from_json(line));
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
    }
    return out;
}

void write_trajectories(const std::string& path,
                        const std::vector<Trajectory>& trajectories) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
    for (const Trajectory& traj : trajectories) {
        out << trajectory_to_json(traj) << '\n';
    }
}

}   // namespace srr::protocol
