#pragma once

// Answer normalization and overlap scoring for QA evaluation.

#include <string>
#include <string_view>
#include <vector>

namespace srr::matching {

// Lowercases, removes punctuation (deleted, not replaced), drops the articles
// a/an/the, and splits on whitespace. "7,531" normalizes to the single token
// "7531".
std::vector<std::string> normalize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

// True when gold's normalized token sequence occurs contiguously in
// haystack's. An empty gold never matches.
bool contains_answer(std::string_view haystack, std::string_view gold);

// Multiset token overlap: 2m / (p + q). Zero when either side normalizes to
// nothing.
double token_f1(std::string_view predicted, std::string_view gold);

// 1 when the normalized prediction equals any normalized gold answer.
// Throws std::invalid_argument on an empty gold set.
int exact_match(std::string_view predicted, const std::vector<std::string>& gold_answers);

}   // namespace srr::matching
