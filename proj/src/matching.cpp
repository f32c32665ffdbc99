#include "matching.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace srr::matching {

namespace {

bool is_article(const std::string& token) {
    return token == "a" || token == "an" || token == "the";
}

}   // namespace

std::vector<std::string> normalize(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        unsigned char byte = static_cast<unsigned char>(c);
        if (std::ispunct(byte)) continue;   // deleted, no space inserted
        cleaned.push_back(static_cast<char>(std::tolower(byte)));
    }

    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        if (!current.empty() && !is_article(current)) tokens.push_back(current);
        current.clear();
    };
    for (char c : cleaned) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            current.push_back(c);
        }
    }
    flush();
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

bool contains_answer(std::string_view haystack, std::string_view gold) {
    std::vector<std::string> hay = normalize(haystack);
    std::vector<std::string> needle = normalize(gold);
    if (needle.empty() || needle.size() > hay.size()) return false;
    auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end());
    return it != hay.end();
}

double token_f1(std::string_view predicted, std::string_view gold) {
    std::vector<std::string> p = normalize(predicted);
    std::vector<std::string> q = normalize(gold);
    if (p.empty() || q.empty()) return 0.0;

    std::map<std::string, int> counts;
    for (const std::string& token : p) ++counts[token];
    long long overlap = 0;
    for (const std::string& token : q) {
        auto it = counts.find(token);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return 2.0 * static_cast<double>(overlap) /
           static_cast<double>(p.size() + q.size());
}

int exact_match(std::string_view predicted, const std::vector<std::string>& gold_answers) {
    if (gold_answers.empty()) {
        throw std::invalid_argument("exact_match: empty gold answer set");
    }
    std::vector<std::string> p = normalize(predicted);
    for (const std::string& gold : gold_answers) {
        if (p == normalize(gold)) return 1;
    }
    return 0;
}

}   // namespace srr::matching
