#include "retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

namespace srr::retrieval {

void RetrievalConfig::validate() const {
    if (k < 1) throw std::invalid_argument("retrieval: k must be >= 1");
    if (bm25_k1 < 0 || bm25_b < 0 || bm25_b > 1) {
        throw std::invalid_argument("retrieval: need k1 >= 0 and b in [0,1]");
    }
    if (backend == Backend::Remote && endpoint.empty()) {
        throw std::invalid_argument("retrieval: remote backend needs an endpoint");
    }
    if (timeout_ms < 1) throw std::invalid_argument("retrieval: timeout must be positive");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        if (!current.empty()) tokens.push_back(current);
        current.clear();
    };
    for (char c : text) {
        unsigned char byte = static_cast<unsigned char>(c);
        if (byte >= 0x80 || std::isalnum(byte)) {
            current.push_back(static_cast<char>(std::tolower(byte)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

int Index::doc_freq(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : static_cast<int>(it->second.size());
}

const std::vector<Index::Posting>* Index::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

Index build_index(const std::vector<Document>& corpus) {
    if (corpus.empty()) {
        throw IndexError(IndexError::Kind::EmptyCorpus, "empty corpus");
    }
    std::unordered_set<std::string> seen;
    for (const Document& doc : corpus) {
        if (!seen.insert(doc.id).second) {
            throw IndexError(IndexError::Kind::DuplicateId,
                             "duplicate document id: " + doc.id);
        }
    }

    Index index;
    index.docs_ = corpus;
    long long total_length = 0;
    for (std::size_t slot = 0; slot < corpus.size(); ++slot) {
        std::vector<std::string> tokens = tokenize(corpus[slot].title + " " + corpus[slot].text);
        index.doc_lengths_.push_back(static_cast<long long>(tokens.size()));
        total_length += static_cast<long long>(tokens.size());

        std::map<std::string, int> freqs;
        for (const std::string& token : tokens) ++freqs[token];
        for (const auto& [term, freq] : freqs) {
            index.postings_[term].push_back({static_cast<int>(slot), freq});
        }
    }
    index.avg_doc_length_ =
        static_cast<double>(total_length) / static_cast<double>(corpus.size());
    return index;
}

std::vector<ScoredDoc> search_topk(const Index& index, std::string_view query,
                                   const RetrievalConfig& cfg) {
    cfg.validate();

    std::vector<std::string> terms = tokenize(query);
    double n = static_cast<double>(index.doc_count());

    // Accumulation order per document is the query-term order, so scores are
    // reproducible bit-for-bit against a per-document rescore.
    std::map<int, double> scores;
    for (const std::string& term : terms) {
        const std::vector<Index::Posting>* postings = index.postings(term);
        if (postings == nullptr) continue;
        double df = static_cast<double>(postings->size());
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const Index::Posting& posting : *postings) {
            double tf = static_cast<double>(posting.term_freq);
            double dl = static_cast<double>(index.doc_length(posting.slot));
            double norm = cfg.bm25_k1 * (1.0 - cfg.bm25_b +
                                         cfg.bm25_b * dl / index.avg_doc_length());
            scores[posting.slot] += idf * tf * (cfg.bm25_k1 + 1.0) / (tf + norm);
        }
    }

    std::vector<ScoredDoc> ranked;
    for (const auto& [slot, score] : scores) {
        if (score > 0.0) ranked.push_back({index.docs()[static_cast<std::size_t>(slot)], score});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ScoredDoc& a, const ScoredDoc& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.doc.id < b.doc.id;
                     });
    if (ranked.size() > static_cast<std::size_t>(cfg.k)) {
        ranked.resize(static_cast<std::size_t>(cfg.k));
    }
    return ranked;
}

namespace {

std::string flatten(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

}   // namespace

std::string format_documents_block(const std::vector<ScoredDoc>& docs) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out += "[" + std::to_string(i + 1) + "] " + flatten(docs[i].doc.title) +
               ": " + flatten(docs[i].doc.text);
    }
    return out;
}

const char* remote_error_name(RemoteError::Kind kind) {
    switch (kind) {
        case RemoteError::Kind::Timeout: return "timeout";
        case RemoteError::Kind::MalformedResponse: return "malformed_response";
        case RemoteError::Kind::HttpStatus: return "http_status";
        case RemoteError::Kind::Transport: return "transport";
    }
    return "";
}

namespace {

// "http://host:port/prefix" -> {"http://host:port", "/prefix"}
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    std::size_t scheme = endpoint.find("://");
    std::size_t path_start = scheme == std::string::npos
                                 ? endpoint.find('/')
                                 : endpoint.find('/', scheme + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(0, path_start);
    std::string prefix = endpoint.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base, prefix};
}

}   // namespace

RemoteResult remote_search(const std::string& endpoint, std::string_view query,
                           int k, int timeout_ms) {
    auto [base, prefix] = split_endpoint(endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(0, timeout_ms * 1000LL);
    client.set_read_timeout(0, timeout_ms * 1000LL);
    client.set_write_timeout(0, timeout_ms * 1000LL);

    nlohmann::json body = {{"query", std::string(query)}, {"k", k}};
    httplib::Result res = client.Post(prefix + "/search", body.dump(),
                                      "application/json");

    RemoteResult out;
    if (!res) {
        bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                         res.error() == httplib::Error::Read ||
                         res.error() == httplib::Error::Write;
        out.error = RemoteError{timed_out ? RemoteError::Kind::Timeout
                                          : RemoteError::Kind::Transport,
                                0, httplib::to_string(res.error())};
        return out;
    }
    if (res->status != 200) {
        out.error = RemoteError{RemoteError::Kind::HttpStatus, res->status,
                                "unexpected HTTP status"};
        return out;
    }

    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("hits") ||
        !doc["hits"].is_array()) {
        out.error = RemoteError{RemoteError::Kind::MalformedResponse, 0,
                                "response is not {\"hits\": [...]}"};
        return out;
    }
    for (const auto& hit : doc["hits"]) {
        if (!hit.is_object() || !hit.contains("id") || !hit.contains("text")) {
            out.error = RemoteError{RemoteError::Kind::MalformedResponse, 0,
                                    "hit missing id or text"};
            out.docs.clear();
            return out;
        }
        out.docs.push_back(Document{hit.at("id").get<std::string>(),
                                    hit.value("title", std::string()),
                                    hit.at("text").get<std::string>()});
        if (out.docs.size() == static_cast<std::size_t>(k)) break;
    }
    return out;
}

std::vector<Document> read_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::vector<Document> corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": malformed corpus record";
            throw std::runtime_error(msg.str());
        }
        corpus.push_back(Document{doc.at("id").get<std::string>(),
                                  doc.value("title", std::string()),
                                  doc.at("text").get<std::string>()});
    }
    return corpus;
}

void write_corpus(const std::string& path, const std::vector<Document>& corpus) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    for (const Document& doc : corpus) {
        nlohmann::ordered_json record = {
            {"id", doc.id}, {"title", doc.title}, {"text", doc.text}};
        out << record.dump() << '\n';
    }
}

std::string corpus_checksum(const std::vector<Document>& corpus) {
    std::uint64_t hash = 1469598103934665603ULL;   // FNV-1a offset basis
    auto mix = [&hash](std::string_view data) {
        for (char c : data) {
            hash ^= static_cast<unsigned char>(c);
            hash *= 1099511628211ULL;
        }
        hash ^= 0x1f;   // field separator
        hash *= 1099511628211ULL;
    };
    for (const Document& doc : corpus) {
        mix(doc.id);
        mix(doc.title);
        mix(doc.text);
    }
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(hash));
    return buffer;
}

void save_index(const Index& index, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json doc;
    doc["doc_count"] = index.doc_count();
    doc["avg_doc_length"] = index.avg_doc_length();
    doc["checksum"] = corpus_checksum(index.docs());
    doc["docs"] = nlohmann::ordered_json::array();
    nlohmann::ordered_json lengths = nlohmann::ordered_json::array();
    for (int slot = 0; slot < index.doc_count(); ++slot) {
        const Document& d = index.docs()[static_cast<std::size_t>(slot)];
        doc["docs"].push_back({{"id", d.id}, {"title", d.title}, {"text", d.text}});
        lengths.push_back(index.doc_length(slot));
    }
    doc["doc_lengths"] = std::move(lengths);

    // std::map iteration keeps the postings section byte-stable.
    nlohmann::ordered_json postings = nlohmann::ordered_json::object();
    for (const auto& [term, list] : index.postings_map()) {
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const Index::Posting& posting : list) {
            entries.push_back({posting.slot, posting.term_freq});
        }
        postings[term] = std::move(entries);
    }
    doc["postings"] = std::move(postings);

    std::ofstream out(std::filesystem::path(dir) / "index.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write index under: " + dir);
    out << doc.dump() << '\n';
}

Index load_index(const std::string& dir) {
    std::filesystem::path file = std::filesystem::path(dir) / "index.json";
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open index file: " + file.string());
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error("malformed index file: " + file.string());
    }

    Index index;
    for (const auto& entry : doc.at("docs")) {
        index.docs_.push_back(Document{entry.at("id").get<std::string>(),
                                       entry.value("title", std::string()),
                                       entry.at("text").get<std::string>()});
    }
    for (const auto& length : doc.at("doc_lengths")) {
        index.doc_lengths_.push_back(length.get<long long>());
    }
    index.avg_doc_length_ = doc.at("avg_doc_length").get<double>();
    for (const auto& [term, entries] : doc.at("postings").items()) {
        std::vector<Index::Posting> list;
        for (const auto& entry : entries) {
            list.push_back({entry.at(0).get<int>(), entry.at(1).get<int>()});
        }
        index.postings_[term] = std::move(list);
    }
    if (index.docs_.size() != index.doc_lengths_.size()) {
        throw std::runtime_error("inconsistent index file: " + file.string());
    }
    return index;
}

FetchResult LocalRetriever::fetch(const std::string& query, int k) {
    RetrievalConfig cfg = cfg_;
    cfg.k = k;
    return FetchResult{search_topk(index_, query, cfg), std::nullopt};
}

FetchResult RemoteRetriever::fetch(const std::string& query, int k) {
    RemoteResult result = remote_search(endpoint_, query, k, timeout_ms_);
    if (!result.ok()) {
        std::string note = std::string("retrieval failed: ") +
                           remote_error_name(result.error->kind);
        if (result.error->kind == RemoteError::Kind::HttpStatus) {
            note += " " + std::to_string(result.error->status);
        }
        return FetchResult{{}, note};
    }
    FetchResult out;
    for (const Document& doc : result.docs) {
        out.hits.push_back(ScoredDoc{doc, 0.0});
    }
    return out;
}

}   // namespace srr::retrieval
