#pragma once

// Local BM25 retrieval over a JSONL corpus plus a client for a remote search
// service. Either backend hands the rollout engine an ordered top-K hit list.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace srr::retrieval {

struct Document {
    std::string id;
    std::string title;
    std::string text;

    bool operator==(const Document&) const = default;
};

enum class Backend { Local, Remote };

struct RetrievalConfig {
    int k = 5;
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
    Backend backend = Backend::Local;
    std::string endpoint;    // remote backend only, e.g. "http://host:8080"
    int timeout_ms = 10000;

    void validate() const;   // throws std::invalid_argument
};

// Lowercased alphanumeric runs; every other ASCII byte is a delimiter.
// Bytes >= 0x80 are kept so non-ASCII text still forms tokens.
std::vector<std::string> tokenize(std::string_view text);

class IndexError : public std::runtime_error {
public:
    enum class Kind { EmptyCorpus, DuplicateId };

    IndexError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class Index {
public:
    struct Posting {
        int slot;       // position in docs()
        int term_freq;
    };

    int doc_count() const { return static_cast<int>(docs_.size()); }
    double avg_doc_length() const { return avg_doc_length_; }
    const std::vector<Document>& docs() const { return docs_; }
    long long doc_length(int slot) const { return doc_lengths_.at(static_cast<std::size_t>(slot)); }
    int doc_freq(const std::string& term) const;
    const std::vector<Posting>* postings(const std::string& term) const;
    const std::map<std::string, std::vector<Posting>>& postings_map() const {
        return postings_;
    }

private:
    friend Index build_index(const std::vector<Document>&);
    friend Index load_index(const std::string&);

    std::vector<Document> docs_;
    std::vector<long long> doc_lengths_;        // tokens in title + text
    double avg_doc_length_ = 0.0;
    std::map<std::string, std::vector<Posting>> postings_;
};

// Indexes title + text of each document. Deterministic for a given corpus.
Index build_index(const std::vector<Document>& corpus);

struct ScoredDoc {
    Document doc;
    double score;
};

// Up to cfg.k documents by descending BM25 score, ties broken by ascending
// id; zero-scoring documents are never returned.
std::vector<ScoredDoc> search_topk(const Index& index, std::string_view query,
                                   const RetrievalConfig& cfg);

// One hit per line: "[rank] title: text". Newlines inside fields are
// flattened to spaces so a block stays line-parseable.
std::string format_documents_block(const std::vector<ScoredDoc>& docs);

struct RemoteError {
    enum class Kind { Timeout, MalformedResponse, HttpStatus, Transport };
    Kind kind;
    int status = 0;      // HttpStatus only
    std::string message;
};

const char* remote_error_name(RemoteError::Kind kind);

struct RemoteResult {
    std::vector<Document> docs;
    std::optional<RemoteError> error;

    bool ok() const { return !error.has_value(); }
};

// POST <endpoint>/search with body {"query":..., "k":...}; expects
// {"hits":[{"id","title","text","score"}]}. Server ranking is preserved and
// truncated to k.
RemoteResult remote_search(const std::string& endpoint, std::string_view query,
                           int k, int timeout_ms = 10000);

// Corpus file: JSONL, one {"id","title","text"} object per line.
std::vector<Document> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Document>& corpus);

// FNV-1a 64 over all documents in order; stable across platforms.
std::string corpus_checksum(const std::vector<Document>& corpus);

// Directory layout: <dir>/index.json.
void save_index(const Index& index, const std::string& dir);
Index load_index(const std::string& dir);

struct FetchResult {
    std::vector<ScoredDoc> hits;
    std::optional<std::string> error;   // note for the rollout log; hits empty
};

// What the rollout engine calls; hides which backend serves the query.
class Retriever {
public:
    virtual ~Retriever() = default;
    virtual FetchResult fetch(const std::string& query, int k) = 0;
};

class LocalRetriever final : public Retriever {
public:
    LocalRetriever(const Index& index, RetrievalConfig cfg)
        : index_(index), cfg_(std::move(cfg)) {}

    FetchResult fetch(const std::string& query, int k) override;

private:
    const Index& index_;
    RetrievalConfig cfg_;
};

class RemoteRetriever final : public Retriever {
public:
    RemoteRetriever(std::string endpoint, int timeout_ms)
        : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {}

    FetchResult fetch(const std::string& query, int k) override;

private:
    std::string endpoint_;
    int timeout_ms_;
};

}   // namespace srr::retrieval
