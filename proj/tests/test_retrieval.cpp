#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "retrieval.hpp"

using namespace srr::retrieval;

TEST_CASE("tokenize keeps alnum runs and high bytes, lowercases") {
    CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize("7,531") == std::vector<std::string>{"7", "531"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("   ") == std::vector<std::string>{});
    CHECK(tokenize("a-b_c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("ABC123") == std::vector<std::string>{"abc123"});
    // UTF-8 bytes survive as token characters.
    CHECK(tokenize("caf\xc3\xa9 bar") ==
          std::vector<std::string>{"caf\xc3\xa9", "bar"});
}

TEST_CASE("build_index rejects bad corpora") {
    CHECK_THROWS_AS(build_index({}), IndexError);
    std::vector<Document> dup = {{"a", "t", "x"}, {"a", "t", "y"}};
    CHECK_THROWS_AS(build_index(dup), IndexError);
    try {
        build_index(dup);
    } catch (const IndexError& e) {
        CHECK(e.kind() == IndexError::Kind::DuplicateId);
    }
}

TEST_CASE("index statistics") {
    Index index = build_index(fixtures::tiny_corpus());
    CHECK(index.doc_count() == 4);
    CHECK(index.doc_freq("arizona") == 4);
    CHECK(index.doc_freq("tucson") == 1);
    CHECK(index.doc_freq("missingterm") == 0);
    CHECK(index.avg_doc_length() > 0);
}

TEST_CASE("search ranks the on-topic document first") {
    Index index = build_index(fixtures::tiny_corpus());
    RetrievalConfig cfg;
    std::vector<ScoredDoc> hits =
        search_topk(index, "Eric Marcus Municipal Airport county", cfg);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].doc.id == "d1");
    CHECK(hits[0].doc.text.find("Pima County") != std::string::npos);
}

TEST_CASE("search excludes zero-score docs and respects k") {
    Index index = build_index(fixtures::tiny_corpus());
    RetrievalConfig cfg;

    SUBCASE("no matching term, no hits") {
        CHECK(search_topk(index, "zebra quantum", cfg).empty());
        CHECK(search_topk(index, "", cfg).empty());
    }
    SUBCASE("k truncates") {
        cfg.k = 1;
        std::vector<ScoredDoc> hits = search_topk(index, "arizona county", cfg);
        CHECK(hits.size() == 1);
    }
    SUBCASE("only matching docs are returned") {
        cfg.k = 10;
        std::vector<ScoredDoc> hits = search_topk(index, "tucson", cfg);
        CHECK(hits.size() == 1);
        CHECK(hits[0].doc.id == "d2");
    }
}

TEST_CASE("score ties break by ascending document id") {
    std::vector<Document> corpus = {
        {"b", "same", "tokens here"},
        {"a", "same", "tokens here"},
        {"c", "same", "tokens here"},
    };
    Index index = build_index(corpus);
    RetrievalConfig cfg;
    std::vector<ScoredDoc> hits = search_topk(index, "same tokens", cfg);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].doc.id == "a");
    CHECK(hits[1].doc.id == "b");
    CHECK(hits[2].doc.id == "c");
    CHECK(hits[0].score == hits[1].score);
    CHECK(hits[1].score == hits[2].score);
}

namespace {

// Independent BM25 rescore: walks the query tokens per document, no index.
double brute_force_score(const Document& doc, const std::string& query,
                         const std::vector<Document>& corpus, double k1, double b) {
    double n = static_cast<double>(corpus.size());
    double total_len = 0;
    for (const Document& d : corpus) {
        total_len += static_cast<double>(tokenize(d.title + " " + d.text).size());
    }
    double avgdl = total_len / n;

    std::vector<std::string> doc_tokens = tokenize(doc.title + " " + doc.text);
    double dl = static_cast<double>(doc_tokens.size());

    double score = 0.0;
    for (const std::string& term : tokenize(query)) {
        double df = 0;
        for (const Document& d : corpus) {
            std::vector<std::string> tokens = tokenize(d.title + " " + d.text);
            if (std::find(tokens.begin(), tokens.end(), term) != tokens.end()) {
                df += 1;
            }
        }
        if (df == 0) continue;
        double tf = static_cast<double>(
            std::count(doc_tokens.begin(), doc_tokens.end(), term));
        if (tf == 0) continue;
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    return score;
}

}   // namespace

TEST_CASE("BM25 scores match a brute-force rescore on random corpora") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta",
                                            "epsilon", "zeta", "eta", "theta"};
    RetrievalConfig cfg;
    cfg.k = 10;

    for (int iter = 0; iter < 40; ++iter) {
        int docs = 1 + static_cast<int>(rng() % 5);
        std::vector<Document> corpus;
        for (int d = 0; d < docs; ++d) {
            std::string text;
            int len = 1 + static_cast<int>(rng() % 12);
            for (int t = 0; t < len; ++t) {
                text += vocab[rng() % vocab.size()] + " ";
            }
            corpus.push_back({"doc" + std::to_string(d),
                              vocab[rng() % vocab.size()], text});
        }
        std::string query;
        int qlen = 1 + static_cast<int>(rng() % 4);
        for (int t = 0; t < qlen; ++t) query += vocab[rng() % vocab.size()] + " ";

        Index index = build_index(corpus);
        for (const ScoredDoc& hit : search_topk(index, query, cfg)) {
            double expected =
                brute_force_score(hit.doc, query, corpus, cfg.bm25_k1, cfg.bm25_b);
            CHECK(hit.score == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("format_documents_block") {
    CHECK(format_documents_block({}) == "");
    CHECK(format_documents_block({{{"x", "Tucson", "t"}, 1.0}}) == "[1] Tucson: t");
    std::string block = format_documents_block(
        {{{"x", "A", "first"}, 2.0}, {{"y", "B", "second"}, 1.0}});
    CHECK(block == "[1] A: first\n[2] B: second");

    SUBCASE("newlines inside fields are flattened") {
        std::string flat = format_documents_block(
            {{{"x", "Ti\ntle", "li\r\nne"}, 1.0}});
        CHECK(flat == "[1] Ti tle: li  ne");
        CHECK(flat.find('\n') == std::string::npos);
    }
}

TEST_CASE("corpus file IO round trip") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "srr_test_corpus.jsonl";
    std::vector<Document> corpus = fixtures::tiny_corpus();
    write_corpus(path.string(), corpus);
    CHECK(read_corpus(path.string()) == corpus);
    fs::remove(path);

    CHECK_THROWS(read_corpus("/nonexistent/corpus.jsonl"));
}

TEST_CASE("corpus checksum is order- and content-sensitive, stable") {
    std::vector<Document> corpus = fixtures::tiny_corpus();
    std::string sum = corpus_checksum(corpus);
    CHECK(sum.rfind("fnv1a64:", 0) == 0);
    CHECK(sum.size() == 8 + 16);
    CHECK(corpus_checksum(corpus) == sum);

    std::vector<Document> swapped = corpus;
    std::swap(swapped[0], swapped[1]);
    CHECK(corpus_checksum(swapped) != sum);

    std::vector<Document> edited = corpus;
    edited[0].text += "!";
    CHECK(corpus_checksum(edited) != sum);

    // Field boundaries matter: moving a character between fields changes it.
    std::vector<Document> shifted = {{"ab", "c", ""}};
    std::vector<Document> shifted2 = {{"a", "bc", ""}};
    CHECK(corpus_checksum(shifted) != corpus_checksum(shifted2));
}

TEST_CASE("index save/load round trip preserves search behavior") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "srr_test_index";
    Index index = build_index(fixtures::tiny_corpus());
    save_index(index, dir.string());
    Index loaded = load_index(dir.string());

    CHECK(loaded.doc_count() == index.doc_count());
    CHECK(loaded.avg_doc_length() == index.avg_doc_length());
    CHECK(loaded.docs() == index.docs());

    RetrievalConfig cfg;
    std::vector<ScoredDoc> a = search_topk(index, "airport pima county", cfg);
    std::vector<ScoredDoc> b = search_topk(loaded, "airport pima county", cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].doc == b[i].doc);
        CHECK(a[i].score == b[i].score);
    }
    fs::remove_all(dir);

    CHECK_THROWS(load_index("/nonexistent/dir"));
}

namespace {

struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit TestServer() = default;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port);
    }
};

}   // namespace

TEST_CASE("remote_search success path") {
    TestServer ts;
    nlohmann::json seen_body;
    ts.server.Post("/search", [&](const httplib::Request& req,
                                  httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        nlohmann::json hits = {
            {"hits",
             {{{"id", "r1"}, {"title", "T1"}, {"text", "body one"}, {"score", 2.0}},
              {{"id", "r2"}, {"title", "T2"}, {"text", "body two"}, {"score", 1.0}}}}};
        res.set_content(hits.dump(), "application/json");
    });
    ts.start();

    RemoteResult result = remote_search(ts.endpoint(), "my query", 5);
    REQUIRE(result.ok());
    REQUIRE(result.docs.size() == 2);
    CHECK(result.docs[0].id == "r1");
    CHECK(result.docs[0].title == "T1");
    CHECK(result.docs[1].text == "body two");
    CHECK(seen_body["query"] == "my query");
    CHECK(seen_body["k"] == 5);

    SUBCASE("server ranking preserved, truncated to k") {
        RemoteResult one = remote_search(ts.endpoint(), "q", 1);
        REQUIRE(one.ok());
        REQUIRE(one.docs.size() == 1);
        CHECK(one.docs[0].id == "r1");
    }
}

TEST_CASE("remote_search endpoint path prefixes are honored") {
    TestServer ts;
    std::atomic<int> prefixed_calls{0};
    ts.server.Post("/api/v2/search", [&](const httplib::Request&,
                                         httplib::Response& res) {
        ++prefixed_calls;
        res.set_content(R"({"hits":[]})", "application/json");
    });
    ts.start();

    RemoteResult result = remote_search(ts.endpoint() + "/api/v2", "q", 3);
    CHECK(result.ok());
    CHECK(result.docs.empty());
    CHECK(prefixed_calls == 1);
}

TEST_CASE("remote_search error taxonomy") {
    SUBCASE("http status") {
        TestServer ts;
        ts.server.Post("/search", [](const httplib::Request&, httplib::Response& res) {
            res.status = 503;
        });
        ts.start();
        RemoteResult result = remote_search(ts.endpoint(), "q", 3);
        REQUIRE_FALSE(result.ok());
        CHECK(result.error->kind == RemoteError::Kind::HttpStatus);
        CHECK(result.error->status == 503);
    }
    SUBCASE("malformed response body") {
        TestServer ts;
        ts.server.Post("/search", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("this is not json", "text/plain");
        });
        ts.start();
        RemoteResult result = remote_search(ts.endpoint(), "q", 3);
        REQUIRE_FALSE(result.ok());
        CHECK(result.error->kind == RemoteError::Kind::MalformedResponse);
    }
    SUBCASE("json but wrong shape") {
        TestServer ts;
        ts.server.Post("/search", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"results": []})", "application/json");
        });
        ts.start();
        RemoteResult result = remote_search(ts.endpoint(), "q", 3);
        REQUIRE_FALSE(result.ok());
        CHECK(result.error->kind == RemoteError::Kind::MalformedResponse);
    }
    SUBCASE("hit missing required fields") {
        TestServer ts;
        ts.server.Post("/search", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"hits":[{"title":"no id or text"}]})",
                            "application/json");
        });
        ts.start();
        RemoteResult result = remote_search(ts.endpoint(), "q", 3);
        REQUIRE_FALSE(result.ok());
        CHECK(result.error->kind == RemoteError::Kind::MalformedResponse);
        CHECK(result.docs.empty());
    }
    SUBCASE("connection refused is a transport error") {
        RemoteResult result = remote_search("http://127.0.0.1:1", "q", 3, 2000);
        REQUIRE_FALSE(result.ok());
        CHECK((result.error->kind == RemoteError::Kind::Transport ||
               result.error->kind == RemoteError::Kind::Timeout));
    }
}

TEST_CASE("RemoteRetriever maps failures to a rollout note") {
    RemoteRetriever retriever("http://127.0.0.1:1", 2000);
    FetchResult result = retriever.fetch("q", 3);
    CHECK(result.hits.empty());
    REQUIRE(result.error.has_value());
    CHECK(result.error->rfind("retrieval failed: ", 0) == 0);
}

TEST_CASE("RemoteRetriever forwards hits with zero scores") {
    TestServer ts;
    ts.server.Post("/search", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            R"({"hits":[{"id":"r1","title":"T","text":"payload","score":9.9}]})",
            "application/json");
    });
    ts.start();

    RemoteRetriever retriever(ts.endpoint(), 2000);
    FetchResult result = retriever.fetch("q", 3);
    REQUIRE_FALSE(result.error.has_value());
    REQUIRE(result.hits.size() == 1);
    CHECK(result.hits[0].doc.id == "r1");
    CHECK(result.hits[0].score == 0.0);   // remote rank order, local scores unknown
}

TEST_CASE("retrieval config validation") {
    RetrievalConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SUBCASE("k") {
        cfg.k = 0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("b range") {
        cfg.bm25_b = 1.5;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("remote needs endpoint") {
        cfg.backend = Backend::Remote;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg.endpoint = "http://x";
        CHECK_NOTHROW(cfg.validate());
    }
}
