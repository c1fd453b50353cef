#include "responsivity/embedding_provider.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"
#include "responsivity/hashing.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <thread>

using namespace responsivity;
using namespace responsivity::simlink;
using nlohmann::json;

namespace {

// Deterministic fake: dimension 3, vector derived from the text length.
class FakeProvider : public EmbeddingProvider {
public:
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        ++calls;
        batch_sizes.push_back(texts.size());
        if (fail_first > 0) {
            --fail_first;
            throw TransportError("connection refused", 1);
        }
        std::vector<EmbeddingVector> out;
        for (const auto& t : texts) {
            out.push_back({{static_cast<double>(t.size()), 1.0, drift && t == "drift" ? 2.0 : 0.0}});
            if (drift && t == "drift") out.back().values.push_back(9.0);
        }
        if (short_by_one && !out.empty()) out.pop_back();
        return out;
    }
    std::string id() const override { return "fake"; }

    int calls = 0;
    std::vector<std::size_t> batch_sizes;
    int fail_first = 0;
    bool short_by_one = false;
    bool drift = false;
};

class EmbedServer {
public:
    EmbedServer() {
        server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"model": "fake", "dimension": 2})", "application/json");
        });
        server_.Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            const auto body = json::parse(req.body);
            json vectors = json::array();
            for (const auto& t : body.at("texts")) {
                const double n = static_cast<double>(t.get<std::string>().size());
                vectors.push_back({n, 1.0});
            }
            if (status != 200) {
                res.status = status;
                return;
            }
            res.set_content(json{{"dimension", 2}, {"vectors", vectors}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~EmbedServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> hits{0};
    int status = 200;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST(FetchEmbeddings, OneVectorPerTextInOrder) {
    FakeProvider p;
    const auto out = fetch_embeddings({"a", "bbb", "cc"}, p);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].values[0], 1.0);
    EXPECT_EQ(out[1].values[0], 3.0);
    EXPECT_EQ(out[2].values[0], 2.0);
    for (const auto& v : out) EXPECT_EQ(v.dimension(), 3u);
}

TEST(FetchEmbeddings, DuplicatesFetchedOnceAndDiskCacheHits) {
    const auto dir = testsupport::scratch_dir("embed-cache");
    FakeProvider p;
    FetchOptions opts;
    opts.cache_dir = dir.string();
    const auto first = fetch_embeddings({"same", "same", "other"}, p, opts);
    EXPECT_EQ(first[0], first[1]);
    EXPECT_EQ(p.batch_sizes, (std::vector<std::size_t>{2}));
    const auto second = fetch_embeddings({"other", "same"}, p, opts);
    EXPECT_EQ(p.calls, 1);
    EXPECT_EQ(second[0], first[2]);
    EXPECT_EQ(second[1], first[0]);
    // key is sha256(provider id, NUL, text)
    EXPECT_TRUE(std::filesystem::exists(dir / (sha256_hex(std::string("fake") + '\0' + "same") + ".json")));
}

TEST(FetchEmbeddings, BatchesAndConcurrency) {
    FakeProvider p;
    FetchOptions opts;
    opts.batch_size = 2;
    std::vector<std::string> texts;
    for (int i = 0; i < 7; ++i) texts.push_back(std::string(static_cast<std::size_t>(i + 1), 'x'));
    const auto out = fetch_embeddings(texts, p, opts);
    EXPECT_EQ(p.calls, 4);
    for (int i = 0; i < 7; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)].values[0], i + 1.0);

    FakeProvider q;
    opts.max_in_flight = 3;
    EXPECT_EQ(fetch_embeddings(texts, q, opts), out);
}

TEST(FetchEmbeddings, ArityMismatchIsProtocolError) {
    FakeProvider p;
    p.short_by_one = true;
    try {
        fetch_embeddings({"a", "b", "c"}, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
    }
}

TEST(FetchEmbeddings, DimensionDriftIsProtocolError) {
    FakeProvider p;
    p.drift = true;
    try {
        fetch_embeddings({"a", "drift"}, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
    }
}

TEST(FetchEmbeddings, TransportRetriesThenGivesUp) {
    FakeProvider p;
    p.fail_first = 2;
    EXPECT_NO_THROW(fetch_embeddings({"a"}, p));
    EXPECT_EQ(p.calls, 3);

    FakeProvider q;
    q.fail_first = 10;
    try {
        fetch_embeddings({"a"}, q);
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 3);
    }
}

TEST(FileProvider, LooksUpByTextHash) {
    const auto dir = testsupport::scratch_dir("file-provider");
    const auto path = (dir / "emb.json").string();
    write_json_file(path, {{text_hash("hello"), {1.0, 2.0}}});
    FileEmbeddingProvider p(path);
    EXPECT_EQ(p.embed({"hello"})[0].values, (std::vector<double>{1.0, 2.0}));
    EXPECT_EQ(p.id().rfind("file:", 0), 0u);
    try {
        p.embed({"absent"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::lookup);
    }
}

TEST(HttpProvider, RoundTripAgainstLocalServer) {
    EmbedServer server;
    HttpEmbeddingProvider p(server.url());
    EXPECT_TRUE(p.healthy());
    const auto out = p.embed({"abc", "de"});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].values, (std::vector<double>{3.0, 1.0}));
    EXPECT_EQ(out[1].values, (std::vector<double>{2.0, 1.0}));
}

TEST(HttpProvider, ServerErrorIsTransportAfterRetries) {
    EmbedServer server;
    server.status = 503;
    HttpEmbeddingProvider p(server.url());
    try {
        fetch_embeddings({"abc"}, p);
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 3);
        EXPECT_EQ(server.hits.load(), 3);
    }
}

TEST(HttpProvider, UnreachableIsTransport) {
    HttpEmbeddingProvider p("http://127.0.0.1:1", std::chrono::seconds(1));
    EXPECT_FALSE(p.healthy());
    EXPECT_THROW(p.embed({"x"}), TransportError);
}
