#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace divplan {

struct MockJudgeConfig {
    std::string host = "127.0.0.1";
    int port = 0;        // 0 picks an ephemeral port
    double chaos = 0.0;  // probability of a hallucinated or malformed reply
    std::uint64_t seed = 0;
};

// Local HTTP judge speaking the chat-completion wire format. Scoring reads
// the geometry sidecar and defers to the metric oracle, so transport,
// encoding, and parsing get exercised without any model. Chaos replies
// alternate between naming an answer outside the candidate set and emitting
// text with no scores at all.
class MockJudge {
public:
    explicit MockJudge(MockJudgeConfig cfg = {});
    ~MockJudge();

    MockJudge(const MockJudge&) = delete;
    MockJudge& operator=(const MockJudge&) = delete;

    void start();  // binds and serves on a background thread; throws on failure
    void stop();   // idempotent
    bool running() const;
    int port() const;
    std::string url() const;  // http://host:port

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace divplan
