#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vistruct/backend.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// (path, json body, api key) -> response. The default transport speaks
/// HTTP(S) via cpp-httplib; tests substitute a fake.
using Transport =
    std::function<HttpResponse(const std::string& path, const std::string& body,
                               const std::string& api_key)>;

Transport make_http_transport(const std::string& endpoint);

using Clock = std::function<std::chrono::steady_clock::time_point()>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Sliding-window limiter: never admits more than `per_minute` acquisitions
/// in any 60-second window. Clock and sleep are injectable so the window
/// property is testable without wall time.
class RateLimiter {
public:
    RateLimiter(int per_minute, Clock clock, Sleeper sleeper);
    explicit RateLimiter(int per_minute);

    void acquire();

private:
    int per_minute_;
    Clock clock_;
    Sleeper sleeper_;
    std::mutex mutex_;
    std::deque<std::chrono::steady_clock::time_point> admitted_;
};

/// One file per request hash under cache_dir. Writes go through a temp file
/// and rename, so concurrent readers never observe partial entries.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& value);
    bool enabled() const { return !dir_.empty(); }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// Counting permits bounding in-flight requests.
class PermitGate {
public:
    explicit PermitGate(int permits) : available_(permits) {}

    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

struct BackendStats {
    std::atomic<std::uint64_t> requests{0};
    std::atomic<std::uint64_t> network_calls{0};
    std::atomic<std::uint64_t> retries{0};
    std::atomic<std::uint64_t> cache_hits{0};
};

/// Chat-completions client for the de-facto standard JSON-over-HTTP format
/// (POST /v1/chat/completions). Retries with exponential backoff and jitter,
/// respects the rate limit, and caches responses content-addressed by
/// request hash so identical re-runs cost zero network calls.
class HttpChatBackend : public ChatBackend {
public:
    HttpChatBackend(BackendConfig config, Transport transport = nullptr,
                    Clock clock = nullptr, Sleeper sleeper = nullptr);

    std::string chat_complete(const ChatRequest& request) override;

    const BackendStats& stats() const { return stats_; }

private:
    std::string round_trip(const std::string& path, const std::string& body,
                           const std::string& cache_salt);

    BackendConfig config_;
    Transport transport_;
    Sleeper sleeper_;
    RateLimiter limiter_;
    ResponseCache cache_;
    PermitGate permits_;
    BackendStats stats_;
    std::string api_key_;

    friend class HttpEmbedBackend;
};

/// Embeddings client (POST /v1/embeddings). Results are L2-normalized on
/// receipt; a configured dimension is enforced when nonzero.
class HttpEmbedBackend : public EmbedBackend {
public:
    HttpEmbedBackend(BackendConfig config, int semantic_dim, int joint_dim,
                     std::string semantic_model, std::string joint_model,
                     Transport transport = nullptr);

    std::vector<Vec> embed_text(const std::vector<std::string>& texts, EmbedSpace space) override;
    Vec embed_image(const std::string& image_uri) override;
    int dim(EmbedSpace space) const override {
        return space == EmbedSpace::semantic ? semantic_dim_ : joint_dim_;
    }

    const BackendStats& stats() const { return chat_.stats(); }

private:
    HttpChatBackend chat_;  // reuses the retry/limit/cache machinery
    int semantic_dim_;
    int joint_dim_;
    std::string semantic_model_;
    std::string joint_model_;
};

}  // namespace vistruct
