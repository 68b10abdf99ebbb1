#include "vistruct/http_backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "vistruct/error.hpp"
#include "vistruct/hash.hpp"
#include "vistruct/log.hpp"
#include "vistruct/rng.hpp"

namespace vistruct {

namespace fs = std::filesystem;
using std::chrono::milliseconds;

Transport make_http_transport(const std::string& endpoint) {
    return [endpoint](const std::string& path, const std::string& body,
                      const std::string& api_key) -> HttpResponse {
        httplib::Client client(endpoint);
        client.set_connection_timeout(30);
        client.set_read_timeout(300);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) throw Error("network error: " + httplib::to_string(res.error()));
        return HttpResponse{res->status, res->body};
    };
}

RateLimiter::RateLimiter(int per_minute, Clock clock, Sleeper sleeper)
    : per_minute_(per_minute), clock_(std::move(clock)), sleeper_(std::move(sleeper)) {}

RateLimiter::RateLimiter(int per_minute)
    : RateLimiter(
          per_minute, [] { return std::chrono::steady_clock::now(); },
          [](milliseconds d) { std::this_thread::sleep_for(d); }) {}

void RateLimiter::acquire() {
    std::unique_lock lock(mutex_);
    for (;;) {
        const auto now = clock_();
        const auto window_start = now - std::chrono::seconds(60);
        while (!admitted_.empty() && admitted_.front() <= window_start) admitted_.pop_front();
        if (static_cast<int>(admitted_.size()) < per_minute_) {
            admitted_.push_back(now);
            return;
        }
        const auto wait = admitted_.front() + std::chrono::seconds(60) - now;
        lock.unlock();
        sleeper_(std::chrono::duration_cast<milliseconds>(wait) + milliseconds(1));
        lock.lock();
    }
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) fs::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    if (dir_.empty()) return std::nullopt;
    const fs::path path = dir_ / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ResponseCache::put(const std::string& key, const std::string& value) {
    if (dir_.empty()) return;
    std::lock_guard lock(mutex_);
    const fs::path path = dir_ / (key + ".json");
    const fs::path tmp = dir_ / (key + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cache write failed: " + tmp.string());
        out << value;
    }
    fs::rename(tmp, path);
}

void PermitGate::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void PermitGate::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

namespace {

std::string api_key_from_env(const std::string& var) {
    if (var.empty()) return "";
    const char* value = std::getenv(var.c_str());
    return value ? value : "";
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

Json chat_body(const ChatRequest& request, const std::string& model) {
    Json body;
    body["model"] = model;
    Json messages = Json::array();
    for (const auto& m : request.messages) {
        Json msg;
        msg["role"] = to_string(m.role);
        msg["content"] = m.content;
        messages.push_back(std::move(msg));
    }
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["seed"] = request.seed;
    return body;
}

}  // namespace

HttpChatBackend::HttpChatBackend(BackendConfig config, Transport transport, Clock clock,
                                 Sleeper sleeper)
    : config_(std::move(config)),
      transport_(transport ? transport : make_http_transport(config_.endpoint)),
      sleeper_(sleeper ? sleeper
                       : Sleeper([](milliseconds d) { std::this_thread::sleep_for(d); })),
      limiter_(config_.requests_per_minute,
               clock ? clock : Clock([] { return std::chrono::steady_clock::now(); }), sleeper_),
      cache_(config_.cache_dir),
      permits_(config_.permits),
      api_key_(api_key_from_env(config_.api_key_env)) {
    config_.validate();
}

std::string HttpChatBackend::round_trip(const std::string& path, const std::string& body,
                                        const std::string& cache_salt) {
    stats_.requests.fetch_add(1);
    const std::string key = sha256_hex(config_.model_name + "\x1f" + path + "\x1f" + cache_salt +
                                       "\x1f" + body);
    if (auto hit = cache_.get(key)) {
        stats_.cache_hits.fetch_add(1);
        return *hit;
    }

    // backoff jitter seeded from the request so retry schedules are reproducible
    SplitMix64 jitter(fnv1a64(key));
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            stats_.retries.fetch_add(1);
            const double base = std::min(32.0, std::ldexp(1.0, attempt - 1));  // 1s, 2s, 4s... cap 32s
            const double scale = 0.5 + 0.5 * jitter.next_double();
            sleeper_(milliseconds(static_cast<std::int64_t>(base * scale * 1000.0)));
            log::warn("backend retry " + std::to_string(attempt) + " after: " + last_error);
        }
        limiter_.acquire();
        permits_.acquire();
        HttpResponse response;
        bool transport_failed = false;
        try {
            stats_.network_calls.fetch_add(1);
            response = transport_(path, body, api_key_);
        } catch (const std::exception& e) {
            transport_failed = true;
            last_error = e.what();
        }
        permits_.release();
        if (transport_failed) continue;
        if (retryable_status(response.status)) {
            last_error = "HTTP " + std::to_string(response.status);
            continue;
        }
        if (response.status != 200)
            throw Error("backend request failed: HTTP " + std::to_string(response.status) + ": " +
                        response.body);
        cache_.put(key, response.body);
        return response.body;
    }
    throw BackendExhausted("backend exhausted after " + std::to_string(config_.max_retries + 1) +
                               " attempts: " + last_error,
                           config_.max_retries + 1);
}

std::string HttpChatBackend::chat_complete(const ChatRequest& request) {
    request.validate();
    const std::string body = chat_body(request, config_.model_name).dump();
    const std::string raw = round_trip("/v1/chat/completions", body, "");
    try {
        const Json j = Json::parse(raw);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed chat completion response: ") + e.what());
    }
}

HttpEmbedBackend::HttpEmbedBackend(BackendConfig config, int semantic_dim, int joint_dim,
                                   std::string semantic_model, std::string joint_model,
                                   Transport transport)
    : chat_(std::move(config), std::move(transport)),
      semantic_dim_(semantic_dim),
      joint_dim_(joint_dim),
      semantic_model_(std::move(semantic_model)),
      joint_model_(std::move(joint_model)) {}

std::vector<Vec> HttpEmbedBackend::embed_text(const std::vector<std::string>& texts,
                                              EmbedSpace space) {
    if (texts.empty()) throw ValidationError("embed_text: empty input list");
    for (const auto& t : texts)
        if (t.empty()) throw ValidationError("embed_text: empty input string");

    const std::string& model = space == EmbedSpace::semantic ? semantic_model_ : joint_model_;
    Json body;
    body["model"] = model;
    body["input"] = texts;
    const std::string raw = chat_.round_trip("/v1/embeddings", body.dump(), model);

    try {
        const Json j = Json::parse(raw);
        const auto& data = j.at("data");
        if (data.size() != texts.size())
            throw Error("embeddings response: expected " + std::to_string(texts.size()) +
                        " vectors, got " + std::to_string(data.size()));
        std::vector<Vec> out;
        out.reserve(texts.size());
        const int expected = dim(space);
        for (const auto& entry : data) {
            const auto& values = entry.at("embedding");
            Vec v(values.size());
            for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i].get<double>();
            if (expected > 0 && v.size() != expected)
                throw Error("embeddings response: dimension mismatch, expected " +
                            std::to_string(expected) + ", got " + std::to_string(v.size()));
            out.push_back(l2_normalized(v));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed embeddings response: ") + e.what());
    }
}

Vec HttpEmbedBackend::embed_image(const std::string& image_uri) {
    if (image_uri.empty()) throw ValidationError("embed_image: empty uri");
    // joint-space servers accept the image reference as an input string
    return embed_text({image_uri}, EmbedSpace::joint).front();
}

}  // namespace vistruct
