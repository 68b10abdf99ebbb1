#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vistruct/embedding.hpp"

namespace vistruct {

enum class Role { system, user, assistant };

struct ChatMessage {
    Role role;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::uint64_t seed = 0;

    /// At least one user message; roles alternate after any leading system
    /// message. Throws ValidationError otherwise.
    void validate() const;

    /// Stable textual form used for hashing (cache keys, mock derivation).
    std::string canonical() const;
};

struct BackendConfig {
    std::string endpoint;                 // e.g. http://localhost:8000
    std::string model_name;
    int requests_per_minute = 600;
    int max_retries = 3;
    std::filesystem::path cache_dir;      // empty = caching disabled
    int permits = 4;                      // max in-flight requests
    std::string api_key_env = "VISTRUCT_API_KEY";

    void validate() const;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat_complete(const ChatRequest& request) = 0;
};

enum class EmbedSpace { semantic, joint };

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    /// One unit-norm vector per input, order preserved.
    virtual std::vector<Vec> embed_text(const std::vector<std::string>& texts,
                                        EmbedSpace space) = 0;
    /// Unit-norm vector in the joint space.
    virtual Vec embed_image(const std::string& image_uri) = 0;
    virtual int dim(EmbedSpace space) const = 0;
};

/// Decorator that records every request it forwards. Tests use it to assert
/// on prompt contents (in-context examples, grounding descriptions).
class RecordingChatBackend : public ChatBackend {
public:
    explicit RecordingChatBackend(ChatBackend& inner) : inner_(inner) {}

    std::string chat_complete(const ChatRequest& request) override {
        requests_.push_back(request);
        return inner_.chat_complete(request);
    }

    const std::vector<ChatRequest>& requests() const { return requests_; }
    void clear() { requests_.clear(); }

private:
    ChatBackend& inner_;
    std::vector<ChatRequest> requests_;
};

std::string to_string(Role role);

}  // namespace vistruct
