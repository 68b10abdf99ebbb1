#include "vistruct/backend.hpp"

#include <cstring>

#include "vistruct/error.hpp"

namespace vistruct {

std::string to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    throw Error("unknown Role");
}

void ChatRequest::validate() const {
    if (temperature < 0.0) throw ValidationError("chat request: temperature must be >= 0");
    if (max_tokens <= 0) throw ValidationError("chat request: max_tokens must be > 0");
    bool has_user = false;
    std::size_t i = 0;
    if (i < messages.size() && messages[i].role == Role::system) ++i;
    Role expected = Role::user;
    for (; i < messages.size(); ++i) {
        if (messages[i].role == Role::system)
            throw ValidationError("chat request: system message only allowed at the start");
        if (messages[i].role != expected)
            throw ValidationError("chat request: roles must alternate user/assistant");
        if (messages[i].role == Role::user) has_user = true;
        expected = expected == Role::user ? Role::assistant : Role::user;
    }
    if (!has_user) throw ValidationError("chat request: at least one user message required");
}

std::string ChatRequest::canonical() const {
    // length-prefixed fields so distinct requests can never collide; the
    // temperature is encoded as its bit pattern (locale-proof and exact)
    std::string out;
    for (const auto& m : messages) {
        out += to_string(m.role);
        out += ':';
        out += std::to_string(m.content.size());
        out += ':';
        out += m.content;
        out += '\x1f';
    }
    std::uint64_t temperature_bits = 0;
    std::memcpy(&temperature_bits, &temperature, sizeof(temperature_bits));
    out += "t=" + std::to_string(temperature_bits);
    out += ";mt=" + std::to_string(max_tokens);
    out += ";seed=" + std::to_string(seed);
    return out;
}

void BackendConfig::validate() const {
    if (requests_per_minute <= 0)
        throw ValidationError("backend config: requests_per_minute must be > 0");
    if (max_retries < 0) throw ValidationError("backend config: max_retries must be >= 0");
    if (permits <= 0) throw ValidationError("backend config: permits must be > 0");
}

}  // namespace vistruct
