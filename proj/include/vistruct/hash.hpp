#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vistruct {

/// SHA-256 hex digest of a byte string. Content addresses for the response
/// cache and the run manifest.
std::string sha256_hex(std::string_view data);

/// SHA-256 hex digest of a file's contents. Throws on unreadable path.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace vistruct
