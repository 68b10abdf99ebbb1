#include "vistruct/filtering.hpp"

#include <cctype>

#include "vistruct/error.hpp"
#include "vistruct/log.hpp"
#include "vistruct/prompts.hpp"
#include "vistruct/text.hpp"

namespace vistruct {

namespace {

// last Unicode codepoint of a UTF-8 string (0 when empty/invalid)
char32_t last_codepoint(const std::string& s) {
    if (s.empty()) return 0;
    std::size_t i = s.size() - 1;
    while (i > 0 && (static_cast<unsigned char>(s[i]) & 0xc0) == 0x80) --i;
    const unsigned char lead = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    int extra = 0;
    if (lead < 0x80) {
        cp = lead;
    } else if ((lead & 0xe0) == 0xc0) {
        cp = lead & 0x1f;
        extra = 1;
    } else if ((lead & 0xf0) == 0xe0) {
        cp = lead & 0x0f;
        extra = 2;
    } else if ((lead & 0xf8) == 0xf0) {
        cp = lead & 0x07;
        extra = 3;
    } else {
        return 0;
    }
    if (i + static_cast<std::size_t>(extra) + 1 != s.size()) return 0;  // truncated sequence
    for (int k = 1; k <= extra; ++k)
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3f);
    return cp;
}

bool is_terminal_codepoint(char32_t cp) {
    switch (cp) {
        case U'.':
        case U'!':
        case U'?':
        case U'"':
        case U'\'':
        case U')':
        case U']':
        case U'}':
        case U'’':  // right single quote
        case U'”':  // right double quote
        case U'»':  // right angle quote
            return true;
        default:
            break;
    }
    if (cp >= 0x1f000 && cp <= 0x1faff) return true;  // emoji blocks
    if (cp >= 0x2600 && cp <= 0x27bf) return true;    // misc symbols / dingbats
    if (cp == 0xfe0f) return true;                    // emoji variation selector
    return false;
}

// "word..." style endings: an ellipsis glued to a word character
bool ends_with_truncation_ellipsis(const std::string& caption) {
    const std::string trimmed = trim_copy(caption);
    std::size_t end = trimmed.size();
    bool has_ellipsis = false;
    if (end >= 3 && trimmed.compare(end - 3, 3, "...") == 0) {
        end -= 3;
        has_ellipsis = true;
    } else if (end >= 3 && trimmed.compare(end - 3, 3, "…") == 0) {  // U+2026
        end -= 3;
        has_ellipsis = true;
    }
    if (!has_ellipsis || end == 0) return false;
    const unsigned char prev = static_cast<unsigned char>(trimmed[end - 1]);
    return std::isalnum(prev) != 0;
}

}  // namespace

std::optional<RejectReason> filter_image_record(const ImageRecord& record, int min_dim,
                                                int min_caption_words) {
    if (record.width < min_dim || record.height < min_dim)
        return RejectReason::image_too_small;
    const auto tokens = whitespace_tokens(record.raw_caption);
    if (static_cast<int>(tokens.size()) < min_caption_words)
        return RejectReason::caption_invalid;
    if (ends_with_truncation_ellipsis(record.raw_caption)) return RejectReason::caption_invalid;
    return std::nullopt;
}

bool check_instruction_match(const std::string& description, const Instruction& instruction,
                             ChatBackend& backend, std::uint64_t seed,
                             const std::string& template_text) {
    if (description.empty() || instruction.text.empty())
        throw ValidationError("check_instruction_match: description and instruction required");

    ChatRequest request;
    request.messages.push_back(
        {Role::user, render_prompt(template_text, {{"description", description},
                                                   {"instruction", instruction.text}})});
    request.seed = seed;
    const std::string reply = backend.chat_complete(request);

    std::string first;
    for (unsigned char c : reply) {
        if (std::isalpha(c)) {
            first.push_back(static_cast<char>(std::tolower(c)));
        } else if (!first.empty()) {
            break;
        }
    }
    if (first == "yes") return true;
    if (first == "no") return false;
    log::warn("unparseable match-check reply treated as no: " +
              reply.substr(0, std::min<std::size_t>(reply.size(), 60)));
    return false;
}

std::optional<RejectReason> check_answer_quality(const std::string& answer, int repeat_window,
                                                 int repeat_count) {
    const std::string trimmed = trim_copy(answer);
    if (trimmed.empty() || !is_terminal_codepoint(last_codepoint(trimmed)))
        return RejectReason::answer_incomplete;

    auto tokens = whitespace_tokens(trimmed);
    for (auto& t : tokens) t = to_lower(t);
    const int n = static_cast<int>(tokens.size());
    const int w = repeat_window;
    if (w >= 1 && n >= w * repeat_count) {
        for (int start = 0; start + w * repeat_count <= n; ++start) {
            bool repeats = true;
            for (int r = 1; r < repeat_count && repeats; ++r)
                for (int j = 0; j < w; ++j)
                    if (tokens[start + j] != tokens[start + r * w + j]) {
                        repeats = false;
                        break;
                    }
            if (repeats) return RejectReason::answer_repetitive;
        }
    }
    return std::nullopt;
}

std::optional<RejectReason> apply_filters(const Instance& instance, const ImageRecord& image,
                                          const Instruction& instruction, ChatBackend& backend,
                                          std::uint64_t seed, const FilterOptions& options) {
    if (auto reason = filter_image_record(image, options.min_dim, options.min_caption_words))
        return reason;
    if (!check_instruction_match(image.detailed_description, instruction, backend, seed,
                                 options.match_template))
        return RejectReason::instruction_mismatch;
    return check_answer_quality(instance.answer, options.repeat_window, options.repeat_count);
}

}  // namespace vistruct
