#pragma once

#include <optional>
#include <string>

#include "vistruct/backend.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

struct FilterOptions {
    int min_dim = 100;            // images with width or height under this reject
    int min_caption_words = 5;    // whitespace tokens
    int repeat_window = 5;        // token window length for repeat detection
    int repeat_count = 3;         // back-to-back repetitions that reject
    std::string match_template;   // prompt for the instruction-match check
};

/// Source preprocessing gates: rejects image_too_small when either dimension
/// is under min_dim, then caption_invalid when the raw caption has fewer
/// than min_caption_words whitespace tokens or ends mid-word with a
/// truncation ellipsis.
std::optional<RejectReason> filter_image_record(const ImageRecord& record, int min_dim,
                                                int min_caption_words);

/// Asks the backend whether the description matches the instruction and
/// parses the first token of the reply case-insensitively; anything but
/// yes/no counts as no (conservative) and logs a parse warning.
bool check_instruction_match(const std::string& description, const Instruction& instruction,
                             ChatBackend& backend, std::uint64_t seed,
                             const std::string& template_text);

/// Answer gates: rejects answer_incomplete when the trimmed answer is empty
/// or does not end in terminal punctuation / closing quote / emoji, then
/// answer_repetitive when any window of repeat_window lowercase tokens
/// repeats at least repeat_count times back-to-back.
std::optional<RejectReason> check_answer_quality(const std::string& answer, int repeat_window,
                                                 int repeat_count);

/// Full gate chain in fixed order (image, caption, match, completeness,
/// repetition); the first failing gate supplies the single reject reason.
std::optional<RejectReason> apply_filters(const Instance& instance, const ImageRecord& image,
                                          const Instruction& instruction, ChatBackend& backend,
                                          std::uint64_t seed, const FilterOptions& options);

}  // namespace vistruct
