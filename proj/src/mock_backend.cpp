#include "vistruct/mock_backend.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <unordered_set>

#include "vistruct/error.hpp"
#include "vistruct/rng.hpp"

namespace vistruct {

namespace {

constexpr std::array<const char*, 10> kVerbs = {
    "write", "describe", "compose", "draft", "summarize",
    "imagine", "design", "explain", "narrate", "invent"};

constexpr std::array<const char*, 10> kNouns = {
    "poem", "story", "caption", "post", "slogan",
    "review", "headline", "recipe", "letter", "summary"};

constexpr std::array<const char*, 10> kAdjectives = {
    "quiet", "bright", "bold", "subtle", "warm",
    "cool", "vivid", "muted", "gentle", "sharp"};

constexpr std::array<const char*, 10> kSubjects = {
    "foreground", "background", "lighting", "composition", "texture",
    "contrast", "framing", "palette", "mood", "layout"};

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "the",  "this",  "that",  "with", "about", "from",  "into", "your",
        "their", "there", "then",  "than", "what",  "when",  "where", "does",
        "have", "has",   "been",  "will", "would", "please", "each", "every",
        "them", "they",  "some",  "very", "based", "following"};
    return words;
}

std::string all_content(const ChatRequest& request) {
    std::string out;
    for (const auto& m : request.messages) {
        out += m.content;
        out += '\n';
    }
    return out;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

/// Text between `marker` and the earliest following stop marker (or end).
std::string capture_after(const std::string& text, const std::string& marker,
                          const std::vector<std::string>& stop_markers) {
    const std::size_t pos = text.find(marker);
    if (pos == std::string::npos) return "";
    const std::size_t start = pos + marker.size();
    std::size_t end = text.size();
    for (const auto& stop : stop_markers) {
        const std::size_t s = text.find(stop, start);
        if (s != std::string::npos && s < end) end = s;
    }
    std::string region = text.substr(start, end - start);
    // trim
    const auto a = region.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = region.find_last_not_of(" \t\r\n");
    return region.substr(a, b - a + 1);
}

std::string hex_of(std::uint64_t value, int digits) {
    static const char* hexdigits = "0123456789abcdef";
    std::string out(digits, '0');
    for (int i = digits - 1; i >= 0; --i) {
        out[i] = hexdigits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string mock_caption(const std::string& prompt, SplitMix64&) {
    const std::string region =
        capture_after(prompt, "Original caption:", {"[task:", "Respond", "Write"});
    auto words = mock::content_words(region);
    if (words.size() > 12) words.resize(12);
    std::string sentence;
    if (words.empty()) {
        sentence = "The picture contains an open area with soft light.";
    } else {
        sentence = "The picture contains";
        for (const auto& w : words) sentence += " " + w;
        sentence += ".";
    }
    return sentence + " It is rendered with many small elements in every corner.";
}

std::string mock_instruction(std::uint64_t h, SplitMix64& rng) {
    const std::string verb = kVerbs[rng.next_below(kVerbs.size())];
    const std::string noun = kNouns[rng.next_below(kNouns.size())];
    return "MOCK-INSTRUCTION " + hex_of(h, 8) + ": " + verb + " a " + noun + " about the scene";
}

std::string mock_consolidate(const std::string& prompt) {
    // the merge prompt lists member instructions as "- " bullets
    const std::string region = capture_after(prompt, "Instructions to merge:", {"Merged instruction"});
    std::vector<std::string> members;
    std::size_t pos = 0;
    while (pos < region.size()) {
        std::size_t eol = region.find('\n', pos);
        if (eol == std::string::npos) eol = region.size();
        std::string line = region.substr(pos, eol - pos);
        const auto dash = line.find("- ");
        if (dash != std::string::npos) {
            std::string text = line.substr(dash + 2);
            const auto b = text.find_last_not_of(" \t\r");
            if (b != std::string::npos) members.push_back(text.substr(0, b + 1));
        }
        pos = eol + 1;
    }
    if (members.empty()) return "";
    // most frequent member, earliest on ties
    std::map<std::string, int> counts;
    for (const auto& m : members) counts[m]++;
    std::string best = members.front();
    int best_count = counts[best];
    for (const auto& m : members) {
        if (counts[m] > best_count) {
            best = m;
            best_count = counts[m];
        }
    }
    return best;
}

std::string mock_match_check(const std::string& prompt) {
    const std::string description = capture_after(prompt, "Description:", {"Instruction:"});
    const std::string instruction = capture_after(prompt, "Instruction:", {"Answer yes"});
    const auto inst_words = mock::content_words(instruction);
    const auto desc_words = mock::content_words(description);
    const std::unordered_set<std::string> desc_set(desc_words.begin(), desc_words.end());
    for (const auto& w : inst_words)
        if (desc_set.count(w)) return "Yes.";
    return "No.";
}

std::string mock_answer(const std::string& prompt, SplitMix64& rng) {
    if (contains(prompt, "qqtruncate"))
        return "The view opens onto a wide stretch that slowly fades into a haze of";
    if (contains(prompt, "qqrepeat"))
        return "grab this rare deal today grab this rare deal today grab this rare deal today "
               "grab this rare deal today.";
    const std::string a1 = kAdjectives[rng.next_below(kAdjectives.size())];
    const std::string s1 = kSubjects[rng.next_below(kSubjects.size())];
    const std::string a2 = kAdjectives[rng.next_below(kAdjectives.size())];
    const std::string s2 = kSubjects[rng.next_below(kSubjects.size())];
    return "The " + a1 + " " + s1 + " stands out immediately and gives the whole frame its " +
           "character. A " + a2 + " " + s2 + " settles underneath it, keeping the result balanced.";
}

std::string mock_judge(const std::string& prompt, MockChatBackend::JudgePolicy policy) {
    if (policy == MockChatBackend::JudgePolicy::prefer_first) return "A";
    const std::string a = capture_after(prompt, "Answer A:", {"Answer B:"});
    const std::string b = capture_after(prompt, "Answer B:", {"Reply with"});
    if (a.size() > b.size()) return "A";
    if (b.size() > a.size()) return "B";
    return "tie";
}

}  // namespace

namespace mock {

std::vector<std::string> content_words(const std::string& text) {
    std::vector<std::string> words;
    std::unordered_set<std::string> seen;
    std::string token;
    auto flush = [&] {
        if (token.size() >= 4 && !stopwords().count(token) && !seen.count(token)) {
            bool alpha = std::all_of(token.begin(), token.end(), [](unsigned char c) {
                return std::isalpha(c) != 0;
            });
            if (alpha) {
                words.push_back(token);
                seen.insert(token);
            }
        }
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c))
            token.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return words;
}

}  // namespace mock

std::string MockChatBackend::chat_complete(const ChatRequest& request) {
    request.validate();
    const std::string prompt = all_content(request);
    const std::uint64_t h = fnv1a64(request.canonical()) ^ (seed_ * 0x9e3779b97f4a7c15ull);
    SplitMix64 rng(h);

    if (contains(prompt, "qqempty")) return "";
    if (contains(prompt, "[task:caption]")) return mock_caption(prompt, rng);
    if (contains(prompt, "[task:new-instruction]")) return mock_instruction(h, rng);
    if (contains(prompt, "[task:consolidate]")) return mock_consolidate(prompt);
    if (contains(prompt, "[task:match-check]")) return mock_match_check(prompt);
    if (contains(prompt, "[task:answer]")) return mock_answer(prompt, rng);
    if (contains(prompt, "[task:judge]")) return mock_judge(prompt, judge_policy_);
    return "MOCK-COMPLETION " + hex_of(h, 16);
}

std::vector<Vec> MockEmbedBackend::embed_text(const std::vector<std::string>& texts,
                                              EmbedSpace space) {
    if (texts.empty()) throw ValidationError("embed_text: empty input list");
    std::vector<Vec> out;
    out.reserve(texts.size());
    const std::string tag = space == EmbedSpace::semantic ? "semantic|" : "joint|";
    const int d = dim(space);
    for (const auto& text : texts) {
        if (text.empty()) throw ValidationError("embed_text: empty input string");
        out.push_back(pseudo_embedding(fnv1a64(tag + text) ^ seed_, d));
    }
    return out;
}

Vec MockEmbedBackend::embed_image(const std::string& image_uri) {
    if (image_uri.empty()) throw ValidationError("embed_image: empty uri");
    return pseudo_embedding(fnv1a64("joint|image|" + image_uri) ^ seed_, joint_dim_);
}

}  // namespace vistruct
