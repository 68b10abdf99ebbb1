#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vistruct/backend.hpp"

namespace vistruct {

/// Deterministic offline chat backend. Responses are templates keyed by a
/// task tag embedded in the prompt ([task:caption], [task:new-instruction],
/// [task:consolidate], [task:match-check], [task:answer], [task:judge]);
/// everything else about the output is a pure function of (request, seed).
///
/// Planted trigger tokens let fixtures drive the failure branches:
///   - "qqtruncate" anywhere in an answer prompt -> answer with no terminal
///     punctuation
///   - "qqrepeat" -> answer that loops a five-token phrase
///   - "qqempty" in any prompt -> empty completion
class MockChatBackend : public ChatBackend {
public:
    enum class JudgePolicy {
        prefer_longer,  // order-consistent: the longer answer wins, ties tie
        prefer_first    // position-biased: always prefers the first-presented answer
    };

    explicit MockChatBackend(std::uint64_t seed = 0,
                             JudgePolicy judge_policy = JudgePolicy::prefer_longer)
        : seed_(seed), judge_policy_(judge_policy) {}

    std::string chat_complete(const ChatRequest& request) override;

    void set_judge_policy(JudgePolicy policy) { judge_policy_ = policy; }

private:
    std::uint64_t seed_;
    JudgePolicy judge_policy_;
};

/// Deterministic offline embedding backend: unit-norm pseudo-embeddings
/// derived from a seeded hash of the text (or image uri).
class MockEmbedBackend : public EmbedBackend {
public:
    explicit MockEmbedBackend(std::uint64_t seed = 0, int semantic_dim = 64, int joint_dim = 64)
        : seed_(seed), semantic_dim_(semantic_dim), joint_dim_(joint_dim) {}

    std::vector<Vec> embed_text(const std::vector<std::string>& texts, EmbedSpace space) override;
    Vec embed_image(const std::string& image_uri) override;
    int dim(EmbedSpace space) const override {
        return space == EmbedSpace::semantic ? semantic_dim_ : joint_dim_;
    }

private:
    std::uint64_t seed_;
    int semantic_dim_;
    int joint_dim_;
};

namespace mock {
/// Content words of a text as the mock match-check sees them: lowercase
/// alphabetic tokens of length >= 4, minus a small stopword list.
std::vector<std::string> content_words(const std::string& text);
}  // namespace mock

}  // namespace vistruct
