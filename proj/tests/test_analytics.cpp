#include <doctest.h>

#include <cmath>
#include <functional>

#include "support/synth.hpp"
#include "vistruct/analytics.hpp"
#include "vistruct/rng.hpp"
#include "vistruct/text.hpp"

using namespace vistruct;

namespace {

// Independent oracle: top-down memoized LCS over token vectors. Shares no
// code with the implementation under test.
std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::vector<int>> memo(a.size() + 1, std::vector<int>(b.size() + 1, -1));
    std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
        if (i == a.size() || j == b.size()) return 0;
        int& slot = memo[i][j];
        if (slot >= 0) return slot;
        if (a[i] == b[j])
            slot = 1 + go(i + 1, j + 1);
        else
            slot = std::max(go(i + 1, j), go(i, j + 1));
        return slot;
    };
    return static_cast<std::size_t>(go(0, 0));
}

RougeScore oracle_rouge(const std::string& candidate, const std::string& reference) {
    const auto c = word_tokens(candidate);
    const auto r = word_tokens(reference);
    RougeScore s;
    if (c.empty() || r.empty()) return s;
    const auto lcs = oracle_lcs(c, r);
    if (lcs == 0) return s;
    s.precision = double(lcs) / double(c.size());
    s.recall = double(lcs) / double(r.size());
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

std::string random_sentence(SplitMix64& rng, std::size_t max_tokens, std::size_t vocab) {
    const std::size_t len = rng.next_below(max_tokens + 1);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        if (!out.empty()) out += " ";
        out += "w" + std::to_string(rng.next_below(vocab));
    }
    return out;
}

Instruction instruction_of(const std::string& id, const std::string& text) {
    Instruction i;
    i.id = id;
    i.text = text;
    i.origin = Origin::generated;
    return i;
}

}  // namespace

TEST_CASE("rouge_l basics") {
    const auto same = rouge_l("The cat sat.", "the CAT sat");
    CHECK(same.precision == doctest::Approx(1.0));
    CHECK(same.recall == doctest::Approx(1.0));
    CHECK(same.f1 == doctest::Approx(1.0));

    const auto disjoint = rouge_l("alpha beta", "gamma delta");
    CHECK(disjoint.f1 == 0.0);
    CHECK(disjoint.precision == 0.0);
    CHECK(disjoint.recall == 0.0);

    CHECK(rouge_l("", "anything").f1 == 0.0);
    CHECK(rouge_l("anything", "").f1 == 0.0);
}

TEST_CASE("rouge_l worked example: 5/6 on the cat/mat pair") {
    const auto score = rouge_l("the cat sat on the mat", "the cat lay on the mat");
    // LCS = [the, cat, on, the, mat] = 5 over 6 tokens each side
    CHECK(std::abs(score.precision - 5.0 / 6.0) <= 1e-12);
    CHECK(std::abs(score.recall - 5.0 / 6.0) <= 1e-12);
    CHECK(std::abs(score.f1 - 5.0 / 6.0) <= 1e-12);
}

TEST_CASE("rouge_l matches the independent oracle on 1000 seeded random pairs") {
    SplitMix64 rng(8881);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_sentence(rng, 30, 12);
        const auto b = random_sentence(rng, 30, 12);
        const auto fast = rouge_l(a, b);
        const auto slow = oracle_rouge(a, b);
        CHECK(std::abs(fast.precision - slow.precision) <= 1e-12);
        CHECK(std::abs(fast.recall - slow.recall) <= 1e-12);
        CHECK(std::abs(fast.f1 - slow.f1) <= 1e-12);
    }
}

TEST_CASE("rouge_l swaps precision and recall under argument swap") {
    SplitMix64 rng(4242);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_sentence(rng, 20, 8);
        const auto b = random_sentence(rng, 20, 8);
        const auto ab = rouge_l(a, b);
        const auto ba = rouge_l(b, a);
        CHECK(ab.precision == ba.recall);
        CHECK(ab.recall == ba.precision);
        CHECK(ab.f1 == ba.f1);
    }
}

TEST_CASE("tokenizer lowercases and splits punctuation") {
    const auto tokens = word_tokens("Hello, World! it's 3 a.m.");
    const std::vector<std::string> expected = {"hello", "world", "it", "s", "3", "a", "m"};
    CHECK(tokens == expected);
}

TEST_CASE("nearest_seed_similarity: identical instruction hits f1=1 in the top bin") {
    const std::vector<Instruction> seeds = {instruction_of("seed-1", "Write a poem."),
                                            instruction_of("seed-2", "Draw a map.")};
    const std::vector<Instruction> generated = {instruction_of("gen-1", "Write a poem.")};
    const auto report = nearest_seed_similarity(generated, seeds);
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].f1 == doctest::Approx(1.0));
    CHECK(report.entries[0].nearest_seed_id == "seed-1");
    CHECK(report.histogram.counts.back() == 1);
    CHECK(report.histogram.total() == 1);
}

TEST_CASE("nearest_seed_similarity: random corpus concentrates in low bins") {
    SplitMix64 rng(5120);
    std::vector<Instruction> seeds;
    for (int i = 0; i < 10; ++i) {
        std::string text;
        for (int t = 0; t < 8; ++t)
            text += (t ? " " : "") + ("v" + std::to_string(rng.next_below(1000)));
        seeds.push_back(instruction_of("seed-" + std::to_string(i), text));
    }
    std::vector<Instruction> generated;
    for (int i = 0; i < 100; ++i) {
        std::string text;
        for (int t = 0; t < 8; ++t)
            text += (t ? " " : "") + ("v" + std::to_string(rng.next_below(1000)));
        generated.push_back(instruction_of("gen-" + std::to_string(i), text));
    }
    const auto report = nearest_seed_similarity(generated, seeds);
    CHECK(report.histogram.total() == 100);
    std::size_t mode_bin = 0;
    for (std::size_t b = 1; b < report.histogram.counts.size(); ++b)
        if (report.histogram.counts[b] > report.histogram.counts[mode_bin]) mode_bin = b;
    CHECK(mode_bin < 4);  // mode below f1=0.4
}

TEST_CASE("nearest_seed_similarity is monotone in the seed set") {
    SplitMix64 rng(99);
    std::vector<Instruction> seeds;
    for (int i = 0; i < 5; ++i)
        seeds.push_back(instruction_of("seed-" + std::to_string(i), random_sentence(rng, 12, 30)));
    std::vector<Instruction> generated;
    for (int i = 0; i < 40; ++i)
        generated.push_back(
            instruction_of("gen-" + std::to_string(i), random_sentence(rng, 12, 30)));
    // non-empty texts required by the oracle comparison below
    for (auto& g : generated)
        if (g.text.empty()) g.text = "w0";
    const auto before = nearest_seed_similarity(generated, seeds);
    seeds.push_back(instruction_of("seed-extra", random_sentence(rng, 12, 30)));
    const auto after = nearest_seed_similarity(generated, seeds);
    for (std::size_t i = 0; i < generated.size(); ++i)
        CHECK(after.entries[i].f1 >= before.entries[i].f1);
}

TEST_CASE("length_histogram bins whitespace token counts") {
    const auto h = length_histogram({"a b c"}, 10);
    REQUIRE(h.counts.size() == 1);
    CHECK(h.counts[0] == 1);
    CHECK(h.total() == 1);

    const auto empty = length_histogram({}, 10);
    CHECK(empty.total() == 0);
    CHECK(empty.counts.empty());

    std::vector<std::string> items = {"one", "one two", "a b c d e f g h i j k l"};
    const auto multi = length_histogram(items, 10);
    CHECK(multi.total() == 3);
    CHECK(multi.counts[0] == 2);   // lengths 1 and 2
    CHECK(multi.counts[1] == 1);   // length 12
}

TEST_CASE("length_histogram is order-independent") {
    std::vector<std::string> items = {"a", "a b c", "a b c d e", "x y"};
    const auto forward = length_histogram(items, 2);
    std::reverse(items.begin(), items.end());
    const auto backward = length_histogram(items, 2);
    CHECK(forward.counts == backward.counts);
}

TEST_CASE("extract_verb_noun heuristic") {
    auto vn = extract_verb_noun("Write a poem about the image");
    REQUIRE(vn.has_value());
    CHECK(vn->first == "write");
    CHECK(vn->second == "poem");

    vn = extract_verb_noun("Describe the image in detail");
    REQUIRE(vn.has_value());
    CHECK(vn->first == "describe");
    CHECK(vn->second == "image");

    CHECK(!extract_verb_noun("What is shown here?").has_value());
    CHECK(!extract_verb_noun("").has_value());

    // adjectives are skipped on the way to the noun
    vn = extract_verb_noun("Write a beautiful short poem");
    REQUIRE(vn.has_value());
    CHECK(vn->second == "poem");

    // verb with no usable noun
    CHECK(!extract_verb_noun("Write a").has_value());
}

TEST_CASE("diversity_report aggregates all sections") {
    std::vector<Instruction> seeds = {instruction_of("seed-1", "Write a poem about the image.")};
    std::vector<Instruction> generated = {
        instruction_of("gen-1", "Compose a tune about the scene."),
        instruction_of("gen-2", "Write a poem about the image.")};
    std::vector<Instruction> final_set = {
        instruction_of("con-1", "Write a story about the harbor."),
        instruction_of("con-2", "What happens here?")};
    const auto report = diversity_report(generated, seeds, final_set, {"short answer.", "a b."},
                                         10);
    CHECK(report.generated_count == 2);
    CHECK(report.seed_count == 1);
    CHECK(report.nearest_seed.histogram.total() == 2);
    CHECK(report.answer_lengths.total() == 2);
    CHECK(report.verb_noun_total == 2);
    CHECK(report.verb_noun_extracted == 1);
    REQUIRE(report.verb_noun_counts.size() == 1);
    CHECK(report.verb_noun_counts[0].first == "write story");
    const Json j = report.to_json();
    CHECK(j.contains("nearest_seed_histogram"));
    CHECK(j.contains("verb_noun_method"));
}
