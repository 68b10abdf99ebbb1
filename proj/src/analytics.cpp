#include "vistruct/analytics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_set>

#include "vistruct/error.hpp"
#include "vistruct/text.hpp"

namespace vistruct {

namespace {

// classic O(mn) LCS length with a rolling row
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

const std::unordered_set<std::string>& verb_lexicon() {
    static const std::unordered_set<std::string> verbs = {
        "write",     "describe",  "compose",   "create",   "draft",    "design",
        "explain",   "list",      "analyze",   "summarize", "imagine", "suggest",
        "generate",  "tell",      "give",      "identify", "craft",    "invent",
        "propose",   "outline",   "discuss",   "caption",  "narrate",  "brainstorm",
        "recommend", "evaluate",  "compare",   "translate", "rewrite", "transform",
        "develop",   "provide",   "share",     "make",     "produce",  "plan",
        "highlight", "pitch",     "review",    "critique", "assess",   "devise",
        "formulate", "construct", "name",      "state",    "offer",    "present",
        "illustrate", "convert",  "adapt",     "predict",  "estimate", "classify",
        "rank",      "rate",      "detail",    "turn",     "judge",    "draw"};
    return verbs;
}

const std::unordered_set<std::string>& noun_skip_list() {
    // determiners, pronouns, prepositions, and frequent bare adjectives
    static const std::unordered_set<std::string> skip = {
        "a",     "an",     "the",   "this",  "that",   "these", "those", "its",
        "his",   "her",    "their", "your",  "my",     "our",   "some",  "any",
        "each",  "every",  "all",   "both",  "few",    "more",  "most",  "other",
        "another", "such", "of",    "for",   "in",     "on",    "at",    "to",
        "with",  "about",  "into",  "from",  "by",     "as",    "and",   "or",
        "short", "brief",  "long",  "new",   "old",    "small", "large", "big",
        "little", "simple", "quick", "concise", "detailed", "creative", "engaging",
        "fun",   "unique", "original", "compelling", "catchy", "vivid", "descriptive",
        "imaginative", "persuasive", "professional", "casual", "formal", "humorous",
        "witty", "poetic", "given", "own"};
    return skip;
}

bool adjective_suffixed(const std::string& token) {
    static const std::vector<std::string> suffixes = {"ful", "ous", "ive", "able", "ible", "ish"};
    for (const auto& suf : suffixes) {
        if (token.size() > suf.size() + 2 &&
            token.compare(token.size() - suf.size(), suf.size(), suf) == 0)
            return true;
    }
    return false;
}

}  // namespace

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
    const auto cand = word_tokens(candidate);
    const auto ref = word_tokens(reference);
    RougeScore score;
    if (cand.empty() || ref.empty()) return score;
    const std::size_t lcs = lcs_length(cand, ref);
    if (lcs == 0) return score;
    score.precision = static_cast<double>(lcs) / static_cast<double>(cand.size());
    score.recall = static_cast<double>(lcs) / static_cast<double>(ref.size());
    score.f1 = 2.0 * score.precision * score.recall / (score.precision + score.recall);
    return score;
}

int Histogram::bin_of(double value) const {
    if (counts.empty()) return 0;
    const double offset = (value - lo) / bin_width;
    int bin = static_cast<int>(offset);
    if (offset < 0.0) bin = 0;
    if (bin >= static_cast<int>(counts.size())) bin = static_cast<int>(counts.size()) - 1;
    return bin;
}

void Histogram::add(double value) {
    if (counts.empty()) throw Error("histogram has no bins");
    counts[static_cast<std::size_t>(bin_of(value))]++;
}

std::size_t Histogram::total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

Json Histogram::to_json() const {
    Json j;
    j["lo"] = lo;
    j["bin_width"] = bin_width;
    j["counts"] = counts;
    j["total"] = total();
    return j;
}

void Histogram::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write histogram: " + path.string());
    out << "bin_start,bin_end,count\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double start = lo + bin_width * static_cast<double>(i);
        out << start << "," << start + bin_width << "," << counts[i] << "\n";
    }
}

NearestSeedReport nearest_seed_similarity(const std::vector<Instruction>& generated,
                                          const std::vector<Instruction>& seeds) {
    if (generated.empty() || seeds.empty())
        throw ValidationError("nearest_seed_similarity: both lists must be non-empty");
    NearestSeedReport report;
    report.histogram.lo = 0.0;
    report.histogram.bin_width = 0.1;
    report.histogram.counts.assign(10, 0);
    for (const auto& g : generated) {
        NearestSeed entry;
        entry.instruction_id = g.id;
        entry.f1 = -1.0;
        for (const auto& s : seeds) {
            const double f1 = rouge_l(g.text, s.text).f1;
            if (f1 > entry.f1 || (f1 == entry.f1 && s.id < entry.nearest_seed_id)) {
                entry.f1 = f1;
                entry.nearest_seed_id = s.id;
            }
        }
        report.histogram.add(entry.f1);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

Histogram length_histogram(const std::vector<std::string>& items, int bin_width) {
    if (bin_width < 1) throw ValidationError("length_histogram: bin_width must be >= 1");
    std::size_t max_len = 0;
    std::vector<std::size_t> lengths;
    lengths.reserve(items.size());
    for (const auto& item : items) {
        const std::size_t len = whitespace_tokens(item).size();
        lengths.push_back(len);
        max_len = std::max(max_len, len);
    }
    Histogram h;
    h.lo = 0.0;
    h.bin_width = static_cast<double>(bin_width);
    const std::size_t bins = items.empty() ? 0 : max_len / static_cast<std::size_t>(bin_width) + 1;
    h.counts.assign(bins, 0);
    for (const auto len : lengths) h.add(static_cast<double>(len));
    return h;
}

std::optional<std::pair<std::string, std::string>> extract_verb_noun(const std::string& text) {
    const auto tokens = word_tokens(text);
    if (tokens.empty()) return std::nullopt;
    if (!verb_lexicon().count(tokens.front())) return std::nullopt;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (noun_skip_list().count(t) || adjective_suffixed(t)) continue;
        return std::make_pair(tokens.front(), t);
    }
    return std::nullopt;
}

Json DiversityReport::to_json() const {
    Json j;
    j["generated_count"] = generated_count;
    j["seed_count"] = seed_count;
    Json nearest = Json::array();
    for (const auto& e : nearest_seed.entries) {
        Json entry;
        entry["instruction_id"] = e.instruction_id;
        entry["nearest_seed_id"] = e.nearest_seed_id;
        entry["f1"] = e.f1;
        nearest.push_back(std::move(entry));
    }
    j["nearest_seed"] = std::move(nearest);
    j["nearest_seed_histogram"] = nearest_seed.histogram.to_json();
    j["instruction_length_histogram"] = instruction_lengths.to_json();
    j["answer_length_histogram"] = answer_lengths.to_json();
    Json vn = Json::array();
    for (const auto& [pair, count] : verb_noun_counts) {
        Json entry;
        entry["verb_noun"] = pair;
        entry["count"] = count;
        vn.push_back(std::move(entry));
    }
    j["verb_noun_counts"] = std::move(vn);
    j["verb_noun_extracted"] = verb_noun_extracted;
    j["verb_noun_total"] = verb_noun_total;
    j["verb_noun_method"] = "lexicon heuristic (first-token verb, first non-modifier noun)";
    return j;
}

DiversityReport diversity_report(const std::vector<Instruction>& generated,
                                 const std::vector<Instruction>& seeds,
                                 const std::vector<Instruction>& final_set,
                                 const std::vector<std::string>& answers, int length_bin_width) {
    DiversityReport report;
    report.generated_count = generated.size();
    report.seed_count = seeds.size();
    if (!generated.empty() && !seeds.empty())
        report.nearest_seed = nearest_seed_similarity(generated, seeds);
    else {
        report.nearest_seed.histogram.counts.assign(10, 0);
    }

    std::vector<std::string> instruction_texts;
    instruction_texts.reserve(generated.size());
    for (const auto& g : generated) instruction_texts.push_back(g.text);
    report.instruction_lengths = length_histogram(instruction_texts, length_bin_width);
    report.answer_lengths = length_histogram(answers, length_bin_width);

    std::map<std::string, std::size_t> vn_counts;
    report.verb_noun_total = final_set.size();
    for (const auto& instr : final_set) {
        if (auto vn = extract_verb_noun(instr.text)) {
            vn_counts[vn->first + " " + vn->second]++;
            report.verb_noun_extracted++;
        }
    }
    report.verb_noun_counts.assign(vn_counts.begin(), vn_counts.end());
    std::sort(report.verb_noun_counts.begin(), report.verb_noun_counts.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    return report;
}

}  // namespace vistruct
