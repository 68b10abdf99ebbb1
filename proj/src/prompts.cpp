#include "vistruct/prompts.hpp"

#include <fstream>
#include <sstream>

#include "vistruct/error.hpp"

namespace vistruct {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCaption = R"([task:caption]
Describe the image in detail. Cover the objects, actions, and context you can
see. If an original caption is given, fold its information into the
description.
Original caption: {raw_caption}
)";

constexpr const char* kInstruction = R"([task:new-instruction]
You design tasks for images. Come up with one new instruction that a person
could ask about the image below. Be creative: the instruction can ask for
writing, analysis, summaries, or anything else the image supports. Reply with
the instruction only, on a single line.
Image description:
{description}
Example instructions:
{examples}
New instruction:
)";

constexpr const char* kConsolidate = R"([task:consolidate]
The instructions below ask for similar things. Merge them into a single,
general instruction that keeps the shared task but drops details that only
apply to one image. Reply with the merged instruction only.
Instructions to merge:
{members}
Merged instruction:
)";

constexpr const char* kAnswer = R"([task:answer]
Answer the instruction as if you could see the image. Ground every statement
in the image description; do not invent details that contradict it.
Instruction: {instruction}
Description: {description}
{exemplars}
Answer:
)";

constexpr const char* kMatchCheck = R"([task:match-check]
Description: {description}
Instruction: {instruction}
Answer yes or no: does the instruction make sense for an image with this
description?
)";

constexpr const char* kJudge = R"([task:judge]
Two assistants answered the same instruction about the same image. Decide
which answer follows the instruction better, using the reference answer as a
guide.
Instruction: {instruction}
Reference answer: {reference}
Answer A: {answer_a}
Answer B: {answer_b}
Reply with exactly one token: A, B, or tie.
)";

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read prompt file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write prompt file: " + path.string());
    out << text;
}

void maybe_load(const fs::path& dir, const char* name, std::string& into) {
    const fs::path p = dir / name;
    if (fs::exists(p)) into = read_file(p);
}

}  // namespace

PromptSet PromptSet::defaults() {
    PromptSet p;
    p.caption = kCaption;
    p.instruction = kInstruction;
    p.consolidate = kConsolidate;
    p.answer = kAnswer;
    p.match_check = kMatchCheck;
    p.judge = kJudge;
    return p;
}

PromptSet PromptSet::load_dir(const fs::path& dir) {
    PromptSet p = defaults();
    if (!fs::is_directory(dir)) throw Error("prompt dir not found: " + dir.string());
    maybe_load(dir, "caption.txt", p.caption);
    maybe_load(dir, "instruction.txt", p.instruction);
    maybe_load(dir, "consolidate.txt", p.consolidate);
    maybe_load(dir, "answer.txt", p.answer);
    maybe_load(dir, "match_check.txt", p.match_check);
    maybe_load(dir, "judge.txt", p.judge);
    return p;
}

void PromptSet::write_dir(const fs::path& dir) const {
    fs::create_directories(dir);
    write_file(dir / "caption.txt", caption);
    write_file(dir / "instruction.txt", instruction);
    write_file(dir / "consolidate.txt", consolidate);
    write_file(dir / "answer.txt", answer);
    write_file(dir / "match_check.txt", match_check);
    write_file(dir / "judge.txt", judge);
}

std::string render_prompt(const std::string& template_text,
                          const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(template_text.size());
    std::size_t pos = 0;
    while (pos < template_text.size()) {
        const std::size_t open = template_text.find('{', pos);
        if (open == std::string::npos) {
            out += template_text.substr(pos);
            break;
        }
        const std::size_t close = template_text.find('}', open);
        if (close == std::string::npos) {
            out += template_text.substr(pos);
            break;
        }
        out += template_text.substr(pos, open - pos);
        const std::string key = template_text.substr(open + 1, close - open - 1);
        const auto it = values.find(key);
        if (it != values.end()) {
            out += it->second;
        } else {
            out += template_text.substr(open, close - open + 1);
        }
        pos = close + 1;
    }
    return out;
}

}  // namespace vistruct
