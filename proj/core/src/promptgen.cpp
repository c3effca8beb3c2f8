#include "castor/promptgen.hpp"

#include <cctype>
#include <sstream>

#include "castor/text_util.hpp"

namespace castor {

std::string to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::Reference: return "reference";
        case PromptKind::Standard: return "standard";
        case PromptKind::ChainOfThought: return "cot";
        case PromptKind::Persona: return "persona";
    }
    throw std::invalid_argument("unknown prompt kind");
}

PromptKind prompt_kind_of(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::Standard: return PromptKind::Standard;
        case PromptVariant::ChainOfThought: return PromptKind::ChainOfThought;
        case PromptVariant::Persona: return PromptKind::Persona;
    }
    throw std::invalid_argument("unknown prompt variant");
}

void PromptRequest::validate() const {
    if (kind == PromptKind::Reference) {
        if (max_length_tokens != 1000) {
            throw std::invalid_argument("reference prompts always use a 1000-token cap");
        }
    } else if (max_length_tokens < 20 || max_length_tokens > 1000) {
        throw std::invalid_argument("max_length_tokens must be in [20, 1000]");
    }
}

void AugmentConfig::validate() const {
    if (filler_probability < 0.0 || filler_probability > 1.0) {
        throw std::invalid_argument("filler_probability must be in [0, 1]");
    }
    if (tone_probability < 0.0 || tone_probability > 1.0) {
        throw std::invalid_argument("tone_probability must be in [0, 1]");
    }
    if (filler_words.empty()) throw std::invalid_argument("filler_words must be non-empty");
    if (indicative_blocklist.empty()) {
        throw std::invalid_argument("indicative_blocklist must be non-empty");
    }
    for (const std::string& w : filler_words) {
        if (w.empty()) throw std::invalid_argument("filler words must be non-empty");
    }
    for (const std::string& p : indicative_blocklist) {
        if (p.empty()) throw std::invalid_argument("blocklist phrases must be non-empty");
    }
}

std::string render_prompt(const PromptRequest& req) {
    req.validate();

    std::ostringstream out;
    out << "Here is a question for you to answer:\n\n"
        << "Question Title: " << req.question_title << "\n\n"
        << "Question Body: " << req.question_body << "\n\n";

    switch (req.kind) {
        case PromptKind::Reference:
            out << "Please provide an answer to the above question. Your answer should:\n"
                << "- Cover all aspects of the question.\n"
                << "- Be written in a formal, structured language.\n"
                << "- Be thorough and detailed, even if the response becomes verbose.\n"
                << "- Attempt to address the question accurately, but some factual, "
                   "conceptual, and terminological errors are allowed.\n"
                << "- Inconsistencies are allowed in some complex questions.\n"
                << "- Provide additional context, examples, or analogies to enhance "
                   "understanding.\n"
                << "- The answer should not exceed 1000 tokens in length.";
            break;
        case PromptKind::Standard:
            out << "Please generate your answer within the max length of "
                << req.max_length_tokens << " tokens.";
            break;
        case PromptKind::ChainOfThought:
            out << "Your answer should include a clear restatement of the question, "
                   "identification of key concepts, a logical step-by-step outline of "
                   "the process or reasoning, detailed explanations for each step, "
                   "relevant examples or analogies, and a comprehensive summary of the "
                   "final answer. Please generate your answer within the max length of "
                << req.max_length_tokens << " tokens.";
            break;
        case PromptKind::Persona:
            out << "As an experienced and professional developer who is well-versed in "
                   "this area and has a strong track record of providing high-quality "
                   "answers on Stack Overflow, please provide a comprehensive and "
                   "insightful answer to the above question. Your response should "
                   "demonstrate deep knowledge and expertise. Please generate your "
                   "answer within the max length of "
                << req.max_length_tokens << " tokens.";
            break;
    }

    if (req.mimic_human_tone) {
        out << "\n\nWrite in a casual, human tone.";
    }
    return out.str();
}

int sample_max_length(RandomEngine& engine) { return engine.uniform_int(20, 1000); }

PromptVariant assign_variant(std::size_t index, std::size_t total) {
    if (total == 0 || index >= total) {
        throw IndexOutOfRange("index " + std::to_string(index) + " outside [0, " +
                              std::to_string(total) + ")");
    }
    const std::size_t first_boundary = total / 3;
    const std::size_t second_boundary = (2 * total) / 3;
    if (index < first_boundary) return PromptVariant::Standard;
    if (index < second_boundary) return PromptVariant::ChainOfThought;
    return PromptVariant::Persona;
}

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0; }

bool iequal_at(const std::string& text, std::size_t pos, const std::string& phrase) {
    if (pos + phrase.size() > text.size()) return false;
    for (std::size_t i = 0; i < phrase.size(); ++i) {
        unsigned char a = static_cast<unsigned char>(text[pos + i]);
        unsigned char b = static_cast<unsigned char>(phrase[i]);
        if (std::tolower(a) != std::tolower(b)) return false;
    }
    return true;
}

// Finds the next case-insensitive occurrence of `phrase` whose neighbours are
// not alphanumeric, so a phrase never bites into a larger word on either side
// ("AI assistant" does not match within "AI assistants").
std::size_t find_phrase(const std::string& text, const std::string& phrase,
                        std::size_t from) {
    for (std::size_t pos = from; pos + phrase.size() <= text.size(); ++pos) {
        if (!iequal_at(text, pos, phrase)) continue;
        if (pos > 0 && is_word_byte(static_cast<unsigned char>(text[pos - 1]))) continue;
        std::size_t end = pos + phrase.size();
        if (end < text.size() && is_word_byte(static_cast<unsigned char>(text[end]))) {
            continue;
        }
        return pos;
    }
    return std::string::npos;
}

bool is_closing_punct(char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
           c == ')' || c == ']' || c == '}';
}

bool is_opening_punct(char c) { return c == '(' || c == '[' || c == '{'; }

// Removes text[pos, pos+len) and re-collapses the whitespace run spanning the
// cut so "As an AI assistant, I" becomes "As an, I" rather than "As an , I".
std::string splice_out(const std::string& text, std::size_t pos, std::size_t len) {
    std::string joined = text.substr(0, pos) + text.substr(pos + len);
    std::size_t lo = pos;
    while (lo > 0 && is_space_char(joined[lo - 1])) --lo;
    std::size_t hi = pos;
    while (hi < joined.size() && is_space_char(joined[hi])) ++hi;
    if (lo == hi) return joined;

    std::string replacement;
    if (lo == 0 || hi == joined.size()) {
        replacement = "";  // cut touched the start or end: strip
    } else if (is_closing_punct(joined[hi]) || is_opening_punct(joined[lo - 1])) {
        replacement = "";  // no space next to punctuation at the junction
    } else {
        bool had_newline = false;
        for (std::size_t i = lo; i < hi; ++i) {
            if (joined[i] == '\n') had_newline = true;
        }
        replacement = had_newline ? "\n" : " ";
    }
    return joined.substr(0, lo) + replacement + joined.substr(hi);
}

// One full removal pass over all blocklist phrases.
std::string remove_blocklist_pass(std::string text,
                                  const std::vector<std::string>& blocklist,
                                  bool& changed) {
    for (const std::string& phrase : blocklist) {
        std::size_t pos = 0;
        while ((pos = find_phrase(text, phrase, pos)) != std::string::npos) {
            text = splice_out(text, pos, phrase.size());
            changed = true;
        }
    }
    return text;
}

struct Sentence {
    std::size_t begin;  // first non-whitespace character
    std::size_t end;    // one past the terminating punctuation run (or text end)
};

// A sentence ends at a run of . ! ? followed by whitespace (or end of text).
std::vector<Sentence> find_sentences(const std::string& text) {
    std::vector<Sentence> sentences;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space_char(text[i])) ++i;
        if (i >= n) break;
        std::size_t begin = i;
        std::size_t end = n;
        while (i < n) {
            if (text[i] == '.' || text[i] == '!' || text[i] == '?') {
                std::size_t j = i;
                while (j < n && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
                if (j >= n || is_space_char(text[j])) {
                    end = j;
                    i = j;
                    break;
                }
                i = j;  // punctuation glued to more text (e.g. "3.14"): not a boundary
            } else {
                ++i;
            }
        }
        sentences.push_back({begin, end});
    }
    return sentences;
}

}  // namespace

std::string postprocess_answer(const std::string& text, const AugmentConfig& cfg) {
    cfg.validate();

    // Blocklist removal, repeated until no phrase remains: a removal could in
    // principle butt two fragments together into a new occurrence.
    std::string cleaned = text;
    for (int pass = 0; pass < 100; ++pass) {
        bool changed = false;
        cleaned = remove_blocklist_pass(std::move(cleaned), cfg.indicative_blocklist,
                                        changed);
        if (!changed) break;
    }

    // Seeded filler insertion: per sentence, with probability
    // filler_probability, one filler goes after the first word, comma-attached.
    RandomEngine engine(cfg.seed);
    std::vector<std::pair<std::size_t, std::string>> insertions;  // (offset, text)
    for (const Sentence& s : find_sentences(cleaned)) {
        double u = engine.uniform_real();
        if (u >= cfg.filler_probability) continue;

        std::size_t word_end = s.begin;
        while (word_end < s.end && !is_space_char(cleaned[word_end])) ++word_end;
        if (word_end >= s.end) continue;  // one-word sentence: nowhere to insert

        std::size_t pick = engine.bounded(cfg.filler_words.size());
        insertions.emplace_back(word_end, " " + cfg.filler_words[pick] + ",");
    }
    if (insertions.empty()) return cleaned;

    std::string out;
    out.reserve(cleaned.size() + insertions.size() * 12);
    std::size_t cursor = 0;
    for (const auto& [offset, piece] : insertions) {
        out.append(cleaned, cursor, offset - cursor);
        out.append(piece);
        cursor = offset;
    }
    out.append(cleaned, cursor, cleaned.size() - cursor);
    return out;
}

}  // namespace castor
