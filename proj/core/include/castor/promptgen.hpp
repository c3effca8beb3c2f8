#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "castor/corpus.hpp"
#include "castor/random.hpp"

namespace castor {

// Thrown when an index-based assignment receives an index outside [0, total).
struct IndexOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The four prompt templates.  Reference produces the deliberately AI-styled
// anchor answer; the other three are the diversity variants used for the
// generated answers (PromptVariant in corpus.hpp names those three).
enum class PromptKind { Reference, Standard, ChainOfThought, Persona };

std::string to_string(PromptKind kind);
PromptKind prompt_kind_of(PromptVariant variant);

struct PromptRequest {
    std::string question_title;
    std::string question_body;
    PromptKind kind = PromptKind::Standard;
    int max_length_tokens = 1000;
    bool mimic_human_tone = false;

    // Reference prompts always cap at 1000 tokens; the generated-answer
    // variants accept any cap in [20, 1000].
    void validate() const;
};

// Post-generation augmentation: filler-word insertion and removal of phrases
// that give away machine-generated text.
struct AugmentConfig {
    std::vector<std::string> filler_words{"like", "you know", "literally"};
    double filler_probability = 0.15;  // per sentence
    std::vector<std::string> indicative_blocklist{"AI assistant",
                                                  "Let me know if you have any"};
    double tone_probability = 1.0 / 3.0;  // chance a request asks for a human tone
    std::uint64_t seed = 0;

    void validate() const;
};

// Renders the full prompt text for a request: shared question header, the
// per-kind instructions with {max_length} substituted, and an optional
// casual-tone instruction line.
std::string render_prompt(const PromptRequest& req);

// Uniform integer in [20, 1000], the generation-length range.
int sample_max_length(RandomEngine& engine);

// Splits [0, total) into three contiguous segments: Standard, then
// ChainOfThought, then Persona, with boundaries at floor(total/3) and
// floor(2*total/3).
PromptVariant assign_variant(std::size_t index, std::size_t total);

// Removes every blocklist phrase (case-insensitive, at word boundaries),
// re-collapses the surrounding whitespace, then inserts a seeded filler word
// after the first word of each sentence with probability filler_probability.
std::string postprocess_answer(const std::string& text, const AugmentConfig& cfg);

}  // namespace castor
