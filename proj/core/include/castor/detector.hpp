#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "castor/siamese.hpp"
#include "castor/tokenizer.hpp"

namespace castor {

struct EmptyText : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroEmbedding : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DetectLabel { AiGenerated, Human };

std::string_view to_string(DetectLabel label);  // "ai" | "human"

struct Verdict {
    double similarity = 0.0;           // cos(f(reference), f(candidate))
    DetectLabel label = DetectLabel::Human;  // AiGenerated iff similarity >= threshold
    double threshold_used = 0.5;
    std::size_t candidate_token_length = 0;  // tokenizer word count of the cleaned candidate
};

// One line of a batch input file.
struct DetectPair {
    std::string reference_answer;
    std::string candidate_answer;
    std::optional<bool> true_is_ai;  // from the optional "true_label" field
};

// Per-item result of detect_batch: either a verdict or an error message;
// one failing item never poisons its neighbours.
struct BatchItem {
    std::optional<Verdict> verdict;
    std::string error;
};

// Inference wrapper around a trained checkpoint and its vocabulary.
// Stateless after construction; all methods are const and deterministic.
class Detector {
public:
    Detector(ModelCheckpoint ckpt, Vocab vocab);

    // Clean both texts, embed them through the shared encoder, and compare.
    Verdict detect(const std::string& reference, const std::string& candidate,
                   double threshold) const;

    // Elementwise detect over the pairs; the reference embedding is computed
    // once per distinct cleaned reference text.
    std::vector<BatchItem> detect_batch(
        const std::vector<std::pair<std::string, std::string>>& pairs, double threshold) const;

    // Embedding of a raw text (cleaned internally).  Throws EmptyText /
    // ZeroEmbedding.
    Tensor<float> embed(const std::string& text) const;

    // Cosine similarity between a precomputed reference embedding and a
    // candidate token sequence.  Used by the saliency-based attack, which
    // edits sequences directly.
    double similarity_to(const Tensor<float>& reference_embedding, const TokenSeq& seq) const;

    TokenSeq tokenize(const std::string& cleaned_text) const;

    const ModelCheckpoint& checkpoint() const { return ckpt_; }
    const Vocab& vocab() const { return vocab_; }

private:
    ModelCheckpoint ckpt_;
    Vocab vocab_;
};

// Batch-file I/O (one record per line: reference_answer, candidate_answer,
// optional true_label "ai"|"human").
std::vector<DetectPair> read_detect_pairs(const std::string& path);

}  // namespace castor
