#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "castor/corpus.hpp"
#include "castor/detector.hpp"

namespace castor {

struct EmptyMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadBoundaries : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LexiconMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Positive class = AiGenerated.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

// A metric whose denominator was zero is std::nullopt, never silently 0.
struct MetricsReport {
    ConfusionMatrix confusion;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    // Length-bucket breakdown: (bucket label, report), in boundary order.
    // Empty unless the report was bucketed.
    std::vector<std::pair<std::string, MetricsReport>> buckets;

    bool operator==(const MetricsReport&) const = default;
};

// Accuracy, precision, recall, F1 from a confusion matrix.
MetricsReport metrics(const ConfusionMatrix& cm);  // EmptyMatrix when total() == 0

// One evaluated (reference, candidate) pair.
struct PairOutcome {
    bool true_ai = false;
    bool predicted_ai = false;
    std::size_t candidate_tokens = 0;
    double similarity = 0.0;
};

ConfusionMatrix confusion_from_outcomes(const std::vector<PairOutcome>& outcomes);

// Partition the outcomes into half-open token-length buckets
// [0,b1), [b1,b2), ..., [bk,inf) and compute metrics per bucket.
std::vector<std::pair<std::string, MetricsReport>> bucket_by_length(
    const std::vector<PairOutcome>& outcomes, const std::vector<std::size_t>& boundaries);

inline const std::vector<std::size_t> kDefaultBucketBoundaries = {50, 100, 200, 300};

// Each test triplet contributes (reference, ai_answer) labeled AI and
// (reference, human_answer) labeled human; the report covers all 2·|test|
// pairs and carries the length-bucket breakdown.
MetricsReport evaluate(const Detector& detector, const std::vector<TripletRecord>& test,
                       double threshold,
                       const std::vector<std::size_t>& boundaries = kDefaultBucketBoundaries);

// ---------------------------------------------------------------------------
// Adversarial attacks
// ---------------------------------------------------------------------------

enum class AttackKind { CharPerturb, SynonymSub };

std::string_view to_string(AttackKind kind);                  // "char-perturb" | "synonym-sub"
AttackKind attack_kind_from_string(std::string_view name);    // throws std::invalid_argument

struct AttackSpec {
    AttackKind kind = AttackKind::CharPerturb;
    std::size_t budget = 3;
    std::uint64_t seed = 0;
    std::string lexicon_path;  // SynonymSub only

    void validate() const;
};

// Word -> candidate synonyms, loaded from "word TAB syn[,syn...]" lines.
using SynonymLexicon = std::unordered_map<std::string, std::vector<std::string>>;
SynonymLexicon load_lexicon(const std::string& path);  // LexiconMissing

// Seeded single-character edits (substitute / swap-adjacent / delete /
// insert) on min(budget, eligible) distinct words of length >= 3.  Word
// count, word order, and all inter-word whitespace are preserved.
std::string attack_char_perturb(const std::string& text, const AttackSpec& spec);

// Leave-one-out saliency (word -> UNK) ranks the lexicon-covered words; the
// top `budget` are greedily replaced by their similarity-minimizing synonym,
// each replacement accepted only if it does not increase similarity to the
// reference.  The result's similarity never exceeds the original's.
std::string attack_synonym_sub(const std::string& text, const AttackSpec& spec,
                               const Detector& detector, const std::string& reference);

// Evaluate clean vs. attacked test sets.  Attacks touch ai_answer texts
// only; human answers are the attacker's disguise target, not their input.
std::pair<MetricsReport, MetricsReport> robustness_eval(const Detector& detector,
                                                        const std::vector<TripletRecord>& test,
                                                        double threshold,
                                                        const AttackSpec& spec);

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

// Machine-readable flat form: one "name<TAB>value" line per metric, with
// "undefined" for metrics whose denominator was zero.
std::string render_flat(const MetricsReport& report, const std::string& prefix = "");

// Structured JSON document (single line) for the same content.
std::string render_json(const MetricsReport& report);

// Side-by-side clean/attacked robustness report.
std::string render_robustness_flat(const MetricsReport& clean, const MetricsReport& attacked);
std::string render_robustness_json(const MetricsReport& clean, const MetricsReport& attacked);

}  // namespace castor
