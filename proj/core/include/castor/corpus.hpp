#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "castor/errors.hpp"

namespace castor {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct SampleTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadRatios : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewRecords : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Calendar date (UTC).  Parsed from / formatted as ISO-8601 "YYYY-MM-DD".
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    static Date parse(std::string_view iso);  // throws std::invalid_argument
    std::string to_string() const;
};

// One question/answer pair from a Stack Exchange dump.
struct PostRecord {
    std::int64_t question_id = 0;
    std::string title;
    std::string body_html;
    std::string answer_html;
    std::vector<std::string> tags;  // 1..5 entries
    int question_score = 0;
    int answer_score = 0;
    int answerer_reputation = 0;
    bool is_accepted = false;
    Date creation_date;

    bool operator==(const PostRecord&) const = default;
};

struct FilterCriteria {
    int min_reputation = 1000;
    int min_upvotes = 5;
    bool require_accepted = true;
    // Default collection window; both bounds are operator-configurable.
    Date date_from{2019, 11, 1};
    Date date_to{2021, 11, 30};

    void validate() const;  // throws std::invalid_argument
};

enum class PromptVariant { Standard, ChainOfThought, Persona };

std::string_view to_string(PromptVariant v);                 // "standard" | "cot" | "persona"
PromptVariant prompt_variant_from_string(std::string_view);  // throws std::invalid_argument

// Anchor/positive/negative training example: the reference answer anchors,
// the machine answer is the positive, the human answer is the negative.
struct TripletRecord {
    std::int64_t question_id = 0;
    std::string question_title;
    std::string question_body;
    std::string human_answer;      // negative
    std::string reference_answer;  // anchor
    std::string ai_answer;         // positive
    PromptVariant prompt_variant = PromptVariant::Standard;
    int max_length_tokens = 0;  // 20..1000
    std::vector<std::string> tags;

    bool operator==(const TripletRecord&) const = default;
};

struct DatasetSplit {
    std::vector<TripletRecord> train;
    std::vector<TripletRecord> validation;
    std::vector<TripletRecord> test;
    std::uint64_t seed = 0;
};

struct SplitRatios {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Strip markup and normalize whitespace.  Tag spans are removed greedily from
// '<' to the next '>' (or end of input); the five basic entities are decoded;
// control characters other than newline are dropped; whitespace runs collapse
// to a single space, single newline, or blank line; the result is trimmed.
// The whole pipeline is iterated to a fixed point, so the function is
// idempotent even when decoding exposes new markup.
std::string clean_text(std::string_view html);

// Keep the records that pass every quality gate (strict > on reputation and
// both scores, acceptance when required, creation date within the closed
// window).  Input order is preserved.
std::vector<PostRecord> filter_posts(const std::vector<PostRecord>& posts,
                                     const FilterCriteria& criteria);

// Tag-balanced sample of exactly n posts.  Each post is bucketed by its
// first tag; each bucket gets floor(n/T) picks, the first (n mod T) buckets
// in lexicographic order get one more, short buckets contribute everything
// they have, and the leftover demand is drawn from the unselected remainder.
// Deterministic for a fixed (posts, n, seed); output keeps input order.
std::vector<PostRecord> balanced_sample(const std::vector<PostRecord>& posts,
                                        std::size_t n, std::uint64_t seed);

// Seeded shuffle followed by contiguous slicing.  Validation and test sizes
// are floor(ratio * N); the remainder goes to train.
DatasetSplit split_dataset(const std::vector<TripletRecord>& triplets,
                           const SplitRatios& ratios, std::uint64_t seed);

// Line-oriented record I/O.  One self-describing record per line, UTF-8.
std::vector<PostRecord> read_post_dump(const std::string& path);
void write_post_dump(const std::vector<PostRecord>& posts, const std::string& path);

std::vector<TripletRecord> read_triplets(const std::string& path);
void write_triplets(const std::vector<TripletRecord>& records, const std::string& path);

}  // namespace castor
