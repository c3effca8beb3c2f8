#include "castor/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "castor/random.hpp"
#include "castor/text_util.hpp"
#include "json.hpp"

namespace castor {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Date
// ---------------------------------------------------------------------------

namespace {

int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                  31, 31, 30, 31, 30, 31};
    bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && leap) return 29;
    return kDays[month - 1];
}

int parse_int_field(std::string_view text, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument(std::string("invalid ") + what + " in date");
    }
    return value;
}

}  // namespace

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw std::invalid_argument("date must be YYYY-MM-DD, got '" + std::string(iso) + "'");
    }
    Date d;
    d.year = parse_int_field(iso.substr(0, 4), "year");
    d.month = parse_int_field(iso.substr(5, 2), "month");
    d.day = parse_int_field(iso.substr(8, 2), "day");
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw std::invalid_argument("date out of range: '" + std::string(iso) + "'");
    }
    return d;
}

std::string Date::to_string() const {
    char buf[11];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

void FilterCriteria::validate() const {
    if (min_reputation < 0) throw std::invalid_argument("min_reputation must be >= 0");
    if (min_upvotes < 0) throw std::invalid_argument("min_upvotes must be >= 0");
    if (date_to < date_from) throw std::invalid_argument("date_from must not exceed date_to");
}

std::string_view to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::Standard: return "standard";
        case PromptVariant::ChainOfThought: return "cot";
        case PromptVariant::Persona: return "persona";
    }
    throw std::invalid_argument("unhandled prompt variant");
}

PromptVariant prompt_variant_from_string(std::string_view s) {
    if (s == "standard") return PromptVariant::Standard;
    if (s == "cot") return PromptVariant::ChainOfThought;
    if (s == "persona") return PromptVariant::Persona;
    throw std::invalid_argument("unknown prompt variant '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// clean_text
// ---------------------------------------------------------------------------

namespace {

// Drop every <...> span; an unterminated '<' swallows the rest of the input.
std::string strip_tags(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '<') {
            std::size_t close = text.find('>', i + 1);
            if (close == std::string_view::npos) break;
            i = close + 1;
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

std::string decode_entities(std::string_view text) {
    static constexpr std::pair<std::string_view, char> kEntities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&#39;", '\''}};
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '&') {
            bool matched = false;
            for (const auto& [name, ch] : kEntities) {
                if (text.substr(i, name.size()) == name) {
                    out.push_back(ch);
                    i += name.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(text[i]);
        ++i;
    }
    return out;
}

std::string drop_control_chars(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (c == '\n' || c == '\t' || (u >= 0x20 && u != 0x7f)) out.push_back(c);
    }
    return out;
}

std::string clean_pass(std::string_view text) {
    std::string no_tags = strip_tags(text);
    std::string decoded = decode_entities(no_tags);
    std::string printable = drop_control_chars(decoded);
    std::string collapsed = collapse_whitespace(printable);
    return std::string(strip(collapsed));
}

}  // namespace

std::string clean_text(std::string_view html) {
    // Decoding can expose new tags or entities ("&amp;lt;", "&am<b>p;"), so
    // repeat the whole pass until the text stops changing.  Every pass either
    // shortens the text or normalizes a character in place, so this
    // terminates quickly; the cap is a belt-and-braces guard.
    std::string current(html);
    for (int round = 0; round < 100; ++round) {
        std::string next = clean_pass(current);
        if (next == current) break;
        current = std::move(next);
    }
    return current;
}

// ---------------------------------------------------------------------------
// Filtering and sampling
// ---------------------------------------------------------------------------

std::vector<PostRecord> filter_posts(const std::vector<PostRecord>& posts,
                                     const FilterCriteria& criteria) {
    std::vector<PostRecord> kept;
    for (const PostRecord& post : posts) {
        if (post.answerer_reputation <= criteria.min_reputation) continue;
        if (post.question_score <= criteria.min_upvotes) continue;
        if (post.answer_score <= criteria.min_upvotes) continue;
        if (criteria.require_accepted && !post.is_accepted) continue;
        if (post.creation_date < criteria.date_from) continue;
        if (criteria.date_to < post.creation_date) continue;
        kept.push_back(post);
    }
    return kept;
}

std::vector<PostRecord> balanced_sample(const std::vector<PostRecord>& posts,
                                        std::size_t n, std::uint64_t seed) {
    if (n > posts.size()) {
        throw SampleTooLarge("requested " + std::to_string(n) + " posts but only " +
                             std::to_string(posts.size()) + " are available");
    }
    if (n == 0) return {};

    // Bucket by first tag; std::map keeps the buckets in lexicographic order,
    // which fixes both the quota bonus assignment and the draw order.
    std::map<std::string, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        buckets[posts[i].tags.empty() ? std::string() : posts[i].tags.front()].push_back(i);
    }

    const std::size_t num_tags = buckets.size();
    const std::size_t base = n / num_tags;
    std::size_t bonus = n % num_tags;

    RandomEngine engine(seed);
    std::vector<bool> selected(posts.size(), false);
    std::size_t total = 0;

    for (auto& [tag, members] : buckets) {
        std::size_t quota = base + (bonus > 0 ? 1 : 0);
        if (bonus > 0) --bonus;
        std::size_t take = std::min(quota, members.size());
        for (std::size_t pick : engine.sample_indices(members.size(), take)) {
            selected[members[pick]] = true;
        }
        total += take;
    }

    // Short buckets leave a deficit; fill it from the unselected remainder.
    if (total < n) {
        std::vector<std::size_t> remainder;
        for (std::size_t i = 0; i < posts.size(); ++i) {
            if (!selected[i]) remainder.push_back(i);
        }
        for (std::size_t pick : engine.sample_indices(remainder.size(), n - total)) {
            selected[remainder[pick]] = true;
        }
    }

    std::vector<PostRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (selected[i]) out.push_back(posts[i]);
    }
    return out;
}

DatasetSplit split_dataset(const std::vector<TripletRecord>& triplets,
                           const SplitRatios& ratios, std::uint64_t seed) {
    if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
        std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
        throw BadRatios("split ratios must be non-negative and sum to 1");
    }
    if (triplets.size() < 3) {
        throw TooFewRecords("need at least 3 records to split, got " +
                            std::to_string(triplets.size()));
    }

    std::vector<TripletRecord> shuffled = triplets;
    RandomEngine engine(seed);
    engine.shuffle(shuffled);

    const std::size_t n = shuffled.size();
    const auto n_val = static_cast<std::size_t>(ratios.validation * static_cast<double>(n));
    const auto n_test = static_cast<std::size_t>(ratios.test * static_cast<double>(n));
    const std::size_t n_train = n - n_val - n_test;  // remainder goes to train

    DatasetSplit split;
    split.seed = seed;
    split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
    split.validation.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
    split.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
    return split;
}

// ---------------------------------------------------------------------------
// Record I/O
// ---------------------------------------------------------------------------

namespace {

// Pulls typed fields out of one parsed record, tracking the line number so
// every complaint can point at its source.
class FieldReader {
public:
    FieldReader(const json& record, std::size_t line) : record_(record), line_(line) {}

    const json& require(const char* name) const {
        auto it = record_.find(name);
        if (it == record_.end()) throw SchemaError(line_, name, "missing");
        return *it;
    }

    std::string get_string(const char* name) const {
        const json& v = require(name);
        if (!v.is_string()) throw SchemaError(line_, name, "expected a string");
        return v.get<std::string>();
    }

    std::int64_t get_int(const char* name) const {
        const json& v = require(name);
        if (!v.is_number_integer()) throw SchemaError(line_, name, "expected an integer");
        return v.get<std::int64_t>();
    }

    bool get_bool(const char* name) const {
        const json& v = require(name);
        if (!v.is_boolean()) throw SchemaError(line_, name, "expected a boolean");
        return v.get<bool>();
    }

    std::vector<std::string> get_string_list(const char* name) const {
        const json& v = require(name);
        if (!v.is_array()) throw SchemaError(line_, name, "expected a list");
        std::vector<std::string> out;
        for (const json& item : v) {
            if (!item.is_string()) throw SchemaError(line_, name, "expected a list of strings");
            out.push_back(item.get<std::string>());
        }
        return out;
    }

    std::size_t line() const { return line_; }

private:
    const json& record_;
    std::size_t line_;
};

json parse_line(const std::string& line, std::size_t line_no) {
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
        throw SchemaError(line_no, "(record)", "not a valid JSON object");
    }
    return record;
}

// getline, tolerating CRLF input.
bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

PostRecord post_from_json(const json& record, std::size_t line_no) {
    FieldReader fields(record, line_no);
    PostRecord post;
    post.question_id = fields.get_int("question_id");
    post.title = fields.get_string("title");
    post.body_html = fields.get_string("body_html");
    post.answer_html = fields.get_string("answer_html");
    post.tags = fields.get_string_list("tags");
    post.question_score = static_cast<int>(fields.get_int("question_score"));
    post.answer_score = static_cast<int>(fields.get_int("answer_score"));
    post.answerer_reputation = static_cast<int>(fields.get_int("answerer_reputation"));
    post.is_accepted = fields.get_bool("is_accepted");
    try {
        post.creation_date = Date::parse(fields.get_string("creation_date"));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(line_no, "creation_date", e.what());
    }
    if (post.tags.empty() || post.tags.size() > 5) {
        throw SchemaError(line_no, "tags", "expected 1 to 5 tags");
    }
    return post;
}

constexpr const char* kTripletFields[] = {
    "question_id", "question_title", "question_body", "human_answer",
    "reference_answer", "ai_answer", "prompt_variant", "max_length_tokens", "tags"};

TripletRecord triplet_from_json(const json& record, std::size_t line_no) {
    for (auto it = record.begin(); it != record.end(); ++it) {
        bool known = false;
        for (const char* name : kTripletFields) {
            if (it.key() == name) {
                known = true;
                break;
            }
        }
        if (!known) throw SchemaError(line_no, it.key(), "unknown field");
    }

    FieldReader fields(record, line_no);
    TripletRecord t;
    t.question_id = fields.get_int("question_id");
    t.question_title = fields.get_string("question_title");
    t.question_body = fields.get_string("question_body");
    t.human_answer = fields.get_string("human_answer");
    t.reference_answer = fields.get_string("reference_answer");
    t.ai_answer = fields.get_string("ai_answer");
    try {
        t.prompt_variant = prompt_variant_from_string(fields.get_string("prompt_variant"));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(line_no, "prompt_variant", e.what());
    }
    t.max_length_tokens = static_cast<int>(fields.get_int("max_length_tokens"));
    t.tags = fields.get_string_list("tags");

    if (t.human_answer.empty()) throw SchemaError(line_no, "human_answer", "must be non-empty");
    if (t.reference_answer.empty())
        throw SchemaError(line_no, "reference_answer", "must be non-empty");
    if (t.ai_answer.empty()) throw SchemaError(line_no, "ai_answer", "must be non-empty");
    if (t.max_length_tokens < 20 || t.max_length_tokens > 1000) {
        throw SchemaError(line_no, "max_length_tokens", "must be in [20, 1000]");
    }
    return t;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

std::vector<PostRecord> read_post_dump(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::vector<PostRecord> posts;
    std::string line;
    std::size_t line_no = 0;
    while (next_line(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        posts.push_back(post_from_json(parse_line(line, line_no), line_no));
    }
    return posts;
}

void write_post_dump(const std::vector<PostRecord>& posts, const std::string& path) {
    std::ofstream out = open_for_write(path);
    for (const PostRecord& post : posts) {
        ordered_json record{{"question_id", post.question_id},
                            {"title", post.title},
                            {"body_html", post.body_html},
                            {"answer_html", post.answer_html},
                            {"tags", post.tags},
                            {"question_score", post.question_score},
                            {"answer_score", post.answer_score},
                            {"answerer_reputation", post.answerer_reputation},
                            {"is_accepted", post.is_accepted},
                            {"creation_date", post.creation_date.to_string()}};
        out << record.dump() << '\n';
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

std::vector<TripletRecord> read_triplets(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::vector<TripletRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (next_line(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        records.push_back(triplet_from_json(parse_line(line, line_no), line_no));
    }
    return records;
}

void write_triplets(const std::vector<TripletRecord>& records, const std::string& path) {
    std::ofstream out = open_for_write(path);
    for (const TripletRecord& t : records) {
        ordered_json record{{"question_id", t.question_id},
                            {"question_title", t.question_title},
                            {"question_body", t.question_body},
                            {"human_answer", t.human_answer},
                            {"reference_answer", t.reference_answer},
                            {"ai_answer", t.ai_answer},
                            {"prompt_variant", std::string(to_string(t.prompt_variant))},
                            {"max_length_tokens", t.max_length_tokens},
                            {"tags", t.tags}};
        out << record.dump() << '\n';
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace castor
