#include "castor/detector.hpp"

#include <cmath>
#include <fstream>

#include "castor/text_util.hpp"
#include "json.hpp"

namespace castor {

using nlohmann::json;

std::string_view to_string(DetectLabel label) {
    return label == DetectLabel::AiGenerated ? "ai" : "human";
}

Detector::Detector(ModelCheckpoint ckpt, Vocab vocab)
    : ckpt_(std::move(ckpt)), vocab_(std::move(vocab)) {
    ckpt_.encoder_cfg.validate();
    if (vocab_.size() != ckpt_.encoder_cfg.vocab_size) {
        throw ShapeMismatch("vocabulary size " + std::to_string(vocab_.size()) +
                            " does not match the checkpoint's " +
                            std::to_string(ckpt_.encoder_cfg.vocab_size));
    }
}

TokenSeq Detector::tokenize(const std::string& cleaned_text) const {
    return encode(cleaned_text, vocab_, ckpt_.encoder_cfg.max_len,
                  ckpt_.encoder_cfg.block_size);
}

Tensor<float> Detector::embed(const std::string& text) const {
    std::string cleaned = clean_text(text);
    if (cleaned.empty()) throw EmptyText("text is empty after cleaning");
    TokenSeq seq = tokenize(cleaned);
    Tensor<float> vec = encode(ckpt_.params, ckpt_.encoder_cfg, seq);
    double norm_sq = 0.0;
    for (float v : vec.data) norm_sq += static_cast<double>(v) * static_cast<double>(v);
    if (std::sqrt(norm_sq) <= 1e-12) {
        throw ZeroEmbedding("encoder produced a zero embedding");
    }
    return vec;
}

double Detector::similarity_to(const Tensor<float>& reference_embedding,
                               const TokenSeq& seq) const {
    Tensor<float> cand = encode(ckpt_.params, ckpt_.encoder_cfg, seq);
    return static_cast<double>(cosine_similarity(reference_embedding, cand));
}

Verdict Detector::detect(const std::string& reference, const std::string& candidate,
                         double threshold) const {
    std::string ref_clean = clean_text(reference);
    std::string cand_clean = clean_text(candidate);
    if (ref_clean.empty()) throw EmptyText("reference text is empty after cleaning");
    if (cand_clean.empty()) throw EmptyText("candidate text is empty after cleaning");

    Tensor<float> ref_vec = embed(reference);
    Tensor<float> cand_vec = embed(candidate);

    Verdict v;
    v.similarity = static_cast<double>(cosine_similarity(ref_vec, cand_vec));
    v.threshold_used = threshold;
    v.label = v.similarity >= threshold ? DetectLabel::AiGenerated : DetectLabel::Human;
    v.candidate_token_length = word_tokenize(cand_clean).size();
    return v;
}

std::vector<BatchItem> Detector::detect_batch(
    const std::vector<std::pair<std::string, std::string>>& pairs, double threshold) const {
    // Memoize reference embeddings per cleaned text for the duration of the
    // call; evaluation reuses one reference across many candidates.
    std::unordered_map<std::string, Tensor<float>> ref_cache;

    std::vector<BatchItem> out;
    out.reserve(pairs.size());
    for (const auto& [reference, candidate] : pairs) {
        BatchItem item;
        try {
            std::string ref_clean = clean_text(reference);
            std::string cand_clean = clean_text(candidate);
            if (ref_clean.empty()) throw EmptyText("reference text is empty after cleaning");
            if (cand_clean.empty()) throw EmptyText("candidate text is empty after cleaning");

            auto it = ref_cache.find(ref_clean);
            if (it == ref_cache.end()) {
                it = ref_cache.emplace(ref_clean, embed(reference)).first;
            }
            Tensor<float> cand_vec = embed(candidate);

            Verdict v;
            v.similarity = static_cast<double>(cosine_similarity(it->second, cand_vec));
            v.threshold_used = threshold;
            v.label = v.similarity >= threshold ? DetectLabel::AiGenerated : DetectLabel::Human;
            v.candidate_token_length = word_tokenize(cand_clean).size();
            item.verdict = v;
        } catch (const std::exception& e) {
            item.error = e.what();
        }
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<DetectPair> read_detect_pairs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::vector<DetectPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (strip(line).empty()) continue;

        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw SchemaError(line_no, "(record)", "not a valid JSON object");
        }
        DetectPair pair;
        if (!record.contains("reference_answer") || !record["reference_answer"].is_string()) {
            throw SchemaError(line_no, "reference_answer", "missing or not a string");
        }
        if (!record.contains("candidate_answer") || !record["candidate_answer"].is_string()) {
            throw SchemaError(line_no, "candidate_answer", "missing or not a string");
        }
        pair.reference_answer = record["reference_answer"].get<std::string>();
        pair.candidate_answer = record["candidate_answer"].get<std::string>();
        if (record.contains("true_label")) {
            if (!record["true_label"].is_string()) {
                throw SchemaError(line_no, "true_label", "expected \"ai\" or \"human\"");
            }
            std::string label = record["true_label"].get<std::string>();
            if (label == "ai") {
                pair.true_is_ai = true;
            } else if (label == "human") {
                pair.true_is_ai = false;
            } else {
                throw SchemaError(line_no, "true_label", "expected \"ai\" or \"human\"");
            }
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace castor
