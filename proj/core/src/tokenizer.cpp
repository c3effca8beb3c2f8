#include "castor/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include "castor/errors.hpp"
#include "castor/text_util.hpp"

namespace castor {

namespace {

constexpr const char* kReserved[3] = {"<pad>", "<unk>", "<cls>"};

// Word characters are ASCII alphanumerics plus any byte outside ASCII, so
// multi-byte UTF-8 sequences stay glued together.  Everything else printable
// is punctuation and becomes a single-character token.
bool is_word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           u >= 0x80;
}

}  // namespace

std::vector<std::string> word_tokenize(std::string_view text) {
    std::string lowered = to_lower_ascii(text);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < lowered.size()) {
        char c = lowered[i];
        if (is_space_char(c) || static_cast<unsigned char>(c) < 0x20) {
            ++i;
        } else if (is_word_char(c)) {
            std::size_t start = i;
            while (i < lowered.size() && is_word_char(lowered[i])) ++i;
            tokens.emplace_back(lowered.substr(start, i - start));
        } else {
            tokens.emplace_back(1, c);
            ++i;
        }
    }
    return tokens;
}

Vocab::Vocab() {
    for (const char* token : kReserved) {
        token_to_id_.emplace(token, static_cast<std::int32_t>(id_to_token_.size()));
        id_to_token_.emplace_back(token);
    }
}

std::int32_t Vocab::id_of(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
        throw UnknownId("token id " + std::to_string(id) + " is outside the vocabulary (size " +
                        std::to_string(id_to_token_.size()) + ")");
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const {
    return token_to_id_.count(std::string(token)) > 0;
}

void Vocab::add_token(const std::string& token) {
    if (token_to_id_.count(token)) return;
    token_to_id_.emplace(token, static_cast<std::int32_t>(id_to_token_.size()));
    id_to_token_.push_back(token);
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const std::string& token : id_to_token_) out << token << '\n';
    if (!out) throw IoError("failed while writing '" + path + "'");
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    Vocab vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no <= 3) {
            if (line != kReserved[line_no - 1]) {
                throw IoError("'" + path + "' line " + std::to_string(line_no) +
                              ": expected reserved token '" + kReserved[line_no - 1] + "'");
            }
            continue;
        }
        if (line.empty()) {
            throw IoError("'" + path + "' line " + std::to_string(line_no) + ": empty token");
        }
        vocab.add_token(line);
    }
    if (line_no < 3) throw IoError("'" + path + "' is missing the reserved-token header");
    return vocab;
}

Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size,
                  std::size_t min_freq) {
    if (corpus.empty()) throw EmptyCorpus("cannot build a vocabulary from an empty corpus");
    if (max_size < 4) throw std::invalid_argument("max_size must be at least 4");

    std::unordered_map<std::string, std::size_t> freq;
    for (const std::string& text : corpus) {
        for (std::string& token : word_tokenize(text)) {
            ++freq[std::move(token)];
        }
    }

    std::vector<std::pair<std::string, std::size_t>> ranked;
    ranked.reserve(freq.size());
    for (auto& [token, count] : freq) {
        if (count >= min_freq) ranked.emplace_back(token, count);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocab vocab;
    for (const auto& [token, count] : ranked) {
        if (vocab.size() >= max_size) break;
        vocab.add_token(token);
    }
    return vocab;
}

TokenSeq encode(std::string_view text, const Vocab& vocab, std::size_t max_len,
                std::size_t block_size) {
    if (block_size < 1) throw std::invalid_argument("block_size must be at least 1");
    if (max_len < block_size) throw std::invalid_argument("max_len must be >= block_size");

    std::vector<std::string> tokens = word_tokenize(text);

    TokenSeq seq;
    seq.ids.push_back(Vocab::kCls);
    for (const std::string& token : tokens) {
        if (seq.ids.size() >= max_len) break;
        seq.ids.push_back(vocab.id_of(token));
    }
    seq.length_real = seq.ids.size();

    std::size_t padded = ((seq.length_real + block_size - 1) / block_size) * block_size;
    seq.ids.resize(padded, Vocab::kPad);
    seq.pad_mask.assign(padded, false);
    for (std::size_t i = 0; i < seq.length_real; ++i) seq.pad_mask[i] = true;
    return seq;
}

std::string decode(const std::vector<std::int32_t>& ids, const Vocab& vocab) {
    std::string out;
    for (std::int32_t id : ids) {
        const std::string& token = vocab.token_of(id);  // validates the id
        if (id == Vocab::kPad || id == Vocab::kCls) continue;
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

}  // namespace castor
