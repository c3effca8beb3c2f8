#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace castor {

struct EmptyCorpus : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownId : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Word-level vocabulary with three reserved ids.
class Vocab {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::int32_t kCls = 2;

    Vocab();

    // id for a token, or kUnk when absent.
    std::int32_t id_of(std::string_view token) const;

    // token text for an id; throws UnknownId when out of range.
    const std::string& token_of(std::int32_t id) const;

    bool contains(std::string_view token) const;
    std::size_t size() const { return id_to_token_.size(); }

    // Append a non-reserved token; ignores duplicates.  Used by the builder
    // and the file loader.
    void add_token(const std::string& token);

    void save(const std::string& path) const;           // throws IoError (corpus.hpp)
    static Vocab load(const std::string& path);

private:
    std::unordered_map<std::string, std::int32_t> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Token id sequence padded to a block multiple.  Real tokens (CLS included)
// form a prefix; pad positions carry the PAD id and a false mask bit.
struct TokenSeq {
    std::vector<std::int32_t> ids;
    std::vector<bool> pad_mask;    // true = real token
    std::size_t length_real = 0;   // includes the leading CLS
};

// Lowercase, then split on whitespace and punctuation; each punctuation
// character is its own token.  This is the single tokenization rule used for
// vocabulary building, encoding, and token-length statistics.
std::vector<std::string> word_tokenize(std::string_view text);

// Rank tokens with frequency >= min_freq by (frequency desc, token asc) and
// assign ids from 3 up to max_size - 1.
Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size,
                  std::size_t min_freq);

// Tokenize, map through the vocab (unknown -> UNK), prepend CLS, truncate to
// max_len, then right-pad with PAD to the next multiple of block_size.
TokenSeq encode(std::string_view text, const Vocab& vocab, std::size_t max_len,
                std::size_t block_size);

// Inverse-ish of encode: drops PAD and CLS, joins tokens with single spaces.
std::string decode(const std::vector<std::int32_t>& ids, const Vocab& vocab);

}  // namespace castor
