#include "castor/text_util.hpp"

namespace castor {

std::string_view strip(std::string_view text) {
    std::size_t begin = 0;
    while (begin < text.size() && is_space_char(text[begin])) ++begin;
    std::size_t end = text.size();
    while (end > begin && is_space_char(text[end - 1])) --end;
    return text.substr(begin, end - begin);
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_space_char(text[i])) {
            out.push_back(text[i]);
            ++i;
            continue;
        }
        int newlines = 0;
        while (i < text.size() && is_space_char(text[i])) {
            if (text[i] == '\n') ++newlines;
            ++i;
        }
        if (newlines == 0) {
            out.push_back(' ');
        } else if (newlines == 1) {
            out.push_back('\n');
        } else {
            out.append("\n\n");
        }
    }
    return out;
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space_char(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space_char(text[i])) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

}  // namespace castor
