#include "scenedex/tokenizer.hpp"

#include <cctype>

namespace scenedex {

std::size_t word_count(std::string_view text) {
    std::size_t words = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        const bool word_char = c >= 0x80 || std::isalnum(c);
        if (word_char && !in_word) ++words;
        in_word = word_char;
    }
    return words;
}

std::size_t token_length(std::string_view text) {
    return (word_count(text) * 13 + 9) / 10;
}

}  // namespace scenedex
