#pragma once

#include <cstddef>
#include <string_view>

namespace scenedex {

/// Words separated by whitespace or ASCII punctuation. Non-ASCII bytes count
/// as word characters so CJK runs are not dropped.
std::size_t word_count(std::string_view text);

/// Provider-independent token estimate: ceil(1.3 * word_count).
std::size_t token_length(std::string_view text);

}  // namespace scenedex
