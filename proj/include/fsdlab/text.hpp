#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fsdlab {

// Unicode simple lowercasing (non-locale, no special casing): ASCII,
// Latin-1, Latin Extended-A, Greek and Cyrillic letter ranges map
// code-point to code-point; everything else, including invalid UTF-8
// bytes, passes through untouched.
std::string simple_lowercase(std::string_view text);

struct YearToken {
    size_t begin = 0; // byte offset of the first digit
    size_t end = 0;   // one past the last digit
    int value = 0;
};

// Standalone 4-digit numbers in [1900, 2099]: exactly four digits, not
// adjacent to an alphanumeric byte on either side.
std::vector<YearToken> find_year_tokens(std::string_view text);

} // namespace fsdlab
