#include "fsdlab/text.hpp"

#include <cstdint>

namespace fsdlab {

namespace {

bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
           (c >= 'A' && c <= 'Z');
}

// Simple (one-to-one) lowercase mapping for the letter ranges this corpus
// can plausibly contain. Returns the input unchanged outside them.
uint32_t lower_codepoint(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
    if (cp >= 0x0100 && cp <= 0x0137) {
        if (cp == 0x0130) return 0x0069; // dotted capital I
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x014A && cp <= 0x0177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x0178) return 0x00FF;
    if (cp == 0x0179 || cp == 0x017B || cp == 0x017D) return cp + 1;
    if (cp == 0x0386) return 0x03AC;
    if (cp >= 0x0388 && cp <= 0x038A) return cp + 0x25;
    if (cp == 0x038C) return 0x03CC;
    if (cp == 0x038E || cp == 0x038F) return cp + 0x3F;
    if (cp >= 0x0391 && cp <= 0x03AB && cp != 0x03A2) return cp + 32;
    if (cp >= 0x0400 && cp <= 0x040F) return cp + 80;
    if (cp >= 0x0410 && cp <= 0x042F) return cp + 32;
    return cp;
}

// Decodes one UTF-8 code point at `pos`; returns false on malformed input.
bool decode_utf8(std::string_view s, size_t pos, uint32_t& cp, size_t& len) {
    unsigned char b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        cp = b0;
        len = 1;
        return true;
    }
    int extra;
    uint32_t value;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        value = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        value = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        value = b0 & 0x07;
    } else {
        return false;
    }
    if (pos + static_cast<size_t>(extra) >= s.size()) return false;
    for (int i = 1; i <= extra; ++i) {
        unsigned char b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) return false;
        value = (value << 6) | (b & 0x3F);
    }
    cp = value;
    len = static_cast<size_t>(extra) + 1;
    return true;
}

void encode_utf8(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

} // namespace

std::string simple_lowercase(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) {
        uint32_t cp;
        size_t len;
        if (decode_utf8(text, pos, cp, len)) {
            encode_utf8(lower_codepoint(cp), out);
            pos += len;
        } else {
            out.push_back(text[pos]); // opaque byte, pass through
            ++pos;
        }
    }
    return out;
}

std::vector<YearToken> find_year_tokens(std::string_view text) {
    std::vector<YearToken> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        if (text[i] < '0' || text[i] > '9') {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < n && text[j] >= '0' && text[j] <= '9') ++j;
        if (j - i == 4 && (i == 0 || !is_ascii_alnum(text[i - 1])) &&
            (j == n || !is_ascii_alnum(text[j]))) {
            int value = (text[i] - '0') * 1000 + (text[i + 1] - '0') * 100 +
                        (text[i + 2] - '0') * 10 + (text[i + 3] - '0');
            if (value >= 1900 && value <= 2099)
                out.push_back({i, j, value});
        }
        i = j;
    }
    return out;
}

} // namespace fsdlab
