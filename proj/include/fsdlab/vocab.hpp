#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fsdlab {

// Byte-level token alphabet: ids 0..255 are raw byte values, followed by
// the three specials. Specials never collide with content bytes, so
// decode(encode(text)) == text for arbitrary byte strings.
struct Vocab {
    int32_t size = 259;
    int32_t bos = 256;
    int32_t eos = 257;
    int32_t pad = 258;

    void validate() const;
};

struct TokenSeq {
    std::vector<int32_t> ids; // starts with BOS after encode()
    bool truncated = false;

    size_t length() const { return ids.size(); }
    // Content tokens scored by the model (everything after BOS).
    size_t scored_tokens() const { return ids.empty() ? 0 : ids.size() - 1; }
};

// BOS followed by one token per input byte. At most max_content bytes are
// kept; dropping the rest sets the truncated flag.
TokenSeq encode(std::string_view text, const Vocab& vocab,
                size_t max_content = SIZE_MAX);

// Inverse of encode: concatenates byte tokens, skipping specials.
std::string decode(const TokenSeq& seq, const Vocab& vocab);

} // namespace fsdlab
