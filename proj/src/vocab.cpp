#include "fsdlab/vocab.hpp"

#include "fsdlab/errors.hpp"

namespace fsdlab {

void Vocab::validate() const {
    if (size < 259)
        raise(ErrorKind::Config, "vocab size must cover 256 bytes + 3 specials");
    if (bos < 256 || eos < 256 || pad < 256)
        raise(ErrorKind::Config, "special token ids must not be byte values");
    if (bos == eos || bos == pad || eos == pad)
        raise(ErrorKind::Config, "special token ids must be distinct");
    if (bos >= size || eos >= size || pad >= size)
        raise(ErrorKind::Config, "special token ids must be below vocab size");
}

TokenSeq encode(std::string_view text, const Vocab& vocab, size_t max_content) {
    TokenSeq seq;
    size_t keep = text.size();
    if (keep > max_content) {
        keep = max_content;
        seq.truncated = true;
    }
    seq.ids.reserve(keep + 1);
    seq.ids.push_back(vocab.bos);
    for (size_t i = 0; i < keep; ++i) {
        seq.ids.push_back(static_cast<int32_t>(static_cast<unsigned char>(text[i])));
    }
    return seq;
}

std::string decode(const TokenSeq& seq, const Vocab& vocab) {
    std::string out;
    out.reserve(seq.ids.size());
    for (int32_t id : seq.ids) {
        if (id == vocab.bos || id == vocab.eos || id == vocab.pad) continue;
        if (id < 0 || id > 255)
            raise(ErrorKind::Config, "token id " + std::to_string(id) +
                                         " is not decodable");
        out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
    }
    return out;
}

} // namespace fsdlab
