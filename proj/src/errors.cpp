#include "fsdlab/errors.hpp"

namespace fsdlab {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::EmptyInput: return "empty_input";
    case ErrorKind::InsufficientTokens: return "insufficient_tokens";
    case ErrorKind::SequenceTooLong: return "sequence_too_long";
    case ErrorKind::EmptyFinetuneSet: return "empty_finetune_set";
    case ErrorKind::DegenerateInput: return "degenerate_input";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::BadMagic: return "bad_magic";
    case ErrorKind::BadVersion: return "bad_version";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::NumericFailure: return "numeric_failure";
    }
    return "unknown";
}

} // namespace fsdlab
