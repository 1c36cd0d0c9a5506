#pragma once

#include <stdexcept>
#include <string>

namespace fsdlab {

// Error taxonomy shared by the library and the CLI (which maps kinds to
// exit codes). Keep kinds distinct per failure family so callers can react
// without parsing messages.
enum class ErrorKind {
    Config,            // invalid configuration / preconditions
    EmptyInput,        // scoring called on text with no scorable tokens
    InsufficientTokens,// sequence too short to score
    SequenceTooLong,   // sequence exceeds context_len
    EmptyFinetuneSet,  // split produced no fine-tuning examples
    DegenerateInput,   // metric needs both classes present
    Io,                // file open/read/write failure
    Parse,             // malformed JSON / CSV input
    BadMagic,          // checkpoint magic mismatch
    BadVersion,        // checkpoint format version mismatch
    Truncated,         // checkpoint ends mid-stream
    ShapeMismatch,     // checkpoint tensor shape disagrees with config
    NumericFailure,    // NaN/Inf encountered where finite values are required
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace fsdlab
