#pragma once

#include <iosfwd>
#include <string>

#include "fsdlab/model.hpp"

namespace fsdlab {

// Versioned binary container:
//   magic "FSDLM\0" | u32 LE version | u64 LE header length | header JSON |
//   raw little-endian f32 tensor data back-to-back in declared order.
// The header is canonical JSON (sorted keys, no whitespace) carrying the
// model config, the adapter spec if any, and the tensor manifest
// (name + shape per tensor). Round-trips are bit-exact.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_model(const LanguageModel& model, const std::string& path);
LanguageModel load_model(const std::string& path);

void save_model(const LanguageModel& model, std::ostream& out);
LanguageModel load_model(std::istream& in);

std::string save_model_bytes(const LanguageModel& model);
LanguageModel load_model_bytes(const std::string& bytes);

} // namespace fsdlab
