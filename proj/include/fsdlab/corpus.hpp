#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fsdlab/dataset.hpp"

namespace fsdlab {

struct YearRange {
    int lo = 0;
    int hi = 0; // inclusive

    bool contains(int year) const { return year >= lo && year <= hi; }
    bool empty() const { return hi < lo; }
    bool overlaps(const YearRange& other) const {
        return lo <= other.hi && other.lo <= hi;
    }
};

// Synthetic event-sentence corpus with a controllable temporal shift:
// members draw years from member_years, non-members from nonmember_years
// (disjoint when temporal_shift). With temporal_shift=false both classes
// draw from the union range, removing the timestamp artifact.
struct CorpusConfig {
    size_t n_members = 2000;
    size_t n_nonmembers = 400;
    std::string template_pool = "events"; // builtin id or path to a pool file
    YearRange member_years{2010, 2022};
    YearRange nonmember_years{2023, 2024};
    bool temporal_shift = true;
    size_t min_len = 64;  // bytes, target lower bound
    size_t max_len = 224; // bytes, hard upper bound
    uint64_t seed = 42;

    void validate() const;
};

// One template per line; placeholders are brace-marked names like {EVENT}.
// A placeholder name repeated within one template reuses the same draw.
struct TemplatePool {
    std::string id;
    std::vector<std::string> lines;
};

TemplatePool load_template_pool(const std::string& id_or_path);
// The compiled-in "events" pool, byte-identical to the shipped asset file.
const std::string& builtin_events_pool();

LabeledDataset generate(const CorpusConfig& config);

// Removes every standalone 4-digit year in [1900, 2099] together with
// attached date words (month names, day-of-month numbers, one preceding
// on/in connector), collapsing the whitespace left behind. Idempotent.
std::string transform_deletion(std::string_view text);

// Replaces every standalone 4-digit year in [1900, 2099] with target_year.
std::string transform_replacement(std::string_view text,
                                  int target_year = 2023);

enum class TransformKind { None, Deletion, Replacement };

const char* to_string(TransformKind kind);
TransformKind transform_from_name(std::string_view name);
std::string apply_transform(std::string_view text, TransformKind kind);
LabeledDataset apply_transform(const LabeledDataset& dataset,
                               TransformKind kind);

// JSONL: one {"input": <string>, "label": <0|1>} object per line, label 1
// means member (WikiMIA convention). Loader regenerates ids positionally
// and reports malformed lines with their line number.
LabeledDataset load_jsonl(const std::string& path);
void save_jsonl(const LabeledDataset& dataset, const std::string& path);

} // namespace fsdlab
