#pragma once

#include <string>
#include <vector>

namespace fsdlab {

enum class Label { Member, NonMember };

inline int label_to_int(Label label) { return label == Label::Member ? 1 : 0; }

struct LabeledExample {
    std::string id;
    std::string text; // non-empty byte string
    Label label = Label::NonMember;
};

struct LabeledDataset {
    std::vector<LabeledExample> examples;
    std::string provenance;

    size_t size() const { return examples.size(); }
    size_t count(Label label) const;
    std::vector<std::string> texts_with(Label label) const;

    // Enforces unique ids and non-empty texts.
    void validate() const;
};

} // namespace fsdlab
