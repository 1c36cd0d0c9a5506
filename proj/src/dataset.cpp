#include "fsdlab/dataset.hpp"

#include <unordered_set>

#include "fsdlab/errors.hpp"

namespace fsdlab {

size_t LabeledDataset::count(Label label) const {
    size_t n = 0;
    for (const auto& ex : examples)
        if (ex.label == label) ++n;
    return n;
}

std::vector<std::string> LabeledDataset::texts_with(Label label) const {
    std::vector<std::string> out;
    for (const auto& ex : examples)
        if (ex.label == label) out.push_back(ex.text);
    return out;
}

void LabeledDataset::validate() const {
    std::unordered_set<std::string> seen;
    seen.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.text.empty())
            raise(ErrorKind::Config, "example '" + ex.id + "' has empty text");
        if (!seen.insert(ex.id).second)
            raise(ErrorKind::Config, "duplicate example id '" + ex.id + "'");
    }
}

} // namespace fsdlab
