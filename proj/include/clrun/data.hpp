#pragma once

#include <cstddef>
#include <vector>

#include "clrun/tensor.hpp"

namespace clrun {

// One labelled stream example. source_index points back into the source
// dataset (or -1 for generated data) so buffer snapshots can reference inputs
// without storing pixels.
struct Example {
    Tensor input;  // rank-1, length = input dim
    int label = 0;
    int task_id = 0;
    int source_index = -1;
};

// A batch of examples with inputs packed row-wise.
struct Batch {
    Tensor x;  // n x dim
    std::vector<int> labels;
    std::vector<int> task_ids;
    std::vector<int> source_indices;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }

    static Batch from_examples(const std::vector<Example>& ex);

    Example example(std::size_t i) const;

    // rows [begin, end) as a new batch
    Batch slice(std::size_t begin, std::size_t end) const;

    // this batch followed by extra examples
    Batch concat(const std::vector<Example>& extra) const;
};

}  // namespace clrun
