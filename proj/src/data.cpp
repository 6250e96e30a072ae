#include "clrun/data.hpp"

namespace clrun {

Batch Batch::from_examples(const std::vector<Example>& ex) {
    Batch b;
    if (ex.empty()) {
        b.x = Tensor({0, 0});
        return b;
    }
    const std::size_t dim = ex.front().input.size();
    b.x = Tensor({ex.size(), dim});
    for (std::size_t i = 0; i < ex.size(); ++i) {
        if (ex[i].input.size() != dim) {
            throw ShapeError("batch examples have mismatched input dims");
        }
        for (std::size_t d = 0; d < dim; ++d) b.x.at(i, d) = ex[i].input[d];
        b.labels.push_back(ex[i].label);
        b.task_ids.push_back(ex[i].task_id);
        b.source_indices.push_back(ex[i].source_index);
    }
    return b;
}

Example Batch::example(std::size_t i) const {
    return {x.row(i), labels[i], task_ids[i], source_indices[i]};
}

Batch Batch::slice(std::size_t begin, std::size_t end) const {
    Batch out;
    const std::size_t dim = x.cols();
    out.x = Tensor({end - begin, dim});
    for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t d = 0; d < dim; ++d) out.x.at(i - begin, d) = x.at(i, d);
        out.labels.push_back(labels[i]);
        out.task_ids.push_back(task_ids[i]);
        out.source_indices.push_back(source_indices[i]);
    }
    return out;
}

Batch Batch::concat(const std::vector<Example>& extra) const {
    if (extra.empty()) return *this;
    const std::size_t dim = x.cols();
    Batch out;
    out.x = Tensor({size() + extra.size(), dim});
    for (std::size_t i = 0; i < size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) out.x.at(i, d) = x.at(i, d);
    }
    out.labels = labels;
    out.task_ids = task_ids;
    out.source_indices = source_indices;
    for (std::size_t j = 0; j < extra.size(); ++j) {
        if (extra[j].input.size() != dim) {
            throw ShapeError("concat: example dim mismatch");
        }
        for (std::size_t d = 0; d < dim; ++d) {
            out.x.at(size() + j, d) = extra[j].input[d];
        }
        out.labels.push_back(extra[j].label);
        out.task_ids.push_back(extra[j].task_id);
        out.source_indices.push_back(extra[j].source_index);
    }
    return out;
}

}  // namespace clrun
