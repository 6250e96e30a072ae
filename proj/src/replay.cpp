#include "clrun/replay.hpp"

namespace clrun {

void ReplayBuffer::insert(const Example& e) {
    ++seen_;
    if (capacity_ == 0) return;
    if (items_.size() < capacity_) {
        items_.push_back(e);
        return;
    }
    // keep with probability M/N by drawing a slot in [0, N); slots >= M discard
    const std::uint64_t slot = rng_.below(seen_);
    if (slot < capacity_) items_[static_cast<std::size_t>(slot)] = e;
}

std::vector<Example> ReplayBuffer::sample(std::size_t n) {
    std::vector<Example> out;
    if (items_.empty() || n == 0) return out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(items_[static_cast<std::size_t>(rng_.below(items_.size()))]);
    }
    return out;
}

}  // namespace clrun
