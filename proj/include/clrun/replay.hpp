#pragma once

#include <cstdint>
#include <vector>

#include "clrun/data.hpp"
#include "clrun/rng.hpp"

namespace clrun {

// Fixed-capacity episodic memory maintained by reservoir sampling: after N
// insertions every seen example is resident with probability M/N. Sampling is
// uniform with replacement. Single-writer; owned by exactly one learner run.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t seed)
        : capacity_(capacity), rng_(seed) {}

    void insert(const Example& e);

    // n uniform draws with replacement; empty buffer yields an empty list and
    // callers fall back to the current batch alone
    std::vector<Example> sample(std::size_t n);

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t seen() const { return seen_; }
    const std::vector<Example>& items() const { return items_; }

private:
    std::size_t capacity_;
    std::uint64_t seen_ = 0;
    std::vector<Example> items_;
    Rng rng_;
};

}  // namespace clrun
