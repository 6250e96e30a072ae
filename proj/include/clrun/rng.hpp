#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace clrun {

// Deterministic RNG over mt19937_64 raw output. The distribution code is
// written out here instead of using <random> distributions, whose output is
// implementation-defined; every draw below is bit-identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1), 53 bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), rejection-sampled to stay unbiased
    std::uint64_t below(std::uint64_t n);

    // standard normal, Box-Muller; two uniforms per call, no cached spare, so
    // the stream position does not depend on call parity
    double gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    std::mt19937_64 eng_;
};

// Mixes a base seed with a short tag so the init / shuffle / reservoir
// streams of one experiment never overlap.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace clrun
