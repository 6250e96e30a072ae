#include <cmath>
#include <map>

#include "doctest.h"

#include "clrun/replay.hpp"

using namespace clrun;

namespace {

Example make_example(int id) {
    Example e;
    e.input = Tensor({1}, {double(id)});
    e.label = id % 10;
    e.task_id = 0;
    e.source_index = id;
    return e;
}

}  // namespace

TEST_CASE("under-capacity inserts always keep") {
    ReplayBuffer buf(2, 99);
    buf.insert(make_example(0));
    buf.insert(make_example(1));
    CHECK(buf.size() == 2);
    CHECK(buf.seen() == 2);
    CHECK(buf.items()[0].source_index == 0);
    CHECK(buf.items()[1].source_index == 1);
}

TEST_CASE("replacement at capacity one keeps the newcomer when accepted") {
    // scan for a seed whose first over-capacity draw accepts, then check the
    // newcomer fully replaced the resident
    for (std::uint64_t seed = 0;; ++seed) {
        REQUIRE(seed < 1000);
        ReplayBuffer buf(1, seed);
        buf.insert(make_example(0));
        buf.insert(make_example(1));
        CHECK(buf.size() == 1);
        if (buf.items()[0].source_index == 1) break;
    }
}

TEST_CASE("size never exceeds capacity") {
    ReplayBuffer buf(5, 3);
    for (int i = 0; i < 100; ++i) {
        buf.insert(make_example(i));
        CHECK(buf.size() <= 5);
    }
    CHECK(buf.size() == 5);
    CHECK(buf.seen() == 100);
}

TEST_CASE("zero-capacity buffer stores nothing") {
    ReplayBuffer buf(0, 3);
    buf.insert(make_example(0));
    CHECK(buf.size() == 0);
    CHECK(buf.seen() == 1);
    CHECK(buf.sample(3).empty());
}

TEST_CASE("sample: single-item buffer returns it every time") {
    ReplayBuffer buf(4, 5);
    buf.insert(make_example(42));
    const auto s = buf.sample(3);
    REQUIRE(s.size() == 3);
    for (const auto& e : s) CHECK(e.source_index == 42);
}

TEST_CASE("sample: n = 0 and empty buffer both give empty lists") {
    ReplayBuffer buf(4, 5);
    CHECK(buf.sample(10).empty());
    buf.insert(make_example(1));
    CHECK(buf.sample(0).empty());
}

TEST_CASE("sample: deterministic under a fixed seed") {
    const auto draw = [] {
        ReplayBuffer buf(8, 1234);
        for (int i = 0; i < 8; ++i) buf.insert(make_example(i));
        std::vector<int> ids;
        for (const auto& e : buf.sample(20)) ids.push_back(e.source_index);
        return ids;
    };
    CHECK(draw() == draw());
}

TEST_CASE("sample frequencies are uniform over the buffer") {
    ReplayBuffer buf(5, 777);
    for (int i = 0; i < 5; ++i) buf.insert(make_example(i));
    const std::size_t draws = 50000;
    std::map<int, std::size_t> counts;
    for (const auto& e : buf.sample(draws)) ++counts[e.source_index];
    const double p = 0.2;
    const double sigma = std::sqrt(p * (1 - p) / double(draws));
    for (int i = 0; i < 5; ++i) {
        const double freq = double(counts[i]) / double(draws);
        CHECK(std::abs(freq - p) <= 3.0 * sigma);
    }
}

TEST_CASE("inclusion probability approaches M/N (reduced-scale Monte Carlo)") {
    // full-scale (1e5-trial) statistics run in the acceptance suite
    const std::size_t capacity = 10, stream = 100, trials = 20000;
    std::size_t included = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        ReplayBuffer buf(capacity, 5000 + t);
        for (std::size_t i = 0; i < stream; ++i) buf.insert(make_example(int(i)));
        for (const auto& e : buf.items()) {
            if (e.source_index == 0) {
                ++included;
                break;
            }
        }
    }
    const double p = double(capacity) / double(stream);
    const double freq = double(included) / double(trials);
    const double sigma = std::sqrt(p * (1 - p) / double(trials));
    CHECK(std::abs(freq - p) <= 3.0 * sigma);
}

TEST_CASE("insert order does not change the marginal inclusion probability") {
    // track a fixed item id inserted first vs inserted in the middle
    const std::size_t capacity = 10, stream = 100, trials = 20000;
    const auto run = [&](bool middle) {
        std::size_t included = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            ReplayBuffer buf(capacity, 9000 + t);
            const std::size_t target_pos = middle ? stream / 2 : 0;
            for (std::size_t i = 0; i < stream; ++i) {
                buf.insert(make_example(i == target_pos ? -7 : int(i)));
            }
            for (const auto& e : buf.items()) {
                if (e.source_index == -7) {
                    ++included;
                    break;
                }
            }
        }
        return double(included) / double(trials);
    };
    const double p = double(capacity) / double(stream);
    const double sigma = std::sqrt(p * (1 - p) / double(trials));
    CHECK(std::abs(run(false) - p) <= 3.0 * sigma);
    CHECK(std::abs(run(true) - p) <= 3.0 * sigma);
}
