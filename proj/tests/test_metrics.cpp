#include <cmath>

#include "doctest.h"

#include "clrun/metrics.hpp"
#include "clrun/rng.hpp"
#include "clrun/streams.hpp"

using namespace clrun;

namespace {

AccuracyMatrix lower_filled(std::size_t T, std::uint64_t seed) {
    Rng rng(seed);
    AccuracyMatrix m(T);
    for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = 0; j <= i; ++j) m.set(i, j, rng.uniform());
    }
    return m;
}

RunRecord record_with_ra(double frac, double seconds, std::uint64_t seed,
                         bool diverged = false) {
    RunRecord r;
    r.config = {{"k", "v"}};
    r.config_hash = "abc";
    r.seed = seed;
    r.matrix = AccuracyMatrix(1);
    r.matrix.set(0, 0, frac);
    r.task_seconds = {seconds};
    r.total_seconds = seconds;
    r.diverged = diverged;
    return r;
}

}  // namespace

TEST_CASE("accuracy matrix: set/get/has and bounds") {
    AccuracyMatrix m(3);
    CHECK(m.task_count() == 3);
    CHECK_FALSE(m.has(0, 0));
    m.set(1, 0, 0.5);
    CHECK(m.has(1, 0));
    CHECK(m.get(1, 0) == 0.5);
    CHECK_THROWS_AS(m.set(3, 0, 0.5), MetricError);
    CHECK_THROWS_AS(m.get(0, 3), MetricError);
    CHECK_THROWS_AS(m.set(0, 0, 1.5), MetricError);
    CHECK_THROWS_AS(m.set(0, 0, -0.1), MetricError);
}

TEST_CASE("accuracy matrix: json round-trip preserves holes") {
    AccuracyMatrix m(3);
    m.set(0, 0, 0.25);
    m.set(2, 1, 0.75);
    const AccuracyMatrix back = AccuracyMatrix::from_json(m.to_json());
    CHECK(back == m);
    CHECK_FALSE(back.has(1, 1));
    CHECK(back.get(2, 1) == 0.75);
}

TEST_CASE("retained accuracy: hand cases hold bitwise") {
    AccuracyMatrix perfect(3);
    for (std::size_t j = 0; j < 3; ++j) perfect.set(2, j, 1.0);
    CHECK(retained_accuracy(perfect) == 100.0);

    AccuracyMatrix m(2);
    m.set(1, 0, 0.6);
    m.set(1, 1, 0.8);
    CHECK(retained_accuracy(m) == 70.0);
}

TEST_CASE("retained accuracy: uniform 0.767 over 20 tasks") {
    AccuracyMatrix m(20);
    for (std::size_t j = 0; j < 20; ++j) m.set(19, j, 0.767);
    CHECK(retained_accuracy(m) == doctest::Approx(76.7).epsilon(1e-12));
}

TEST_CASE("retained accuracy: incomplete final row is an error") {
    AccuracyMatrix m(2);
    m.set(1, 0, 0.6);
    CHECK_THROWS_AS(retained_accuracy(m), MetricError);
    CHECK_THROWS_AS(retained_accuracy(AccuracyMatrix()), MetricError);
}

TEST_CASE("bti: hand cases hold bitwise") {
    AccuracyMatrix m(2);
    m.set(0, 0, 0.9);
    m.set(1, 0, 0.6);
    m.set(1, 1, 0.8);
    CHECK(bti(m) == -15.0);

    AccuracyMatrix none(3);
    for (std::size_t j = 0; j < 3; ++j) {
        none.set(j, j, 0.5);
        none.set(2, j, 0.5);
    }
    CHECK(bti(none) == 0.0);
}

TEST_CASE("bti: improving final row gives positive transfer") {
    AccuracyMatrix m(2);
    m.set(0, 0, 0.5);
    m.set(1, 0, 0.7);
    m.set(1, 1, 0.8);
    CHECK(bti(m) > 0.0);
    AccuracyMatrix missing(2);
    missing.set(1, 0, 0.5);
    missing.set(1, 1, 0.5);
    CHECK_THROWS_AS(bti(missing), MetricError);  // diagonal hole
}

TEST_CASE("ra/bti match brute-force recomputation on random matrices") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t T = 2 + seed % 7;
        const AccuracyMatrix m = lower_filled(T, seed);
        double ra = 0.0, b = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
            ra += m.get(T - 1, j) * 100.0;
            b += m.get(T - 1, j) * 100.0 - m.get(j, j) * 100.0;
        }
        CHECK(retained_accuracy(m) == ra / double(T));
        CHECK(bti(m) == b / double(T));
    }
}

TEST_CASE("ra/bti are invariant under consistent task relabeling") {
    const std::size_t T = 5;
    Rng rng(9);
    AccuracyMatrix m(T);
    for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = 0; j < T; ++j) m.set(i, j, rng.uniform());
    }
    // relabel tasks 0..T-2 by reversal (the last label stays put: its
    // just-learned and end-of-training entries share one cell). Final-row
    // entries and diagonal entries travel with their task.
    const auto perm = [T](std::size_t j) { return j == T - 1 ? j : T - 2 - j; };
    AccuracyMatrix p(T);
    for (std::size_t j = 0; j < T; ++j) {
        p.set(T - 1, perm(j), m.get(T - 1, j));
        if (j != T - 1) p.set(perm(j), perm(j), m.get(j, j));
    }
    CHECK(retained_accuracy(p) == doctest::Approx(retained_accuracy(m)).epsilon(1e-12));
    CHECK(bti(p) == doctest::Approx(bti(m)).epsilon(1e-12));
}

TEST_CASE("metric ranges") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const AccuracyMatrix m = lower_filled(3, seed);
        const double ra = retained_accuracy(m);
        const double b = bti(m);
        CHECK(ra >= 0.0);
        CHECK(ra <= 100.0);
        CHECK(b >= -100.0);
        CHECK(b <= 100.0);
    }
}

TEST_CASE("evaluate_row matches a per-example loop and flags empty test sets") {
    TaskStream s = make_synthetic(3, 50, 5, 3, 21, 40);
    AlgorithmConfig cfg;
    cfg.variant = Variant::sgd;
    const Learner l(cfg, init_params(3, {5, 8, 3}), 2);
    const std::vector<double> row = evaluate_row(l, s);
    REQUIRE(row.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        std::size_t correct = 0;
        for (const Example& e : s.tasks[t].test) {
            if (l.predict(e.input) == e.label) ++correct;
        }
        CHECK(row[t] == double(correct) / double(s.tasks[t].test.size()));
    }
    s.tasks[1].test.clear();
    CHECK_THROWS_AS(evaluate_row(l, s), MetricError);
}

TEST_CASE("alpha stats") {
    ParameterSet a({2, 2});
    a.layers[0].weight = Tensor({2, 2}, {0.1, 0.4, -0.2, 0.3});
    a.layers[0].bias = Tensor({2}, {0.0, 0.0});
    const AlphaStats s = alpha_stats(a);
    CHECK(s.min == -0.2);
    CHECK(s.max == 0.4);
    CHECK(s.mean == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("run record: json round-trip") {
    RunRecord r = record_with_ra(0.75, 1.5, 42);
    r.clock_resolution_ns = 1.0;
    r.alpha_per_task = {{-0.1, 0.2, 0.5}};
    const RunRecord back = RunRecord::from_json(r.to_json());
    CHECK(back.config_hash == "abc");
    CHECK(back.seed == 42);
    CHECK(back.matrix == r.matrix);
    CHECK(back.total_seconds == 1.5);
    CHECK_FALSE(back.diverged);
    REQUIRE(back.alpha_per_task.size() == 1);
    CHECK(back.alpha_per_task[0].mean == 0.2);
    CHECK(r.to_json().at("schema") == "clrun.run_record.v1");
}

TEST_CASE("run record: divergence fields survive round-trip") {
    RunRecord r = record_with_ra(0.5, 1.0, 7, true);
    r.divergence_task = 2;
    r.divergence_step = 14;
    const RunRecord back = RunRecord::from_json(r.to_json());
    CHECK(back.diverged);
    CHECK(back.divergence_task == 2);
    CHECK(back.divergence_step == 14);
}

TEST_CASE("json_without_timing strips only the wall-clock fields") {
    const RunRecord r = record_with_ra(0.5, 3.0, 7);
    const nlohmann::json j = r.json_without_timing();
    CHECK_FALSE(j.contains("task_seconds"));
    CHECK_FALSE(j.contains("total_seconds"));
    CHECK_FALSE(j.contains("clock_resolution_ns"));
    CHECK(j.contains("accuracy_matrix"));
    CHECK(j.contains("config_hash"));
}

TEST_CASE("aggregate: hand arithmetic with n-1 denominator") {
    const std::vector<RunRecord> recs = {record_with_ra(0.70, 10.0, 1),
                                         record_with_ra(0.74, 12.0, 2)};
    const Summary s = aggregate(recs);
    CHECK(s.n == 2);
    CHECK(s.divergent == 0);
    CHECK(s.ra_mean == doctest::Approx(72.0).epsilon(1e-12));
    CHECK(s.ra_std == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
    CHECK(s.seconds_mean == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("aggregate: repeated value has zero spread; single record allowed") {
    const Summary s = aggregate({record_with_ra(0.6, 1.0, 1),
                                 record_with_ra(0.6, 1.0, 2),
                                 record_with_ra(0.6, 1.0, 3)});
    CHECK(s.ra_mean == 60.0);
    CHECK(s.ra_std == 0.0);
    const Summary one = aggregate({record_with_ra(0.6, 1.0, 1)});
    CHECK(one.n == 1);
    CHECK(one.ra_std == 0.0);
}

TEST_CASE("aggregate: divergent runs are excluded but counted") {
    const Summary s = aggregate({record_with_ra(0.70, 1.0, 1),
                                 record_with_ra(0.80, 1.0, 2),
                                 record_with_ra(0.90, 1.0, 3),
                                 record_with_ra(0.10, 1.0, 4, true)});
    CHECK(s.n == 3);
    CHECK(s.divergent == 1);
    CHECK(s.ra_mean == doctest::Approx(80.0).epsilon(1e-12));
}

TEST_CASE("aggregate: mixed configs are rejected; empty list is an error") {
    RunRecord other = record_with_ra(0.5, 1.0, 5);
    other.config_hash = "zzz";
    CHECK_THROWS_AS(aggregate({record_with_ra(0.5, 1.0, 1), other}), MetricError);
    CHECK_THROWS_AS(aggregate({}), MetricError);
}
