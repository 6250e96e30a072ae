#include <cmath>
#include <cstdio>

#include "clrun/harness.hpp"
#include "clrun/rng.hpp"

namespace clrun {

namespace {

// Relative error with a floor at 1e-3 of the gradient scale, so coordinates
// whose true partial is negligible are judged against the gradient's
// magnitude instead of amplified finite-difference noise.
double max_rel_error(const GradientSet& a, const GradientSet& b) {
    double gmax = 0.0;
    const std::size_t n = a.total_count();
    for (std::size_t i = 0; i < n; ++i) {
        gmax = std::max(gmax, std::abs(a.flat_get(i)));
        gmax = std::max(gmax, std::abs(b.flat_get(i)));
    }
    const double floor = std::max(1e-3 * gmax, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a.flat_get(i);
        const double y = b.flat_get(i);
        const double denom = std::max({std::abs(x), std::abs(y), floor});
        worst = std::max(worst, std::abs(x - y) / denom);
    }
    return worst;
}

// Draws a random (network, batch) gradient-check case. Central differences
// are only valid away from ReLU kinks, so cases where any pre-activation
// lands within the safety margin of zero are redrawn.
struct CheckCase {
    ParameterSet params;
    Tensor x;
    std::vector<int> labels;
};

bool preactivations_clear_of_kinks(const ParameterSet& params, const Tensor& x,
                                   double margin) {
    const std::size_t batch = x.rows();
    Tensor act = x;
    for (std::size_t k = 0; k + 1 < params.layers.size(); ++k) {
        const auto& l = params.layers[k];
        const std::size_t in = l.weight.cols();
        const std::size_t out = l.weight.rows();
        Tensor next({batch, out});
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t o = 0; o < out; ++o) {
                double s = l.bias[o];
                for (std::size_t i = 0; i < in; ++i) {
                    s += l.weight.at(o, i) * act.at(b, i);
                }
                if (std::abs(s) < margin) return false;
                next.at(b, o) = std::max(0.0, s);
            }
        }
        act = std::move(next);
    }
    return true;
}

CheckCase draw_case(Rng& rng, std::size_t max_in, std::size_t max_hidden,
                    std::size_t max_out, std::size_t max_batch) {
    for (;;) {
        const std::size_t in = 2 + rng.below(max_in - 1);
        const std::size_t hidden = 2 + rng.below(max_hidden - 1);
        const std::size_t out = 2 + rng.below(max_out - 1);
        const std::size_t batch = 1 + rng.below(max_batch);
        CheckCase c;
        c.params = init_params(rng.next_u64(), {in, hidden, out});
        c.x = Tensor({batch, in});
        for (double& v : c.x.values()) v = rng.uniform();
        for (std::size_t b = 0; b < batch; ++b) {
            c.labels.push_back(int(rng.below(out)));
        }
        if (preactivations_clear_of_kinks(c.params, c.x, 1e-4)) return c;
    }
}

}  // namespace

double gradient_check_worst_error(std::size_t cases, std::uint64_t seed,
                                  std::size_t max_in, std::size_t max_hidden,
                                  std::size_t max_out, std::size_t max_batch) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t n = 0; n < cases; ++n) {
        const CheckCase c = draw_case(rng, max_in, max_hidden, max_out, max_batch);
        const GradientSet analytic = backward(c.params, c.x, c.labels).grads;
        const GradientSet numeric = finite_diff_grad(c.params, c.x, c.labels, 1e-5);
        worst = std::max(worst, max_rel_error(analytic, numeric));
    }
    return worst;
}

bool reservoir_inclusion_ok(std::size_t capacity, std::size_t stream_len,
                            std::size_t trials, std::uint64_t seed,
                            double* observed) {
    // empirical inclusion frequency of the first stream item vs M/N
    std::size_t included = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        ReplayBuffer buf(capacity, derive_seed(seed, "trial" + std::to_string(t)));
        Example e;
        e.input = Tensor({1});
        for (std::size_t i = 0; i < stream_len; ++i) {
            e.source_index = int(i);
            buf.insert(e);
        }
        for (const Example& item : buf.items()) {
            if (item.source_index == 0) {
                ++included;
                break;
            }
        }
    }
    const double p = double(capacity) / double(stream_len);
    const double phat = double(included) / double(trials);
    const double sigma = std::sqrt(p * (1.0 - p) / double(trials));
    if (observed) *observed = phat;
    return std::abs(phat - p) <= 3.0 * sigma;
}

namespace {

bool metric_oracles_ok() {
    // hand fixtures
    {
        AccuracyMatrix m(2);
        m.set(0, 0, 0.9);
        m.set(1, 0, 0.6);
        m.set(1, 1, 0.8);
        if (retained_accuracy(m) != 70.0) return false;
        if (bti(m) != -15.0) return false;
    }
    // random matrices against a brute-force recomputation
    Rng rng(20240817);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t T = 1 + rng.below(12);
        AccuracyMatrix m(T);
        for (std::size_t i = 0; i < T; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                m.set(i, j, rng.uniform());
            }
        }
        double ra_ref = 0.0;
        for (std::size_t j = 0; j < T; ++j) ra_ref += m.get(T - 1, j) * 100.0;
        ra_ref /= double(T);
        double bti_ref = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
            bti_ref += m.get(T - 1, j) * 100.0 - m.get(j, j) * 100.0;
        }
        bti_ref /= double(T);
        if (retained_accuracy(m) != ra_ref) return false;
        if (bti(m) != bti_ref) return false;
    }
    return true;
}

}  // namespace

int selftest(bool verbose) {
    int failures = 0;
    const auto report = [&](const char* name, bool ok, double detail) {
        if (!ok) ++failures;
        if (verbose) {
            std::printf("[%s] %s (%.3g)\n", ok ? "PASS" : "FAIL", name, detail);
        }
    };

    {
        Stopwatch sw;
        const double worst = gradient_check_worst_error(100, 20240811, 784, 32, 10, 8);
        report("gradient check: backward vs central differences, 100 cases",
               worst < 1e-5, worst);
        if (verbose) std::printf("       (%.1f s)\n", sw.seconds());
    }
    {
        double p1 = 0.0, p2 = 0.0;
        const bool ok1 = reservoir_inclusion_ok(10, 100, 100000, 7, &p1);
        const bool ok2 = reservoir_inclusion_ok(50, 1000, 100000, 11, &p2);
        report("reservoir inclusion M/N = 10/100", ok1, p1);
        report("reservoir inclusion M/N = 50/1000", ok2, p2);
    }
    report("metric oracles: RA/BTI fixtures and brute force",
           metric_oracles_ok(), 0.0);
    return failures == 0 ? 0 : 1;
}

}  // namespace clrun
