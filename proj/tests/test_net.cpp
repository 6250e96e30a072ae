#include <cmath>

#include "doctest.h"

#include "clrun/net.hpp"
#include "clrun/rng.hpp"

using namespace clrun;

namespace {

Tensor random_input(std::size_t batch, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Tensor x({batch, dim});
    for (double& v : x.values()) v = rng.uniform();
    return x;
}

std::vector<int> random_labels(std::size_t batch, std::size_t classes,
                               std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> y;
    for (std::size_t i = 0; i < batch; ++i) y.push_back(int(rng.below(classes)));
    return y;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace

TEST_CASE("init_params: default architecture parameter count") {
    const ParameterSet p = init_params(7, {784, 100, 100, 10});
    CHECK(p.total_count() == 89610);  // 784*100+100 + 100*100+100 + 100*10+10
    CHECK(p.layers.size() == 3);
}

TEST_CASE("init_params: biases start at exactly zero") {
    const ParameterSet p = init_params(7, {2, 2});
    CHECK(p.layers[0].bias[0] == 0.0);
    CHECK(p.layers[0].bias[1] == 0.0);
}

TEST_CASE("init_params: same seed gives identical parameters") {
    const ParameterSet a = init_params(42, {20, 16, 5});
    const ParameterSet b = init_params(42, {20, 16, 5});
    CHECK(a == b);
    const ParameterSet c = init_params(43, {20, 16, 5});
    CHECK(a != c);
}

TEST_CASE("init_params: weights stay inside the Glorot bound") {
    const ParameterSet p = init_params(3, {50, 30, 10});
    const double bound0 = std::sqrt(6.0 / (50 + 30));
    for (const double w : p.layers[0].weight.values()) {
        CHECK(std::abs(w) <= bound0);
    }
}

TEST_CASE("init_params: degenerate dims rejected") {
    CHECK_THROWS_AS(init_params(1, {784}), ConfigError);
    CHECK_THROWS_AS(init_params(1, {}), ConfigError);
    CHECK_THROWS_AS(init_params(1, {10, 0, 5}), ConfigError);
}

TEST_CASE("forward: all-zero parameters give all-zero logits") {
    const ParameterSet p({5, 4, 3});
    const Tensor x = random_input(2, 5, 1);
    const Tensor logits = forward(p, x);
    for (const double v : logits.values()) CHECK(v == 0.0);
}

TEST_CASE("forward: identity single layer passes inputs through") {
    ParameterSet p({2, 2});
    p.layers[0].weight.at(0, 0) = 1.0;
    p.layers[0].weight.at(1, 1) = 1.0;
    const Tensor x({1, 2}, {3.0, -1.0});
    const Tensor logits = forward(p, x);
    CHECK(logits[0] == 3.0);
    CHECK(logits[1] == -1.0);
}

TEST_CASE("forward: matches an independent scalar-loop evaluation") {
    const std::vector<std::size_t> dims = {6, 5, 4};
    const ParameterSet p = init_params(9, dims);
    const Tensor x = random_input(3, 6, 2);
    const Tensor logits = forward(p, x);

    for (std::size_t b = 0; b < 3; ++b) {
        // reference evaluation, one scalar at a time
        std::vector<double> h(5);
        for (std::size_t o = 0; o < 5; ++o) {
            double s = p.layers[0].bias[o];
            for (std::size_t i = 0; i < 6; ++i) {
                s += p.layers[0].weight.at(o, i) * x.at(b, i);
            }
            h[o] = s > 0 ? s : 0.0;
        }
        for (std::size_t o = 0; o < 4; ++o) {
            double s = p.layers[1].bias[o];
            for (std::size_t i = 0; i < 5; ++i) {
                s += p.layers[1].weight.at(o, i) * h[i];
            }
            CHECK(logits.at(b, o) == doctest::Approx(s).epsilon(1e-14));
        }
    }
}

TEST_CASE("forward: shape mismatch throws") {
    const ParameterSet p = init_params(1, {5, 3});
    CHECK_THROWS_AS(forward(p, random_input(2, 4, 1)), ShapeError);
}

TEST_CASE("cross_entropy: uniform logits give ln C") {
    const Tensor logits({2, 10});
    const double loss = cross_entropy(logits, {3, 7});
    CHECK(loss == doctest::Approx(std::log(10.0)).epsilon(1e-15));
}

TEST_CASE("cross_entropy: saturated correct logit drives loss to zero") {
    Tensor logits({1, 3});
    logits[1] = 50.0;
    CHECK(cross_entropy(logits, {1}) < 1e-20);
}

TEST_CASE("cross_entropy: matches naive softmax in extended precision") {
    Rng rng(5);
    Tensor logits({3, 4});
    for (double& v : logits.values()) v = rng.uniform(-4.0, 4.0);
    const std::vector<int> labels = {1, 0, 3};

    long double total = 0.0L;
    for (std::size_t b = 0; b < 3; ++b) {
        long double z = 0.0L;
        for (std::size_t c = 0; c < 4; ++c) {
            z += expl(static_cast<long double>(logits.at(b, c)));
        }
        const long double prob =
            expl(static_cast<long double>(logits.at(b, labels[b]))) / z;
        total += -logl(prob);
    }
    const double expected = static_cast<double>(total / 3.0L);
    CHECK(cross_entropy(logits, labels) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("cross_entropy: loss is non-negative") {
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor logits({2, 5});
        for (double& v : logits.values()) v = rng.uniform(-10.0, 10.0);
        CHECK(cross_entropy(logits, {int(rng.below(5)), int(rng.below(5))}) >= 0.0);
    }
}

TEST_CASE("cross_entropy: internal softmax rows normalize to one") {
    // probed through the gradient: at the output, d loss / d logit sums to 0
    // per row exactly when the probabilities sum to 1
    const ParameterSet p = init_params(3, {4, 6, 5});
    const Tensor x = random_input(4, 4, 8);
    const auto res = backward(p, x, random_labels(4, 5, 9));
    double bias_grad_sum = 0.0;
    for (const double g : res.grads.layers.back().bias.values()) {
        bias_grad_sum += g;
    }
    CHECK(std::abs(bias_grad_sum) < 1e-12);
}

TEST_CASE("cross_entropy: out-of-range label throws") {
    const Tensor logits({1, 3});
    CHECK_THROWS_AS(cross_entropy(logits, {3}), ConfigError);
    CHECK_THROWS_AS(cross_entropy(logits, {-1}), ConfigError);
}

TEST_CASE("backward: zero input kills first-layer weight gradients") {
    const ParameterSet p = init_params(2, {5, 4, 3});
    const Tensor x({2, 5});  // all zeros
    const auto res = backward(p, x, {0, 1});
    for (const double g : res.grads.layers[0].weight.values()) {
        CHECK(g == 0.0);
    }
}

TEST_CASE("backward: duplicated batch rows leave the mean gradient unchanged") {
    const ParameterSet p = init_params(4, {6, 5, 3});
    const Tensor one = random_input(1, 6, 3);
    Tensor twice({2, 6});
    for (std::size_t d = 0; d < 6; ++d) {
        twice.at(0, d) = one.at(0, d);
        twice.at(1, d) = one.at(0, d);
    }
    const auto a = backward(p, one, {2});
    const auto b = backward(p, twice, {2, 2});
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-15));
    for (std::size_t i = 0; i < a.grads.total_count(); ++i) {
        CHECK(a.grads.flat_get(i) == doctest::Approx(b.grads.flat_get(i)).epsilon(1e-13));
    }
}

TEST_CASE("backward agrees with finite differences on random networks") {
    Rng meta(100);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t in = 2 + meta.below(8);
        const std::size_t hidden = 2 + meta.below(12);
        const std::size_t out = 2 + meta.below(6);
        const std::size_t batch = 1 + meta.below(4);
        const ParameterSet p = init_params(meta.next_u64(), {in, hidden, out});
        const Tensor x = random_input(batch, in, meta.next_u64());
        const auto labels = random_labels(batch, out, meta.next_u64());
        const auto res = backward(p, x, labels);
        const GradientSet fd = finite_diff_grad(p, x, labels, 1e-5);
        for (std::size_t i = 0; i < fd.total_count(); ++i) {
            const double a = res.grads.flat_get(i);
            const double b = fd.flat_get(i);
            CHECK(std::abs(a - b) < 1e-7 + 1e-5 * std::max(std::abs(a), std::abs(b)));
        }
    }
}

TEST_CASE("finite_diff_grad: matches the analytic softmax-regression gradient") {
    // single linear layer: d loss / d W[c][i] = (softmax_c - [c == y]) * x_i / n
    const std::size_t in = 4, out = 3;
    const ParameterSet p = init_params(11, {in, out});
    const Tensor x = random_input(2, in, 12);
    const std::vector<int> labels = {2, 0};

    const Tensor logits = forward(p, x);
    GradientSet analytic(std::vector<std::size_t>{in, out});
    for (std::size_t b = 0; b < 2; ++b) {
        double z = 0.0;
        for (std::size_t c = 0; c < out; ++c) z += std::exp(logits.at(b, c));
        for (std::size_t c = 0; c < out; ++c) {
            const double d =
                (std::exp(logits.at(b, c)) / z - (int(c) == labels[b] ? 1.0 : 0.0)) /
                2.0;
            for (std::size_t i = 0; i < in; ++i) {
                analytic.layers[0].weight.at(c, i) += d * x.at(b, i);
            }
            analytic.layers[0].bias[c] += d;
        }
    }
    const GradientSet fd = finite_diff_grad(p, x, labels, 1e-6);
    for (std::size_t i = 0; i < fd.total_count(); ++i) {
        CHECK(fd.flat_get(i) ==
              doctest::Approx(analytic.flat_get(i)).epsilon(1e-7));
    }
}

TEST_CASE("finite_diff_grad: halving eps shrinks the discrepancy quadratically") {
    const ParameterSet p = init_params(21, {5, 6, 4});
    const Tensor x = random_input(3, 5, 22);
    const auto labels = random_labels(3, 4, 23);
    const GradientSet exact = backward(p, x, labels).grads;

    const auto max_diff = [&](double eps) {
        const GradientSet fd = finite_diff_grad(p, x, labels, eps);
        double worst = 0.0;
        for (std::size_t i = 0; i < fd.total_count(); ++i) {
            worst = std::max(worst, std::abs(fd.flat_get(i) - exact.flat_get(i)));
        }
        return worst;
    };
    const double coarse = max_diff(1e-2);
    const double fine = max_diff(5e-3);
    // O(eps^2) truncation: 2x smaller eps, ~4x smaller error
    CHECK(fine < coarse / 3.0);
}

TEST_CASE("finite_diff_grad: rejects non-positive eps") {
    const ParameterSet p = init_params(1, {3, 2});
    CHECK_THROWS_AS(finite_diff_grad(p, random_input(1, 3, 1), {0}, 0.0),
                    ConfigError);
}

TEST_CASE("axpy_params: zero gradient and zero scale are fixed points") {
    const ParameterSet p = init_params(31, {4, 3});
    const GradientSet zero(std::vector<std::size_t>{4, 3});
    CHECK(axpy_params(p, 0.5, zero) == p);

    GradientSet g = zero;
    g.layers[0].weight.at(0, 0) = 2.0;
    CHECK(axpy_params(p, 0.0, g) == p);
}

TEST_CASE("axpy_params: hand-computed per-parameter step") {
    ParameterSet p({1, 2});
    p.layers[0].bias[0] = 1.0;
    p.layers[0].bias[1] = 2.0;
    ParameterSet alpha({1, 2});
    alpha.layers[0].bias[0] = 0.5;
    alpha.layers[0].bias[1] = 2.0;
    GradientSet g({1, 2});
    g.layers[0].bias[0] = 2.0;
    g.layers[0].bias[1] = 1.0;
    const ParameterSet out = axpy_params(p, alpha, g);
    CHECK(out.layers[0].bias[0] == 0.0);
    CHECK(out.layers[0].bias[1] == 0.0);
}

TEST_CASE("axpy_params: shape mismatch throws") {
    const ParameterSet p = init_params(1, {4, 3});
    const GradientSet g(std::vector<std::size_t>{4, 2});
    CHECK_THROWS_AS(axpy_params(p, 0.1, g), ShapeError);
}

TEST_CASE("forward and backward keep finite values on finite inputs") {
    const ParameterSet p = init_params(55, {10, 8, 6});
    const Tensor x = random_input(4, 10, 56);
    CHECK(forward(p, x).all_finite());
    const auto res = backward(p, x, random_labels(4, 6, 57));
    CHECK(std::isfinite(res.loss));
    for (const auto& l : res.grads.layers) {
        CHECK(l.weight.all_finite());
        CHECK(l.bias.all_finite());
    }
}

TEST_CASE("flat index mapping is a bijection") {
    ParameterSet p = init_params(61, {3, 4, 2});
    const std::size_t n = p.total_count();
    CHECK(n == 3 * 4 + 4 + 4 * 2 + 2);
    for (std::size_t i = 0; i < n; ++i) p.flat_set(i, double(i));
    for (std::size_t i = 0; i < n; ++i) CHECK(p.flat_get(i) == double(i));
    CHECK_THROWS_AS(p.flat_get(n), ShapeError);
}
