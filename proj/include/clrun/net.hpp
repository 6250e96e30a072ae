#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "clrun/tensor.hpp"

namespace clrun {

struct LayerParams {
    Tensor weight;  // out x in
    Tensor bias;    // out

    bool operator==(const LayerParams&) const = default;
};

// All weights and biases of the ReLU MLP classifier, flat-indexable. Layer k's
// input width must equal layer k-1's output width. The flat index runs over
// layer 0's weights (row-major), then its biases, then layer 1, and so on.
class ParameterSet {
public:
    ParameterSet() = default;
    explicit ParameterSet(const std::vector<std::size_t>& dims);  // zero-filled

    std::vector<LayerParams> layers;

    std::size_t total_count() const;
    std::vector<std::size_t> dims() const;

    double flat_get(std::size_t i) const;
    void flat_set(std::size_t i, double v);

    void fill(double v);
    bool congruent(const ParameterSet& o) const;

    bool operator==(const ParameterSet&) const = default;
};

// Shape-congruent to a ParameterSet; holds per-parameter partials (or, in the
// learners, per-parameter learning rates).
using GradientSet = ParameterSet;

// Glorot-uniform weights, zero biases. Bitwise-reproducible for equal seed.
ParameterSet init_params(std::uint64_t seed, const std::vector<std::size_t>& dims);

// Logits for a batch: ReLU between hidden layers, affine output.
Tensor forward(const ParameterSet& params, const Tensor& x);

// Mean over the batch of -log softmax(logits)[label], max-subtracted for
// stability. Labels must lie in [0, C).
double cross_entropy(const Tensor& logits, const std::vector<int>& labels);

struct BackwardResult {
    double loss;
    GradientSet grads;
};

// Exact reverse-mode partials of cross_entropy(forward(params, x), labels)
// with respect to every parameter.
BackwardResult backward(const ParameterSet& params, const Tensor& x,
                        const std::vector<int>& labels);

// Central-difference gradient oracle: (L(p + eps e_i) - L(p - eps e_i)) / 2eps.
GradientSet finite_diff_grad(const ParameterSet& params, const Tensor& x,
                             const std::vector<int>& labels, double eps = 1e-5);

// theta_i - scale * g_i
ParameterSet axpy_params(const ParameterSet& p, double scale, const GradientSet& g);
// theta_i - alpha_i * g_i, per-parameter step sizes
ParameterSet axpy_params(const ParameterSet& p, const ParameterSet& alpha,
                         const GradientSet& g);

}  // namespace clrun
