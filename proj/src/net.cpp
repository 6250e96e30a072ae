#include "clrun/net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clrun/rng.hpp"

namespace clrun {

ParameterSet::ParameterSet(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) {
        throw ConfigError("network needs at least input and output dims");
    }
    for (const std::size_t d : dims) {
        if (d < 1) throw ConfigError("network dims must all be >= 1");
    }
    layers.reserve(dims.size() - 1);
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        layers.push_back({Tensor({dims[k + 1], dims[k]}), Tensor({dims[k + 1]})});
    }
}

std::size_t ParameterSet::total_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<std::size_t> ParameterSet::dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(layers.front().weight.cols());
    for (const auto& l : layers) d.push_back(l.weight.rows());
    return d;
}

double ParameterSet::flat_get(std::size_t i) const {
    for (const auto& l : layers) {
        if (i < l.weight.size()) return l.weight[i];
        i -= l.weight.size();
        if (i < l.bias.size()) return l.bias[i];
        i -= l.bias.size();
    }
    throw ShapeError("flat index out of range");
}

void ParameterSet::flat_set(std::size_t i, double v) {
    for (auto& l : layers) {
        if (i < l.weight.size()) {
            l.weight[i] = v;
            return;
        }
        i -= l.weight.size();
        if (i < l.bias.size()) {
            l.bias[i] = v;
            return;
        }
        i -= l.bias.size();
    }
    throw ShapeError("flat index out of range");
}

void ParameterSet::fill(double v) {
    for (auto& l : layers) {
        std::fill(l.weight.values().begin(), l.weight.values().end(), v);
        std::fill(l.bias.values().begin(), l.bias.values().end(), v);
    }
}

bool ParameterSet::congruent(const ParameterSet& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (!layers[k].weight.same_shape(o.layers[k].weight)) return false;
        if (!layers[k].bias.same_shape(o.layers[k].bias)) return false;
    }
    return true;
}

ParameterSet init_params(std::uint64_t seed, const std::vector<std::size_t>& dims) {
    ParameterSet p(dims);
    Rng rng(seed);
    for (auto& l : p.layers) {
        const double fan_in = static_cast<double>(l.weight.cols());
        const double fan_out = static_cast<double>(l.weight.rows());
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : l.weight.values()) w = rng.uniform(-bound, bound);
        // biases stay zero
    }
    return p;
}

Tensor forward(const ParameterSet& params, const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("forward expects a batch x in tensor");
    if (params.layers.empty()) throw ShapeError("forward on an empty network");
    if (x.cols() != params.layers.front().weight.cols()) {
        throw ShapeError("input width " + std::to_string(x.cols()) +
                         " does not match first layer in-dim " +
                         std::to_string(params.layers.front().weight.cols()));
    }
    const std::size_t batch = x.rows();
    Tensor act = x;
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        const auto& l = params.layers[k];
        const std::size_t in = l.weight.cols();
        const std::size_t out = l.weight.rows();
        Tensor next({batch, out});
        for (std::size_t b = 0; b < batch; ++b) {
            const double* xrow = act.data() + b * in;
            double* yrow = next.data() + b * out;
            for (std::size_t o = 0; o < out; ++o) {
                const double* wrow = l.weight.data() + o * in;
                double s = l.bias[o];
                for (std::size_t i = 0; i < in; ++i) s += wrow[i] * xrow[i];
                yrow[o] = s;
            }
        }
        if (k + 1 < params.layers.size()) {
            for (double& v : next.values()) v = std::max(0.0, v);
        }
        act = std::move(next);
    }
    return act;
}

double cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t batch = logits.rows();
    const std::size_t classes = logits.cols();
    if (labels.size() != batch) {
        throw ShapeError("label count does not match batch size");
    }
    double total = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw ConfigError("label " + std::to_string(y) + " outside [0, " +
                              std::to_string(classes) + ")");
        }
        const double* row = logits.data() + b * classes;
        double mx = row[0];
        for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
        total += std::log(z) - (row[y] - mx);
    }
    return total / static_cast<double>(batch);
}

BackwardResult backward(const ParameterSet& params, const Tensor& x,
                        const std::vector<int>& labels) {
    const std::size_t batch = x.rows();
    const std::size_t n_layers = params.layers.size();

    // forward pass, keeping post-activation values per layer
    std::vector<Tensor> acts;
    acts.reserve(n_layers + 1);
    acts.push_back(x);
    if (params.layers.empty() || x.cols() != params.layers.front().weight.cols()) {
        throw ShapeError("backward: input width does not match first layer");
    }
    for (std::size_t k = 0; k < n_layers; ++k) {
        const auto& l = params.layers[k];
        const std::size_t in = l.weight.cols();
        const std::size_t out = l.weight.rows();
        Tensor next({batch, out});
        for (std::size_t b = 0; b < batch; ++b) {
            const double* xrow = acts.back().data() + b * in;
            double* yrow = next.data() + b * out;
            for (std::size_t o = 0; o < out; ++o) {
                const double* wrow = l.weight.data() + o * in;
                double s = l.bias[o];
                for (std::size_t i = 0; i < in; ++i) s += wrow[i] * xrow[i];
                yrow[o] = s;
            }
        }
        if (k + 1 < n_layers) {
            for (double& v : next.values()) v = std::max(0.0, v);
        }
        acts.push_back(std::move(next));
    }

    const Tensor& logits = acts.back();
    const std::size_t classes = logits.cols();
    const double loss = cross_entropy(logits, labels);

    // delta at the output: (softmax - onehot) / batch, mean reduction
    Tensor delta({batch, classes});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* row = logits.data() + b * classes;
        double mx = row[0];
        for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
        double* drow = delta.data() + b * classes;
        for (std::size_t c = 0; c < classes; ++c) {
            drow[c] = std::exp(row[c] - mx) / z / static_cast<double>(batch);
        }
        drow[labels[b]] -= 1.0 / static_cast<double>(batch);
    }

    GradientSet grads(params.dims());
    for (std::size_t k = n_layers; k-- > 0;) {
        const auto& l = params.layers[k];
        auto& g = grads.layers[k];
        const std::size_t in = l.weight.cols();
        const std::size_t out = l.weight.rows();
        const Tensor& input = acts[k];
        for (std::size_t b = 0; b < batch; ++b) {
            const double* drow = delta.data() + b * out;
            const double* xrow = input.data() + b * in;
            for (std::size_t o = 0; o < out; ++o) {
                const double d = drow[o];
                if (d == 0.0) continue;
                double* grow = g.weight.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) grow[i] += d * xrow[i];
                g.bias[o] += d;
            }
        }
        if (k > 0) {
            // propagate through W and the ReLU of the previous layer
            Tensor prev_delta({batch, in});
            for (std::size_t b = 0; b < batch; ++b) {
                const double* drow = delta.data() + b * out;
                const double* xrow = input.data() + b * in;
                double* prow = prev_delta.data() + b * in;
                for (std::size_t o = 0; o < out; ++o) {
                    const double d = drow[o];
                    if (d == 0.0) continue;
                    const double* wrow = l.weight.data() + o * in;
                    for (std::size_t i = 0; i < in; ++i) prow[i] += d * wrow[i];
                }
                for (std::size_t i = 0; i < in; ++i) {
                    if (xrow[i] <= 0.0) prow[i] = 0.0;
                }
            }
            delta = std::move(prev_delta);
        }
    }
    return {loss, std::move(grads)};
}

GradientSet finite_diff_grad(const ParameterSet& params, const Tensor& x,
                             const std::vector<int>& labels, double eps) {
    if (eps <= 0.0) throw ConfigError("finite_diff_grad needs eps > 0");
    if (params.layers.empty() || x.rank() != 2 ||
        x.cols() != params.layers.front().weight.cols()) {
        throw ShapeError("finite_diff_grad: input does not match the network");
    }
    const std::size_t batch = x.rows();
    const std::size_t n_layers = params.layers.size();

    // Cache pre- and post-activations once; a perturbed parameter in layer l
    // only shifts that layer's unit o, so each probe replaces one column and
    // re-runs the layers after l instead of the whole network.
    std::vector<Tensor> pre(n_layers);
    std::vector<Tensor> post(n_layers + 1);
    post[0] = x;
    for (std::size_t k = 0; k < n_layers; ++k) {
        const auto& l = params.layers[k];
        const std::size_t in = l.weight.cols();
        const std::size_t out = l.weight.rows();
        pre[k] = Tensor({batch, out});
        for (std::size_t b = 0; b < batch; ++b) {
            const double* xrow = post[k].data() + b * in;
            double* yrow = pre[k].data() + b * out;
            for (std::size_t o = 0; o < out; ++o) {
                const double* wrow = l.weight.data() + o * in;
                double s = l.bias[o];
                for (std::size_t i = 0; i < in; ++i) s += wrow[i] * xrow[i];
                yrow[o] = s;
            }
        }
        post[k + 1] = pre[k];
        if (k + 1 < n_layers) {
            for (double& v : post[k + 1].values()) v = std::max(0.0, v);
        }
    }

    // loss with layer l's post-activation column `unit` replaced by vals
    const auto tail_loss = [&](std::size_t l, std::size_t unit,
                               const std::vector<double>& vals) {
        Tensor act = post[l + 1];
        for (std::size_t b = 0; b < batch; ++b) {
            act.data()[b * act.cols() + unit] = vals[b];
        }
        for (std::size_t k = l + 1; k < n_layers; ++k) {
            const auto& lay = params.layers[k];
            const std::size_t in = lay.weight.cols();
            const std::size_t out = lay.weight.rows();
            Tensor next({batch, out});
            for (std::size_t b = 0; b < batch; ++b) {
                const double* xrow = act.data() + b * in;
                double* yrow = next.data() + b * out;
                for (std::size_t o = 0; o < out; ++o) {
                    const double* wrow = lay.weight.data() + o * in;
                    double s = lay.bias[o];
                    for (std::size_t i = 0; i < in; ++i) s += wrow[i] * xrow[i];
                    yrow[o] = s;
                }
            }
            if (k + 1 < n_layers) {
                for (double& v : next.values()) v = std::max(0.0, v);
            }
            act = std::move(next);
        }
        return cross_entropy(act, labels);
    };

    GradientSet g(params.dims());
    std::vector<double> up(batch), down(batch);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& lay = params.layers[l];
        const std::size_t in = lay.weight.cols();
        const std::size_t out = lay.weight.rows();
        const bool hidden = l + 1 < n_layers;
        const auto activate = [hidden](double z) {
            return hidden ? std::max(0.0, z) : z;
        };
        for (std::size_t o = 0; o < out; ++o) {
            for (std::size_t c = 0; c < in; ++c) {
                for (std::size_t b = 0; b < batch; ++b) {
                    const double z = pre[l].data()[b * out + o];
                    const double xin = post[l].data()[b * in + c];
                    up[b] = activate(z + eps * xin);
                    down[b] = activate(z - eps * xin);
                }
                g.layers[l].weight.data()[o * in + c] =
                    (tail_loss(l, o, up) - tail_loss(l, o, down)) / (2.0 * eps);
            }
            for (std::size_t b = 0; b < batch; ++b) {
                const double z = pre[l].data()[b * out + o];
                up[b] = activate(z + eps);
                down[b] = activate(z - eps);
            }
            g.layers[l].bias[o] =
                (tail_loss(l, o, up) - tail_loss(l, o, down)) / (2.0 * eps);
        }
    }
    return g;
}

ParameterSet axpy_params(const ParameterSet& p, double scale, const GradientSet& g) {
    if (!p.congruent(g)) throw ShapeError("axpy_params: shape mismatch");
    ParameterSet out = p;
    for (std::size_t k = 0; k < out.layers.size(); ++k) {
        auto& ol = out.layers[k];
        const auto& gl = g.layers[k];
        for (std::size_t i = 0; i < ol.weight.size(); ++i) {
            ol.weight[i] -= scale * gl.weight[i];
        }
        for (std::size_t i = 0; i < ol.bias.size(); ++i) {
            ol.bias[i] -= scale * gl.bias[i];
        }
    }
    return out;
}

ParameterSet axpy_params(const ParameterSet& p, const ParameterSet& alpha,
                         const GradientSet& g) {
    if (!p.congruent(g) || !p.congruent(alpha)) {
        throw ShapeError("axpy_params: shape mismatch");
    }
    ParameterSet out = p;
    for (std::size_t k = 0; k < out.layers.size(); ++k) {
        auto& ol = out.layers[k];
        const auto& al = alpha.layers[k];
        const auto& gl = g.layers[k];
        for (std::size_t i = 0; i < ol.weight.size(); ++i) {
            ol.weight[i] -= al.weight[i] * gl.weight[i];
        }
        for (std::size_t i = 0; i < ol.bias.size(); ++i) {
            ol.bias[i] -= al.bias[i] * gl.bias[i];
        }
    }
    return out;
}

}  // namespace clrun
