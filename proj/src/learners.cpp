#include "clrun/learners.hpp"

#include <algorithm>
#include <cmath>

namespace clrun {

Variant variant_from_string(const std::string& name) {
    if (name == "sgd") return Variant::sgd;
    if (name == "er") return Variant::er;
    if (name == "la_er") return Variant::la_er;
    if (name == "c_maml") return Variant::c_maml;
    if (name == "sync") return Variant::sync;
    if (name == "la_maml") return Variant::la_maml;
    throw ConfigError("unknown variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::sgd: return "sgd";
        case Variant::er: return "er";
        case Variant::la_er: return "la_er";
        case Variant::c_maml: return "c_maml";
        case Variant::sync: return "sync";
        case Variant::la_maml: return "la_maml";
    }
    return "?";
}

void AlgorithmConfig::validate() const {
    if (alpha0 <= 0.0) throw ConfigError("alpha0 must be > 0");
    if (beta <= 0.0) throw ConfigError("beta must be > 0");
    if (eta < 0.0) throw ConfigError("eta must be >= 0");
    if (glances < 1) throw ConfigError("glances must be >= 1");
}

bool AlgorithmConfig::uses_lr_state(Variant v) {
    return v == Variant::la_er || v == Variant::sync || v == Variant::la_maml;
}

bool AlgorithmConfig::uses_buffer(Variant v) { return v != Variant::sgd; }

Learner::Learner(AlgorithmConfig cfg, ParameterSet init, std::uint64_t seed)
    : cfg_(cfg),
      params_(std::move(init)),
      buffer_(cfg.buffer_capacity, derive_seed(seed, "replay")) {
    cfg_.validate();
    const bool needs_alpha = AlgorithmConfig::uses_lr_state(cfg_.variant) ||
                             cfg_.variant == Variant::c_maml;
    if (needs_alpha) {
        alpha_ = ParameterSet(params_.dims());
        alpha_->fill(cfg_.alpha0);
    }
}

const ParameterSet* Learner::alpha() const {
    if (!AlgorithmConfig::uses_lr_state(cfg_.variant)) return nullptr;
    return alpha_ ? &*alpha_ : nullptr;
}

std::pair<ParameterSet, GradientSet> Learner::inner_update(
    const ParameterSet& p, const ParameterSet& alpha, const Batch& batch) {
    if (batch.empty()) throw ConfigError("inner_update on an empty batch");
    auto [loss, grads] = backward(p, batch.x, batch.labels);
    if (!std::isfinite(loss)) throw DivergenceError("non-finite inner loss");
    return {axpy_params(p, alpha, grads), std::move(grads)};
}

std::pair<ParameterSet, GradientSet> Learner::inner_update(const ParameterSet& p,
                                                           double lr,
                                                           const Batch& batch) {
    if (batch.empty()) throw ConfigError("inner_update on an empty batch");
    auto [loss, grads] = backward(p, batch.x, batch.labels);
    if (!std::isfinite(loss)) throw DivergenceError("non-finite inner loss");
    return {axpy_params(p, lr, grads), std::move(grads)};
}

Batch Learner::build_meta_batch(const Batch& current, ReplayBuffer& buffer,
                                std::size_t k) {
    return current.concat(buffer.sample(k));
}

std::vector<Batch> Learner::split_inner(const Batch& batch) const {
    const std::size_t chunk =
        cfg_.inner_batch_size == 0 ? batch.size() : cfg_.inner_batch_size;
    std::vector<Batch> out;
    for (std::size_t start = 0; start < batch.size(); start += chunk) {
        out.push_back(batch.slice(start, std::min(batch.size(), start + chunk)));
    }
    return out;
}

void Learner::meta_step(const std::vector<Batch>& inner_batches,
                        const Batch& meta_batch) {
    if (inner_batches.empty()) throw ConfigError("meta_step needs inner batches");

    ParameterSet theta = params_;
    GradientSet inner_grad_sum(params_.dims());
    double meta_loss_sum = 0.0;
    std::size_t terms = 0;
    const std::size_t k = inner_batches.size();

    for (std::size_t j = 0; j < k; ++j) {
        auto [next, grad] = inner_update(theta, *alpha_, inner_batches[j]);
        theta = std::move(next);
        for (std::size_t l = 0; l < inner_grad_sum.layers.size(); ++l) {
            auto& acc = inner_grad_sum.layers[l];
            const auto& gl = grad.layers[l];
            for (std::size_t i = 0; i < acc.weight.size(); ++i) {
                acc.weight[i] += gl.weight[i];
            }
            for (std::size_t i = 0; i < acc.bias.size(); ++i) {
                acc.bias[i] += gl.bias[i];
            }
        }
        if (cfg_.meta_loss_at == MetaLossAt::every_step || j + 1 == k) {
            const double l = cross_entropy(forward(theta, meta_batch.x),
                                           meta_batch.labels);
            if (!std::isfinite(l)) {
                throw DivergenceError("non-finite meta-loss", int(j));
            }
            meta_loss_sum += l;
            ++terms;
        }
    }
    last_meta_loss_ = meta_loss_sum / double(terms);

    // Exact partial of the averaged meta-loss with respect to theta_k: only
    // the final accumulation term depends on theta_k, so it is the plain
    // gradient at theta_k scaled by 1/terms.
    auto [final_loss, g_final] = backward(theta, meta_batch.x, meta_batch.labels);
    if (!std::isfinite(final_loss)) {
        throw DivergenceError("non-finite meta-loss", int(k) - 1);
    }
    GradientSet g_meta = std::move(g_final);
    const double inv_terms = 1.0 / double(terms);
    for (auto& l : g_meta.layers) {
        for (double& v : l.weight.values()) v *= inv_terms;
        for (double& v : l.bias.values()) v *= inv_terms;
    }

    // first-order LR gradient: d(meta_loss)/d(alpha_i) ~= -g_meta_i * sum_j g_j,i
    if (cfg_.variant == Variant::sync || cfg_.variant == Variant::la_maml) {
        for (std::size_t l = 0; l < alpha_->layers.size(); ++l) {
            auto& al = alpha_->layers[l];
            const auto& gm = g_meta.layers[l];
            const auto& gs = inner_grad_sum.layers[l];
            for (std::size_t i = 0; i < al.weight.size(); ++i) {
                al.weight[i] -= cfg_.eta * (-(gm.weight[i] * gs.weight[i]));
            }
            for (std::size_t i = 0; i < al.bias.size(); ++i) {
                al.bias[i] -= cfg_.eta * (-(gm.bias[i] * gs.bias[i]));
            }
        }
    }

    if (cfg_.variant == Variant::la_maml) {
        // asynchronous outer step: the just-updated alpha, clipped at zero,
        // is the per-parameter step size
        for (std::size_t l = 0; l < params_.layers.size(); ++l) {
            auto& pl = params_.layers[l];
            const auto& al = alpha_->layers[l];
            const auto& gm = g_meta.layers[l];
            for (std::size_t i = 0; i < pl.weight.size(); ++i) {
                const double a = cfg_.clip_alpha ? std::max(0.0, al.weight[i])
                                                 : al.weight[i];
                pl.weight[i] -= a * gm.weight[i];
            }
            for (std::size_t i = 0; i < pl.bias.size(); ++i) {
                const double a =
                    cfg_.clip_alpha ? std::max(0.0, al.bias[i]) : al.bias[i];
                pl.bias[i] -= a * gm.bias[i];
            }
        }
    } else {
        params_ = axpy_params(params_, cfg_.beta, g_meta);
    }
}

void Learner::sgd_glance(const Batch& batch) {
    auto [loss, grads] = backward(params_, batch.x, batch.labels);
    if (!std::isfinite(loss)) throw DivergenceError("non-finite loss");
    last_meta_loss_ = loss;
    params_ = axpy_params(params_, cfg_.beta, grads);
}

void Learner::er_glance(const Batch& batch) {
    const Batch meta = build_meta_batch(batch, buffer_, cfg_.replay_sample);
    auto [loss, grads] = backward(params_, meta.x, meta.labels);
    if (!std::isfinite(loss)) throw DivergenceError("non-finite loss");
    last_meta_loss_ = loss;
    params_ = axpy_params(params_, cfg_.beta, grads);
}

void Learner::la_er_glance(const Batch& batch) {
    // ER update direction, learnable step size: the replay gradient plays
    // both the inner-gradient and meta-gradient roles in the alpha update
    const Batch meta = build_meta_batch(batch, buffer_, cfg_.replay_sample);
    auto [loss, grads] = backward(params_, meta.x, meta.labels);
    if (!std::isfinite(loss)) throw DivergenceError("non-finite loss");
    last_meta_loss_ = loss;
    for (std::size_t l = 0; l < alpha_->layers.size(); ++l) {
        auto& al = alpha_->layers[l];
        const auto& gl = grads.layers[l];
        for (std::size_t i = 0; i < al.weight.size(); ++i) {
            al.weight[i] -= cfg_.eta * (-(gl.weight[i] * gl.weight[i]));
        }
        for (std::size_t i = 0; i < al.bias.size(); ++i) {
            al.bias[i] -= cfg_.eta * (-(gl.bias[i] * gl.bias[i]));
        }
    }
    for (std::size_t l = 0; l < params_.layers.size(); ++l) {
        auto& pl = params_.layers[l];
        const auto& al = alpha_->layers[l];
        const auto& gl = grads.layers[l];
        for (std::size_t i = 0; i < pl.weight.size(); ++i) {
            const double a =
                cfg_.clip_alpha ? std::max(0.0, al.weight[i]) : al.weight[i];
            pl.weight[i] -= a * gl.weight[i];
        }
        for (std::size_t i = 0; i < pl.bias.size(); ++i) {
            const double a =
                cfg_.clip_alpha ? std::max(0.0, al.bias[i]) : al.bias[i];
            pl.bias[i] -= a * gl.bias[i];
        }
    }
}

void Learner::maml_glance(const Batch& batch) {
    const Batch meta = build_meta_batch(batch, buffer_, cfg_.replay_sample);
    meta_step(split_inner(batch), meta);
}

void Learner::observe_batch(std::size_t task_id, const Batch& batch) {
    (void)task_id;  // provenance lives in the batch itself
    if (batch.empty()) return;
    for (std::size_t g = 0; g < cfg_.glances; ++g) {
        switch (cfg_.variant) {
            case Variant::sgd: sgd_glance(batch); break;
            case Variant::er: er_glance(batch); break;
            case Variant::la_er: la_er_glance(batch); break;
            case Variant::c_maml:
            case Variant::sync:
            case Variant::la_maml: maml_glance(batch); break;
        }
    }
    // insert once per incoming batch, not once per glance
    if (AlgorithmConfig::uses_buffer(cfg_.variant)) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            buffer_.insert(batch.example(i));
        }
    }
    ++step_counter_;
}

int Learner::predict(const Tensor& x_row) const {
    Tensor x({1, x_row.size()}, x_row.values());
    const Tensor logits = forward(params_, x);
    int best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
        if (logits[c] > logits[best]) best = int(c);
    }
    return best;
}

std::vector<int> Learner::predict_batch(const Tensor& x) const {
    const Tensor logits = forward(params_, x);
    std::vector<int> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        }
        out[r] = int(best);
    }
    return out;
}

}  // namespace clrun
