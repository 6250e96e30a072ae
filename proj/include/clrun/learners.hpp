#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clrun/data.hpp"
#include "clrun/net.hpp"
#include "clrun/replay.hpp"

namespace clrun {

enum class Variant { sgd, er, la_er, c_maml, sync, la_maml };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

// Whether the accumulated meta-loss sums a term after every inner step or
// only at the final adapted parameters.
enum class MetaLossAt { every_step, final_step };

struct AlgorithmConfig {
    Variant variant = Variant::la_maml;
    double alpha0 = 0.25;  // initial inner LR / scalar seed for the vector LRs
    double beta = 0.1;     // fixed outer LR where the variant uses one
    double eta = 0.1;      // learning rate of the learnable LRs
    std::size_t glances = 5;
    std::size_t replay_sample = 10;    // memory examples per meta-batch
    std::size_t buffer_capacity = 200;
    std::size_t inner_batch_size = 1;  // 0 = whole batch, 1 = per-example
    MetaLossAt meta_loss_at = MetaLossAt::every_step;
    bool clip_alpha = true;  // apply max(0, alpha) in asynchronous outer steps

    void validate() const;  // throws ConfigError

    static bool uses_lr_state(Variant v);
    static bool uses_buffer(Variant v);
};

// One continual learner behind a single interface: observe a stream batch,
// update theta_0 (and, where the variant has them, the per-parameter learning
// rates and the replay buffer).
class Learner {
public:
    Learner(AlgorithmConfig cfg, ParameterSet init, std::uint64_t seed);

    // Runs `glances` updates on the batch, then inserts its examples into the
    // replay buffer exactly once (buffer-using variants only). Throws
    // DivergenceError when a loss goes non-finite.
    void observe_batch(std::size_t task_id, const Batch& batch);

    int predict(const Tensor& x_row) const;          // argmax, lowest index wins ties
    std::vector<int> predict_batch(const Tensor& x) const;

    const ParameterSet& params() const { return params_; }
    // learnable per-parameter LRs; null for sgd / er / c_maml
    const ParameterSet* alpha() const;
    const ReplayBuffer& buffer() const { return buffer_; }
    const AlgorithmConfig& config() const { return cfg_; }
    std::uint64_t steps() const { return step_counter_; }
    double last_meta_loss() const { return last_meta_loss_; }

    // --- building blocks, exposed for direct testing ---

    // theta' = theta - alpha (.) grad(batch); also returns the inner gradient
    static std::pair<ParameterSet, GradientSet> inner_update(
        const ParameterSet& p, const ParameterSet& alpha, const Batch& batch);
    static std::pair<ParameterSet, GradientSet> inner_update(
        const ParameterSet& p, double lr, const Batch& batch);

    // current batch followed by k buffer samples; empty buffer degrades to the
    // current batch alone
    static Batch build_meta_batch(const Batch& current, ReplayBuffer& buffer,
                                  std::size_t k);

    // One clone / k-inner-steps / meta-loss / LR-update / outer-update cycle
    // on the state, per the variant. Exposed so tests can drive it with
    // hand-built inner splits and meta-batches.
    void meta_step(const std::vector<Batch>& inner_batches, const Batch& meta_batch);

private:
    void sgd_glance(const Batch& batch);
    void er_glance(const Batch& batch);
    void la_er_glance(const Batch& batch);
    void maml_glance(const Batch& batch);

    std::vector<Batch> split_inner(const Batch& batch) const;

    AlgorithmConfig cfg_;
    ParameterSet params_;
    // materialized for every meta variant so c_maml shares the vector-LR code
    // path bit-for-bit with sync; exposed only for the learnable-LR variants
    std::optional<ParameterSet> alpha_;
    ReplayBuffer buffer_;
    std::uint64_t step_counter_ = 0;
    double last_meta_loss_ = 0.0;
};

}  // namespace clrun
