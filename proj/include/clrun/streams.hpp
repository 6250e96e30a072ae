#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "clrun/data.hpp"
#include "clrun/tensor.hpp"

namespace clrun {

// A labelled pool of flat inputs scaled to [0, 1].
struct Dataset {
    Tensor inputs;  // N x dim
    std::vector<int> labels;
    std::string name;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return inputs.cols(); }
};

// Parses the IDX binary pair (big-endian magic 0x803 images / 0x801 labels),
// divides pixels by 255. Throws DataError on bad magic, truncation, or an
// image/label count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Rotation about the image center, bilinear interpolation, zero padding,
// output clamped to [0, 1]. Accepts a 28x28 or flat 784 tensor; returns the
// same shape.
Tensor rotate_image(const Tensor& img, double degrees);

// permuted[i] = img[perm[i]]
Tensor apply_permutation(const Tensor& img, const std::vector<std::size_t>& perm);

struct TransformDesc {
    enum class Kind { none, rotation, permutation, synthetic };
    Kind kind = Kind::none;
    double angle = 0.0;
    std::vector<std::size_t> permutation;
    std::uint64_t synth_seed = 0;
};

struct Task {
    std::vector<Example> train;
    std::vector<Example> test;
    TransformDesc transform;
};

struct TaskStream {
    std::vector<Task> tasks;
    std::string benchmark;
    std::size_t input_dim = 784;
    std::size_t classes = 10;
    // set when the source pool was too small for disjoint per-task draws and
    // samples were reused across tasks
    bool reused_samples = false;
};

// Angles evenly spaced over [0, 180] including both endpoints (180k/(T-1));
// task 0 is the unrotated source. Train draws are disjoint across tasks when
// the pool allows.
TaskStream make_rotations(const Dataset& train, const Dataset& test,
                          std::size_t tasks, std::size_t per_task,
                          std::size_t test_per_task, std::uint64_t seed);

// Task 0 keeps the identity permutation; later tasks use independent uniform
// pixel permutations. many=true defaults tasks/per_task to 100 x 200 when the
// caller passes zero for either.
TaskStream make_permutations(const Dataset& train, const Dataset& test,
                             std::size_t tasks, std::size_t per_task,
                             std::size_t test_per_task, std::uint64_t seed,
                             bool many = false);

// Gaussian class clusters; each task applies a task-specific random rotation
// to the shared mean layout (task 0 is unrotated). Linearly separable per
// task.
TaskStream make_synthetic(std::size_t tasks, std::size_t per_task,
                          std::size_t dim, std::size_t classes,
                          std::uint64_t seed, std::size_t test_per_task = 100);

enum class PassMode { single, multiple };

struct StreamSchedule {
    PassMode pass_mode = PassMode::single;
    std::size_t epochs = 1;  // multiple-pass only
    std::size_t batch_size = 10;
    std::size_t glances = 5;
};

// Visits tasks strictly in order; within a task, examples are shuffled per
// epoch (one epoch when single-pass) and emitted in batches, keeping the
// final partial batch. on_batch may return false to stop the stream early
// (divergence); on_task_end fires after each completed task.
void iterate(const TaskStream& stream, const StreamSchedule& sched,
             std::uint64_t seed,
             const std::function<bool(std::size_t task, const Batch&)>& on_batch,
             const std::function<void(std::size_t task)>& on_task_end = {});

// materialized form of iterate, for tests
std::vector<std::pair<std::size_t, Batch>> materialize(
    const TaskStream& stream, const StreamSchedule& sched, std::uint64_t seed);

}  // namespace clrun
