#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clrun/learners.hpp"
#include "clrun/streams.hpp"

#include "json.hpp"

namespace clrun {

// Lower-triangular-by-use T x T record: entry (i, j) is test accuracy on task
// j measured right after finishing training stage i. Stored as fractions;
// the metrics report percent.
class AccuracyMatrix {
public:
    AccuracyMatrix() = default;
    explicit AccuracyMatrix(std::size_t tasks);

    std::size_t task_count() const { return tasks_; }
    void set(std::size_t stage, std::size_t task, double accuracy);
    double get(std::size_t stage, std::size_t task) const;
    bool has(std::size_t stage, std::size_t task) const;

    nlohmann::json to_json() const;
    static AccuracyMatrix from_json(const nlohmann::json& j);

    // NaN-aware: unpopulated entries compare equal to each other
    bool operator==(const AccuracyMatrix& o) const;

private:
    std::size_t tasks_ = 0;
    std::vector<double> values_;  // NaN = unpopulated
};

// Mean of the final row, in percent. Requires the final row fully populated.
double retained_accuracy(const AccuracyMatrix& m);

// Mean over tasks of (final-row accuracy - diagonal accuracy), in percentage
// points. The last task's zero term is included in the mean.
double bti(const AccuracyMatrix& m);

// Accuracy on every task's test set under the learner's predict.
std::vector<double> evaluate_row(const Learner& learner, const TaskStream& stream);

struct AlphaStats {
    double min = 0.0, mean = 0.0, max = 0.0;
};

AlphaStats alpha_stats(const ParameterSet& alpha);

struct RunRecord {
    nlohmann::json config;      // full experiment config snapshot
    std::string config_hash;    // hash of the config excluding the seed
    std::uint64_t seed = 0;
    AccuracyMatrix matrix;
    std::vector<double> task_seconds;
    double total_seconds = 0.0;
    double clock_resolution_ns = 0.0;
    bool diverged = false;
    int divergence_task = -1;
    int divergence_step = -1;
    std::vector<AlphaStats> alpha_per_task;  // learnable-LR variants only
    nlohmann::json buffer_snapshot;          // optional

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);

    // record with the wall-clock fields removed, for determinism comparisons
    nlohmann::json json_without_timing() const;
};

struct Summary {
    std::size_t n = 0;          // clean runs entering the means
    std::size_t divergent = 0;  // excluded runs
    double ra_mean = 0.0, ra_std = 0.0;
    double bti_mean = 0.0, bti_std = 0.0;
    double seconds_mean = 0.0, seconds_std = 0.0;
};

// Mean +/- unbiased sample std over records sharing one config (modulo seed).
// Divergent runs are excluded from the means but counted.
Summary aggregate(const std::vector<RunRecord>& records);

}  // namespace clrun
