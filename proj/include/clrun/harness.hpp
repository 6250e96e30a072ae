#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "clrun/learners.hpp"
#include "clrun/metrics.hpp"
#include "clrun/streams.hpp"

#include "json.hpp"

namespace clrun {

// Monotonic wall-clock timer used for all runtime accounting.
class Stopwatch {
public:
    Stopwatch() : start_(clock::now()) {}
    void restart() { start_ = clock::now(); }
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }
    static double resolution_ns() {
        using period = clock::period;
        return 1e9 * double(period::num) / double(period::den);
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

// Full experiment description. Parsed from a flat key-value config file
// (TOML-compatible subset: `key = value`, quoted strings, [a, b] arrays,
// booleans, # comments). Unknown keys are rejected.
struct ExperimentConfig {
    std::string benchmark = "synthetic";  // rotations | permutations |
                                          // many_permutations | synthetic
    AlgorithmConfig algo;
    PassMode pass_mode = PassMode::single;
    std::size_t epochs = 1;
    std::size_t batch_size = 10;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string data_dir;    // MNIST benchmarks; CLRUN_DATA_DIR fallback
    std::string output_dir = "runs";
    std::size_t tasks = 0;     // 0 = benchmark default
    std::size_t per_task = 0;  // 0 = benchmark default
    std::size_t eval_test_size = 500;
    std::size_t synth_dim = 20;
    std::size_t synth_classes = 5;
    bool snapshot_buffer = false;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    // stable hex hash of the config excluding seeds; identical across seeds
    // of one experiment
    std::string hash_excluding_seeds() const;

    std::size_t effective_tasks() const;
    std::size_t effective_per_task() const;
    std::string resolved_data_dir() const;  // data_dir or $CLRUN_DATA_DIR

    void validate() const;
};

// Builds the task stream for a config. MNIST benchmarks load the four
// canonical IDX files from the resolved data dir.
TaskStream build_stream(const ExperimentConfig& cfg, std::uint64_t seed);

std::vector<std::size_t> network_dims(const ExperimentConfig& cfg,
                                      const TaskStream& stream);

// Trains through the stream, evaluating every task after each stage, and
// returns the full record. Deterministic per (config, seed). A divergence
// aborts training but preserves the partial matrix in the record.
RunRecord run_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

// run_experiment + atomic JSON write into cfg.output_dir; returns the path
// and, when requested, the record itself.
std::string run_and_save(const ExperimentConfig& cfg, std::uint64_t seed,
                         RunRecord* out = nullptr);

struct SweepSpec {
    ExperimentConfig base;
    std::string axis;  // alpha0 | beta | eta | glances
    std::vector<double> values;

    void validate() const;  // axis must exist for the variant
};

// per-variant tunable axes (per the ablation family's hyperparameter sets)
const std::vector<std::string>& sweep_axes(Variant v);

struct SweepResult {
    std::string series_path;     // axis_value, seed, RA, BTI, diverged
    std::string aggregate_path;  // axis_value, RA_mean, RA_std
};

SweepResult run_sweep(const SweepSpec& spec);

// Markdown + CSV summary tables over every RunRecord JSON in dir, one table
// per benchmark, divergence counts footnoted. Returns the markdown path.
std::string write_report(const std::string& dir);

// Built-in checks: backward vs central differences, reservoir inclusion
// statistics, metric oracles. Prints one line per check; returns 0 when all
// pass.
int selftest(bool verbose = true);

// Worst relative error over `cases` random gradient-check draws (network
// sizes up to max_in -> max_hidden -> max_out, batches up to max_batch).
double gradient_check_worst_error(std::size_t cases, std::uint64_t seed,
                                  std::size_t max_in, std::size_t max_hidden,
                                  std::size_t max_out, std::size_t max_batch);

// Empirical reservoir inclusion frequency of the first stream item over
// `trials` simulated streams; true when within 3 standard errors of M/N.
bool reservoir_inclusion_ok(std::size_t capacity, std::size_t stream_len,
                            std::size_t trials, std::uint64_t seed,
                            double* observed = nullptr);

// write-temp-then-rename so parallel sweeps never interleave partial records
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace clrun
