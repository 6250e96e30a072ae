#include "clrun/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "clrun/rng.hpp"

namespace fs = std::filesystem;

namespace clrun {

TaskStream build_stream(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::uint64_t stream_seed = derive_seed(seed, "stream");
    if (cfg.benchmark == "synthetic") {
        return make_synthetic(cfg.effective_tasks(), cfg.effective_per_task(),
                              cfg.synth_dim, cfg.synth_classes, stream_seed,
                              cfg.eval_test_size);
    }
    const std::string dir = cfg.resolved_data_dir();
    if (dir.empty()) {
        throw DataError("benchmark '" + cfg.benchmark +
                        "' needs --data-dir (or CLRUN_DATA_DIR)");
    }
    const Dataset train = load_idx(dir + "/train-images-idx3-ubyte",
                                   dir + "/train-labels-idx1-ubyte");
    const Dataset test = load_idx(dir + "/t10k-images-idx3-ubyte",
                                  dir + "/t10k-labels-idx1-ubyte");
    if (cfg.benchmark == "rotations") {
        return make_rotations(train, test, cfg.effective_tasks(),
                              cfg.effective_per_task(), cfg.eval_test_size,
                              stream_seed);
    }
    return make_permutations(train, test, cfg.effective_tasks(),
                             cfg.effective_per_task(), cfg.eval_test_size,
                             stream_seed, cfg.benchmark == "many_permutations");
}

std::vector<std::size_t> network_dims(const ExperimentConfig& cfg,
                                      const TaskStream& stream) {
    (void)cfg;
    return {stream.input_dim, 100, 100, stream.classes};
}

namespace {

nlohmann::json snapshot_buffer(const ReplayBuffer& buf) {
    nlohmann::json j;
    j["capacity"] = buf.capacity();
    j["seen"] = buf.seen();
    nlohmann::json items = nlohmann::json::array();
    for (const Example& e : buf.items()) {
        items.push_back({{"label", e.label},
                         {"task_id", e.task_id},
                         {"dataset_index", e.source_index}});
    }
    j["items"] = std::move(items);
    return j;
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const TaskStream stream = build_stream(cfg, seed);
    const std::size_t T = stream.tasks.size();

    Learner learner(cfg.algo,
                    init_params(derive_seed(seed, "init"), network_dims(cfg, stream)),
                    derive_seed(seed, "learner"));

    RunRecord rec;
    rec.config = cfg.to_json();
    rec.config_hash = cfg.hash_excluding_seeds();
    rec.seed = seed;
    rec.matrix = AccuracyMatrix(T);
    rec.clock_resolution_ns = Stopwatch::resolution_ns();

    StreamSchedule sched{cfg.pass_mode, cfg.epochs, cfg.batch_size,
                         cfg.algo.glances};

    const Stopwatch total;
    Stopwatch task_clock;
    iterate(
        stream, sched, derive_seed(seed, "iterate"),
        [&](std::size_t task, const Batch& batch) {
            try {
                learner.observe_batch(task, batch);
            } catch (const DivergenceError& e) {
                rec.diverged = true;
                rec.divergence_task = int(task);
                rec.divergence_step = e.step_index;
                return false;
            }
            return true;
        },
        [&](std::size_t task) {
            rec.task_seconds.push_back(task_clock.seconds());
            task_clock.restart();
            const std::vector<double> row = evaluate_row(learner, stream);
            for (std::size_t j = 0; j < row.size(); ++j) {
                rec.matrix.set(task, j, row[j]);
            }
            if (learner.alpha()) {
                rec.alpha_per_task.push_back(alpha_stats(*learner.alpha()));
            }
        });
    rec.total_seconds = total.seconds();
    if (cfg.snapshot_buffer) rec.buffer_snapshot = snapshot_buffer(learner.buffer());
    return rec;
}

void atomic_write(const std::string& path, const std::string& contents) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << contents;
    }
    fs::rename(tmp, target);
}

std::string run_and_save(const ExperimentConfig& cfg, std::uint64_t seed,
                         RunRecord* out) {
    RunRecord rec = run_experiment(cfg, seed);
    const std::string name = "run_" + cfg.benchmark + "_" +
                             to_string(cfg.algo.variant) + "_s" +
                             std::to_string(seed) + "_" + rec.config_hash + ".json";
    const std::string path = (fs::path(cfg.output_dir) / name).string();
    atomic_write(path, rec.to_json().dump(2) + "\n");
    if (out) *out = std::move(rec);
    return path;
}

const std::vector<std::string>& sweep_axes(Variant v) {
    static const std::vector<std::string> sgd_axes = {"beta", "glances"};
    static const std::vector<std::string> la_axes = {"alpha0", "eta", "glances"};
    static const std::vector<std::string> c_maml_axes = {"alpha0", "beta",
                                                         "glances"};
    static const std::vector<std::string> sync_axes = {"alpha0", "beta", "eta",
                                                       "glances"};
    switch (v) {
        case Variant::sgd:
        case Variant::er: return sgd_axes;
        case Variant::la_er:
        case Variant::la_maml: return la_axes;
        case Variant::c_maml: return c_maml_axes;
        case Variant::sync: return sync_axes;
    }
    return sgd_axes;
}

void SweepSpec::validate() const {
    base.validate();
    const auto& axes = sweep_axes(base.algo.variant);
    if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
        throw ConfigError("axis '" + axis + "' is not tunable for variant " +
                          to_string(base.algo.variant));
    }
    if (values.empty()) throw ConfigError("sweep needs at least one value");
}

namespace {

ExperimentConfig with_axis_value(const ExperimentConfig& base,
                                 const std::string& axis, double value) {
    ExperimentConfig c = base;
    if (axis == "alpha0") {
        c.algo.alpha0 = value;
    } else if (axis == "beta") {
        c.algo.beta = value;
    } else if (axis == "eta") {
        c.algo.eta = value;
    } else if (axis == "glances") {
        if (value < 1 || value != double(std::size_t(value))) {
            throw ConfigError("glances values must be positive integers");
        }
        c.algo.glances = std::size_t(value);
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "'");
    }
    return c;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::ostringstream series;
    series << "axis_value,seed,RA,BTI,diverged\n";
    std::ostringstream agg;
    agg << "axis_value,RA_mean,RA_std\n";
    for (const double value : spec.values) {
        const ExperimentConfig cfg = with_axis_value(spec.base, spec.axis, value);
        std::vector<RunRecord> records;
        for (const std::uint64_t seed : cfg.seeds) {
            RunRecord rec = run_experiment(cfg, seed);
            if (rec.diverged) {
                series << fmt(value) << "," << seed << ",,," << 1 << "\n";
            } else {
                series << fmt(value) << "," << seed << ","
                       << fmt(retained_accuracy(rec.matrix)) << ","
                       << fmt(bti(rec.matrix)) << ",0\n";
            }
            records.push_back(std::move(rec));
        }
        const Summary s = aggregate(records);
        agg << fmt(value) << "," << (s.n ? fmt(s.ra_mean) : "") << ","
            << (s.n ? fmt(s.ra_std) : "") << "\n";
    }
    SweepResult result;
    const fs::path dir(spec.base.output_dir);
    result.series_path = (dir / ("sweep_" + spec.axis + ".csv")).string();
    result.aggregate_path = (dir / ("sweep_" + spec.axis + "_agg.csv")).string();
    atomic_write(result.series_path, series.str());
    atomic_write(result.aggregate_path, agg.str());
    return result;
}

std::string write_report(const std::string& dir) {
    std::vector<RunRecord> records;
    if (fs::exists(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() != ".json") continue;
            std::ifstream in(entry.path());
            nlohmann::json j;
            in >> j;
            if (j.value("schema", "") != "clrun.run_record.v1") continue;
            records.push_back(RunRecord::from_json(j));
        }
    }
    if (records.empty()) {
        throw DataError("no run records found in " + dir);
    }

    // group by exact config; present one table per benchmark
    std::map<std::string, std::vector<RunRecord>> by_hash;
    for (auto& r : records) by_hash[r.config_hash].push_back(std::move(r));

    std::map<std::string, std::vector<std::pair<std::string, Summary>>> tables;
    for (const auto& [hash, group] : by_hash) {
        const std::string benchmark = group.front().config.at("benchmark");
        const std::string variant = group.front().config.at("variant");
        tables[benchmark].push_back({variant, aggregate(group)});
    }

    std::ostringstream md;
    md << "# clrun report\n\n"
       << "RA and BTI in percent, mean +/- sample std over seeds. BTI averages\n"
       << "over all T tasks, including the final task's zero term.\n";
    for (const auto& [benchmark, rows] : tables) {
        md << "\n## " << benchmark << "\n\n";
        md << "| variant | RA | BTI | runtime (s) | seeds | divergent |\n";
        md << "|---|---|---|---|---|---|\n";
        std::ostringstream csv;
        csv << "variant,RA_mean,RA_std,BTI_mean,BTI_std,seconds_mean,seeds,"
               "divergent\n";
        for (const auto& [variant, s] : rows) {
            md << "| " << variant << " | " << fmt(s.ra_mean) << " ± "
               << fmt(s.ra_std) << " | " << fmt(s.bti_mean) << " ± "
               << fmt(s.bti_std) << " | " << fmt(s.seconds_mean) << " | " << s.n
               << " | " << s.divergent << " |\n";
            csv << variant << "," << fmt(s.ra_mean) << "," << fmt(s.ra_std) << ","
                << fmt(s.bti_mean) << "," << fmt(s.bti_std) << ","
                << fmt(s.seconds_mean) << "," << s.n << "," << s.divergent
                << "\n";
        }
        atomic_write((fs::path(dir) / ("report_" + benchmark + ".csv")).string(),
                     csv.str());
        bool any_divergent = false;
        for (const auto& [variant, s] : rows) any_divergent |= s.divergent > 0;
        if (any_divergent) {
            md << "\nDivergent runs are excluded from the means and counted in "
                  "the last column.\n";
        }
    }
    const std::string md_path = (fs::path(dir) / "report.md").string();
    atomic_write(md_path, md.str());
    return md_path;
}

}  // namespace clrun
