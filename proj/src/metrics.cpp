#include "clrun/metrics.hpp"

#include <cmath>
#include <limits>

namespace clrun {

namespace {
constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
}

AccuracyMatrix::AccuracyMatrix(std::size_t tasks)
    : tasks_(tasks), values_(tasks * tasks, kUnset) {}

void AccuracyMatrix::set(std::size_t stage, std::size_t task, double accuracy) {
    if (stage >= tasks_ || task >= tasks_) {
        throw MetricError("accuracy matrix index out of range");
    }
    if (accuracy < 0.0 || accuracy > 1.0) {
        throw MetricError("accuracy must be a fraction in [0, 1]");
    }
    values_[stage * tasks_ + task] = accuracy;
}

double AccuracyMatrix::get(std::size_t stage, std::size_t task) const {
    if (stage >= tasks_ || task >= tasks_) {
        throw MetricError("accuracy matrix index out of range");
    }
    return values_[stage * tasks_ + task];
}

bool AccuracyMatrix::has(std::size_t stage, std::size_t task) const {
    return !std::isnan(get(stage, task));
}

bool AccuracyMatrix::operator==(const AccuracyMatrix& o) const {
    if (tasks_ != o.tasks_) return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const bool a = std::isnan(values_[i]), b = std::isnan(o.values_[i]);
        if (a != b || (!a && values_[i] != o.values_[i])) return false;
    }
    return true;
}

nlohmann::json AccuracyMatrix::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < tasks_; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < tasks_; ++j) {
            if (has(i, j)) {
                row.push_back(get(i, j));
            } else {
                row.push_back(nullptr);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

AccuracyMatrix AccuracyMatrix::from_json(const nlohmann::json& j) {
    AccuracyMatrix m(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        for (std::size_t k = 0; k < j[i].size(); ++k) {
            if (!j[i][k].is_null()) m.set(i, k, j[i][k].get<double>());
        }
    }
    return m;
}

double retained_accuracy(const AccuracyMatrix& m) {
    const std::size_t T = m.task_count();
    if (T == 0) throw MetricError("empty accuracy matrix");
    double sum = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
        if (!m.has(T - 1, j)) {
            throw MetricError("final row not fully populated");
        }
        // convert per entry: keeps round decimal accuracies exact in percent
        sum += m.get(T - 1, j) * 100.0;
    }
    return sum / double(T);
}

double bti(const AccuracyMatrix& m) {
    const std::size_t T = m.task_count();
    if (T == 0) throw MetricError("empty accuracy matrix");
    double sum = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
        if (!m.has(T - 1, j) || !m.has(j, j)) {
            throw MetricError("diagonal or final row not fully populated");
        }
        sum += m.get(T - 1, j) * 100.0 - m.get(j, j) * 100.0;
    }
    return sum / double(T);
}

std::vector<double> evaluate_row(const Learner& learner, const TaskStream& stream) {
    std::vector<double> out;
    for (const Task& task : stream.tasks) {
        if (task.test.empty()) throw MetricError("empty test set");
        std::size_t correct = 0;
        // batch the test set for evaluation speed
        constexpr std::size_t kChunk = 256;
        for (std::size_t start = 0; start < task.test.size(); start += kChunk) {
            const std::size_t end = std::min(task.test.size(), start + kChunk);
            std::vector<Example> ex(task.test.begin() + long(start),
                                    task.test.begin() + long(end));
            const Batch b = Batch::from_examples(ex);
            const std::vector<int> pred = learner.predict_batch(b.x);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                if (pred[i] == b.labels[i]) ++correct;
            }
        }
        out.push_back(double(correct) / double(task.test.size()));
    }
    return out;
}

AlphaStats alpha_stats(const ParameterSet& alpha) {
    AlphaStats s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& l : alpha.layers) {
        for (const auto* t : {&l.weight, &l.bias}) {
            for (const double v : t->values()) {
                s.min = std::min(s.min, v);
                s.max = std::max(s.max, v);
                sum += v;
                ++n;
            }
        }
    }
    s.mean = n ? sum / double(n) : 0.0;
    if (n == 0) s.min = s.max = 0.0;
    return s;
}

nlohmann::json RunRecord::to_json() const {
    nlohmann::json j;
    j["schema"] = "clrun.run_record.v1";
    j["config"] = config;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["accuracy_matrix"] = matrix.to_json();
    j["task_seconds"] = task_seconds;
    j["total_seconds"] = total_seconds;
    j["clock_resolution_ns"] = clock_resolution_ns;
    j["diverged"] = diverged;
    if (diverged) {
        j["divergence_task"] = divergence_task;
        j["divergence_step"] = divergence_step;
    }
    if (!alpha_per_task.empty()) {
        nlohmann::json stats = nlohmann::json::array();
        for (const auto& a : alpha_per_task) {
            stats.push_back({{"min", a.min}, {"mean", a.mean}, {"max", a.max}});
        }
        j["alpha_per_task"] = std::move(stats);
    }
    if (!buffer_snapshot.is_null()) j["replay_buffer"] = buffer_snapshot;
    return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
    RunRecord r;
    r.config = j.at("config");
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.matrix = AccuracyMatrix::from_json(j.at("accuracy_matrix"));
    r.task_seconds = j.at("task_seconds").get<std::vector<double>>();
    r.total_seconds = j.at("total_seconds").get<double>();
    r.clock_resolution_ns = j.value("clock_resolution_ns", 0.0);
    r.diverged = j.at("diverged").get<bool>();
    r.divergence_task = j.value("divergence_task", -1);
    r.divergence_step = j.value("divergence_step", -1);
    if (j.contains("alpha_per_task")) {
        for (const auto& a : j.at("alpha_per_task")) {
            r.alpha_per_task.push_back(
                {a.at("min").get<double>(), a.at("mean").get<double>(),
                 a.at("max").get<double>()});
        }
    }
    if (j.contains("replay_buffer")) r.buffer_snapshot = j.at("replay_buffer");
    return r;
}

nlohmann::json RunRecord::json_without_timing() const {
    nlohmann::json j = to_json();
    j.erase("task_seconds");
    j.erase("total_seconds");
    j.erase("clock_resolution_ns");
    return j;
}

Summary aggregate(const std::vector<RunRecord>& records) {
    if (records.empty()) throw MetricError("aggregate needs at least one record");
    const std::string& hash = records.front().config_hash;
    for (const auto& r : records) {
        if (r.config_hash != hash) {
            throw MetricError("aggregate: records mix different configs");
        }
    }
    Summary s;
    std::vector<double> ras, btis, secs;
    for (const auto& r : records) {
        if (r.diverged) {
            ++s.divergent;
            continue;
        }
        ras.push_back(retained_accuracy(r.matrix));
        btis.push_back(bti(r.matrix));
        secs.push_back(r.total_seconds);
    }
    s.n = ras.size();
    const auto mean_std = [](const std::vector<double>& v) {
        double m = 0.0;
        for (const double x : v) m += x;
        m /= double(v.size());
        double var = 0.0;
        if (v.size() > 1) {
            for (const double x : v) var += (x - m) * (x - m);
            var /= double(v.size() - 1);
        }
        return std::pair<double, double>{m, std::sqrt(var)};
    };
    if (s.n > 0) {
        std::tie(s.ra_mean, s.ra_std) = mean_std(ras);
        std::tie(s.bti_mean, s.bti_std) = mean_std(btis);
        std::tie(s.seconds_mean, s.seconds_std) = mean_std(secs);
    }
    return s;
}

}  // namespace clrun
