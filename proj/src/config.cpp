#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "clrun/harness.hpp"

namespace clrun {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Parses one TOML-subset value: quoted string, bool, number, or a flat array
// of numbers.
nlohmann::json parse_value(const std::string& raw, const std::string& key) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError("empty value for key '" + key + "'");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') {
            throw ConfigError("unterminated string for key '" + key + "'");
        }
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') {
            throw ConfigError("unterminated array for key '" + key + "'");
        }
        nlohmann::json arr = nlohmann::json::array();
        std::stringstream ss(v.substr(1, v.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            arr.push_back(std::stod(item));
        }
        return arr;
    }
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse value '" + v + "' for key '" + key + "'");
    }
}

std::size_t as_size(const nlohmann::json& j, const std::string& key) {
    const double d = j.get<double>();
    if (d < 0 || d != double(std::size_t(d))) {
        throw ConfigError("key '" + key + "' must be a non-negative integer");
    }
    return std::size_t(d);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j = nlohmann::json::object();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        j[key] = parse_value(line.substr(eq + 1), key);
    }
    return from_json(j);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "benchmark") {
            c.benchmark = value.get<std::string>();
        } else if (key == "variant") {
            c.algo.variant = variant_from_string(value.get<std::string>());
        } else if (key == "alpha0") {
            c.algo.alpha0 = value.get<double>();
        } else if (key == "beta") {
            c.algo.beta = value.get<double>();
        } else if (key == "eta") {
            c.algo.eta = value.get<double>();
        } else if (key == "glances") {
            c.algo.glances = as_size(value, key);
        } else if (key == "replay_sample") {
            c.algo.replay_sample = as_size(value, key);
        } else if (key == "buffer_capacity") {
            c.algo.buffer_capacity = as_size(value, key);
        } else if (key == "inner_batch_size") {
            c.algo.inner_batch_size = as_size(value, key);
        } else if (key == "meta_loss_at") {
            const std::string s = value.get<std::string>();
            if (s == "every_step") {
                c.algo.meta_loss_at = MetaLossAt::every_step;
            } else if (s == "final") {
                c.algo.meta_loss_at = MetaLossAt::final_step;
            } else {
                throw ConfigError("meta_loss_at must be every_step or final");
            }
        } else if (key == "clip_alpha") {
            c.algo.clip_alpha = value.get<bool>();
        } else if (key == "pass_mode") {
            const std::string s = value.get<std::string>();
            if (s == "single") {
                c.pass_mode = PassMode::single;
            } else if (s == "multiple") {
                c.pass_mode = PassMode::multiple;
            } else {
                throw ConfigError("pass_mode must be single or multiple");
            }
        } else if (key == "epochs") {
            c.epochs = as_size(value, key);
        } else if (key == "batch_size") {
            c.batch_size = as_size(value, key);
        } else if (key == "seeds") {
            c.seeds.clear();
            for (const auto& s : value) {
                c.seeds.push_back(std::uint64_t(s.get<double>()));
            }
        } else if (key == "data_dir") {
            c.data_dir = value.get<std::string>();
        } else if (key == "output_dir") {
            c.output_dir = value.get<std::string>();
        } else if (key == "tasks") {
            c.tasks = as_size(value, key);
        } else if (key == "per_task") {
            c.per_task = as_size(value, key);
        } else if (key == "eval_test_size") {
            c.eval_test_size = as_size(value, key);
        } else if (key == "synth_dim") {
            c.synth_dim = as_size(value, key);
        } else if (key == "synth_classes") {
            c.synth_classes = as_size(value, key);
        } else if (key == "snapshot_buffer") {
            c.snapshot_buffer = value.get<bool>();
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["benchmark"] = benchmark;
    j["variant"] = to_string(algo.variant);
    j["alpha0"] = algo.alpha0;
    j["beta"] = algo.beta;
    j["eta"] = algo.eta;
    j["glances"] = algo.glances;
    j["replay_sample"] = algo.replay_sample;
    j["buffer_capacity"] = algo.buffer_capacity;
    j["inner_batch_size"] = algo.inner_batch_size;
    j["meta_loss_at"] =
        algo.meta_loss_at == MetaLossAt::every_step ? "every_step" : "final";
    j["clip_alpha"] = algo.clip_alpha;
    j["pass_mode"] = pass_mode == PassMode::single ? "single" : "multiple";
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["seeds"] = seeds;
    j["data_dir"] = data_dir;
    j["output_dir"] = output_dir;
    j["tasks"] = tasks;
    j["per_task"] = per_task;
    j["eval_test_size"] = eval_test_size;
    j["synth_dim"] = synth_dim;
    j["synth_classes"] = synth_classes;
    j["snapshot_buffer"] = snapshot_buffer;
    return j;
}

std::string ExperimentConfig::hash_excluding_seeds() const {
    nlohmann::json j = to_json();
    j.erase("seeds");
    j.erase("output_dir");  // where records land is not part of the experiment
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : dump) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t ExperimentConfig::effective_tasks() const {
    if (tasks > 0) return tasks;
    if (benchmark == "many_permutations") return 100;
    if (benchmark == "synthetic") return 5;
    return 20;
}

std::size_t ExperimentConfig::effective_per_task() const {
    if (per_task > 0) return per_task;
    if (benchmark == "many_permutations") return 200;
    if (benchmark == "synthetic") return 200;
    return 1000;
}

std::string ExperimentConfig::resolved_data_dir() const {
    if (!data_dir.empty()) return data_dir;
    if (const char* env = std::getenv("CLRUN_DATA_DIR")) return env;
    return {};
}

void ExperimentConfig::validate() const {
    if (benchmark != "rotations" && benchmark != "permutations" &&
        benchmark != "many_permutations" && benchmark != "synthetic") {
        throw ConfigError("unknown benchmark '" + benchmark + "'");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (pass_mode == PassMode::multiple && epochs < 1) {
        throw ConfigError("multiple-pass needs epochs >= 1");
    }
    if (eval_test_size < 1) throw ConfigError("eval_test_size must be >= 1");
    algo.validate();
}

}  // namespace clrun
