#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "clrun/harness.hpp"

namespace {

// exit codes: 0 success, 2 config error, 3 data error, 4 all seeds diverged
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kDivergence = 4;

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual-learning lab: streams, learners, metrics, sweeps"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir, axis, values_csv, seeds_csv,
        report_dir;
    std::int64_t seed_override = -1;

    auto* run_cmd = app.add_subcommand("run", "train one config across its seeds");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--seed", seed_override, "run only this seed");
    run_cmd->add_option("--out", out_dir, "output directory override");
    run_cmd->add_option("--data-dir", data_dir, "MNIST IDX directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "vary one hyperparameter");
    sweep_cmd->add_option("--config", config_path, "base config file")->required();
    sweep_cmd->add_option("--axis", axis, "alpha0 | beta | eta | glances")
        ->required();
    sweep_cmd->add_option("--values", values_csv, "comma-separated axis values")
        ->required();
    sweep_cmd->add_option("--seeds", seeds_csv, "comma-separated seed override");
    sweep_cmd->add_option("--out", out_dir, "output directory override");
    sweep_cmd->add_option("--data-dir", data_dir, "MNIST IDX directory");

    auto* report_cmd = app.add_subcommand("report", "summarize run records");
    report_cmd->add_option("--dir", report_dir, "directory of run records")
        ->required();

    auto* selftest_cmd =
        app.add_subcommand("selftest", "gradient, reservoir, and metric checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest_cmd->parsed()) {
            return clrun::selftest() == 0 ? kOk : 1;
        }
        if (report_cmd->parsed()) {
            const std::string path = clrun::write_report(report_dir);
            std::printf("wrote %s\n", path.c_str());
            return kOk;
        }

        clrun::ExperimentConfig cfg =
            clrun::ExperimentConfig::from_file(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (!data_dir.empty()) cfg.data_dir = data_dir;

        if (run_cmd->parsed()) {
            std::vector<std::uint64_t> seeds = cfg.seeds;
            if (seed_override >= 0) {
                seeds = {std::uint64_t(seed_override)};
            }
            std::size_t diverged = 0;
            for (const std::uint64_t seed : seeds) {
                clrun::RunRecord rec;
                const std::string path = clrun::run_and_save(cfg, seed, &rec);
                if (rec.diverged) ++diverged;
                std::printf("seed %llu -> %s%s\n",
                            static_cast<unsigned long long>(seed), path.c_str(),
                            rec.diverged ? " (diverged)" : "");
            }
            return diverged == seeds.size() ? kDivergence : kOk;
        }
        if (sweep_cmd->parsed()) {
            clrun::SweepSpec spec;
            spec.base = cfg;
            spec.axis = axis;
            spec.values = parse_values(values_csv);
            if (!seeds_csv.empty()) {
                spec.base.seeds.clear();
                for (const double s : parse_values(seeds_csv)) {
                    spec.base.seeds.push_back(std::uint64_t(s));
                }
            }
            const clrun::SweepResult res = clrun::run_sweep(spec);
            std::printf("wrote %s\nwrote %s\n", res.series_path.c_str(),
                        res.aggregate_path.c_str());
            return kOk;
        }
    } catch (const clrun::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const clrun::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kDataError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kOk;
}
