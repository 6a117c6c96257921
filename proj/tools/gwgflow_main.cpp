#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwgflow/config.hpp"
#include "gwgflow/experiment.hpp"
#include "gwgflow/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& preset, std::uint64_t seed,
            bool seed_set, const std::string& out_dir, bool desk_scale, bool timing) {
    gwg::ExperimentConfig cfg;
    try {
        if (!preset.empty()) {
            cfg = gwg::preset_config(preset, desk_scale);
        } else if (!config_path.empty()) {
            cfg = gwg::load_config_file(config_path);
        } else {
            std::fprintf(stderr, "run: needs --config or --preset\n");
            return 2;
        }
        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        gwg::validate_config(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run: %s\n", e.what());
        return 2;
    }
    try {
        const auto outcome = gwg::run_experiment(cfg, timing);
        if (!outcome.ok) {
            std::fprintf(stderr, "run: diverged: %s (partial outputs in %s)\n",
                         outcome.message.c_str(), cfg.output_dir.c_str());
            return 1;
        }
        std::printf("run: %s finished, outputs in %s\n", cfg.name.c_str(), cfg.output_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run: %s\n", e.what());
        return 1;
    }
}

int cmd_verify(const std::string& report_path) {
    const auto results = gwg::verify_suite();
    bool all_pass = true;
    std::printf("%-28s %14s %14s %14s  %s\n", "check", "value", "bound_lo", "bound_hi", "status");
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        std::printf("%-28s %14.6g %14.6g %14.6g  %s\n", r.name.c_str(), r.value, r.bound_lo,
                    r.bound_hi, r.pass ? "pass" : "FAIL");
    }
    nlohmann::ordered_json report = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json row;
        row["check_name"] = r.name;
        row["value"] = r.value;
        row["bound_lo"] = r.bound_lo;
        row["bound_hi"] = r.bound_hi;
        row["pass"] = r.pass;
        report.push_back(row);
    }
    std::ofstream f(report_path);
    f << report.dump(2) << "\n";
    std::printf("%s; report written to %s\n", all_pass ? "all checks passed" : "CHECK FAILURES",
                report_path.c_str());
    return all_pass ? 0 : 1;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out) {
    try {
        gwg::compare_runs(dirs, out);
        std::printf("compare: merged %zu runs into %s\n", dirs.size(), out.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "compare: %s\n", e.what());
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gwgflow: particle-based variational inference via generalized Wasserstein gradient flows"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir;
    std::uint64_t seed = 0;
    bool desk_scale = false, timing = false;

    auto* run = app.add_subcommand("run", "execute an experiment from a config file or preset");
    run->add_option("--config", config_path, "path to a config JSON file");
    run->add_option("--preset", preset, "named preset experiment");
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "override the output directory");
    run->add_flag("--desk-scale", desk_scale, "CI-sized preset variant");
    run->add_flag("--timing", timing, "record wall_ms in metrics.csv (breaks byte reproducibility)");

    std::string report_path = "verify_report.json";
    auto* verify = app.add_subcommand("verify", "run the analytic oracle suite");
    verify->add_option("--out", report_path, "JSON report path");

    std::vector<std::string> compare_dirs;
    std::string compare_out = "compare.csv";
    auto* compare = app.add_subcommand("compare", "merge metric CSVs of several runs");
    compare->add_option("dirs", compare_dirs, "run directories")->expected(-1);
    compare->add_option("--out", compare_out, "merged CSV path");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return cmd_run(config_path, preset, seed, seed_opt->count() > 0, out_dir, desk_scale, timing);
    }
    if (verify->parsed()) return cmd_verify(report_path);
    if (compare->parsed()) {
        if (compare_dirs.empty()) {
            std::fprintf(stderr, "compare: usage error: needs at least two run directories\n");
            return 2;
        }
        return cmd_compare(compare_dirs, compare_out);
    }
    return 2;
}
