#pragma once

#include <string>
#include <vector>

#include "gwgflow/config.hpp"
#include "gwgflow/samplers.hpp"

namespace gwg {

struct RunOutcome {
    bool ok = false;
    std::string message;
};

// Executes the configured sampler, writing into cfg.output_dir:
//   config.json        resolved configuration (reproduces the run)
//   metrics.csv        header iter,metric_name,value,wall_ms
//   snapshots.jsonl    one {iter, p, loss, particles} record per snapshot
//   observations.json  conditioned-diffusion observation vector, when used
// wall_ms is 0 unless timing is set (real timings break byte-level
// reproducibility of reruns). Diverged runs return ok=false with partial
// outputs retained.
RunOutcome run_experiment(const ExperimentConfig& cfg, bool timing = false);

struct SnapshotCloud {
    int n = 0;
    int d = 0;
    std::vector<double> x;
};

// Last snapshot record of a snapshots.jsonl file.
SnapshotCloud load_snapshot_cloud(const std::string& path);

// Merges the metric CSVs of several run directories into one long-format
// CSV (method, iter, metric, value). Throws if the runs expose different
// metric sets, listing the mismatch.
void compare_runs(const std::vector<std::string>& run_dirs, const std::string& out_path);

// Moment helpers used by reports and tests.
std::vector<double> cloud_mean(std::span<const double> x, int n, int d);
double cloud_mean_norm(std::span<const double> x, int n, int d);
double cloud_cov_identity_fro(std::span<const double> x, int n, int d);

} // namespace gwg
