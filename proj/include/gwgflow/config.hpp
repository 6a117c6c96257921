#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gwgflow/mlp.hpp"
#include "gwgflow/samplers.hpp"
#include "gwgflow/target.hpp"

namespace gwg {

struct TargetConfig {
    enum class Kind { GaussianMixture, MonomialGamma, ConditionedDiffusion };
    Kind kind = Kind::GaussianMixture;

    // gaussian_mixture
    std::vector<double> weights;
    std::vector<std::vector<double>> means;
    double variance = 1.0;

    // monomial_gamma
    double mg_a = 0.3;
    double mg_b = 0.9;
    double mg_epsilon = 1e-4;

    // conditioned_diffusion; observations are regenerated from obs_seed
    int cd_steps = 100;
    int cd_stride = 5;
    double cd_dt = 0.01;
    double cd_sigma = 0.1;
    std::uint64_t cd_obs_seed = 0;

    int dim() const;
    std::unique_ptr<Target> build() const;
};

struct NetConfig {
    std::vector<int> hidden{32, 32};
    Activation activation = Activation::Tanh;
};

struct YoungConfig {
    enum class Kind { Lp, Pfg, Exp };
    Kind kind = Kind::Lp;
    double p = 2.0; // Lp exponent; initial p0 for ada_gwg
    double pfg_alpha = 1.0;
    int pfg_refresh_every = 1;
    double sigma = 1.0;
};

struct AdaOptions {
    double p_lr = 0.0;
    double lb = 1.1;
    double ub = 4.0;
    double grad_clip = 0.1;
};

struct SamplerSpec {
    enum class Method { Gwg, AdaGwg, Svgd, Lmc };
    Method method = Method::Gwg;
    double step_size = 0.1;
    int outer_iters = 1000;
    int inner_iters = 5;
    int pretrain_steps = 0;
    bool reinit_net_each_outer = false;
    YoungConfig young;
    OptimizerSpec optimizer;
    DivergenceSpec divergence;
    AdaOptions ada;
};

struct MetricGridConfig {
    std::vector<double> lo, hi;
    int bins = 50;
};

struct ExperimentConfig {
    std::string name;
    std::uint64_t seed = 1;
    int particles = 1000;
    std::vector<double> init_mean; // empty = origin
    double init_std = 1.0;
    TargetConfig target;
    NetConfig net;
    SamplerSpec sampler;
    std::vector<std::string> metrics;
    MetricGridConfig metric_grid;
    std::string mmd_reference; // snapshots.jsonl of the ground-truth run
    int checkpoint_every = 50;
    int snapshot_every = 0; // 0 = final snapshot only
    std::string output_dir = "runs/out";
};

// Strict schema: unknown keys are rejected, constraint violations name the
// offending field. parse(serialize(parse(text))) == parse(text).
ExperimentConfig parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

// Named experiment presets; desk_scale shrinks the expensive ones to CI
// size. Throws on unknown name.
ExperimentConfig preset_config(const std::string& name, bool desk_scale);
std::vector<std::string> preset_names();

} // namespace gwg
