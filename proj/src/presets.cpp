#include <cmath>
#include <stdexcept>

#include "gwgflow/config.hpp"

namespace gwg {

namespace {

TargetConfig circle_mixture(int modes, double radius, double variance) {
    TargetConfig t;
    t.kind = TargetConfig::Kind::GaussianMixture;
    t.weights.assign(static_cast<std::size_t>(modes), 1.0 / modes);
    for (int c = 0; c < modes; ++c) {
        const double ang = 2.0 * M_PI * c / modes;
        t.means.push_back({radius * std::cos(ang), radius * std::sin(ang)});
    }
    t.variance = variance;
    return t;
}

TargetConfig std_gaussian(int d) {
    TargetConfig t;
    t.kind = TargetConfig::Kind::GaussianMixture;
    t.weights = {1.0};
    t.means.push_back(std::vector<double>(static_cast<std::size_t>(d), 0.0));
    t.variance = 1.0;
    return t;
}

ExperimentConfig mixture_base(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.particles = 1000;
    c.target = circle_mixture(10, 4.0, 0.1);
    c.net.hidden = {32, 32};
    c.sampler.step_size = 0.1;
    c.sampler.outer_iters = 2000;
    c.sampler.inner_iters = 5;
    c.sampler.optimizer.kind = OptimizerSpec::Kind::SgdMomentum;
    c.sampler.optimizer.nesterov = true;
    c.sampler.optimizer.lr = 1e-3;
    c.metrics = {"js_target", "kl_target"};
    c.metric_grid.lo = {-6.0, -6.0};
    c.metric_grid.hi = {6.0, 6.0};
    c.metric_grid.bins = 50;
    c.checkpoint_every = 100;
    c.snapshot_every = 1000;
    return c;
}

ExperimentConfig monomial_base(const std::string& name, bool desk) {
    ExperimentConfig c;
    c.name = name;
    c.particles = 1000;
    c.target.kind = TargetConfig::Kind::MonomialGamma;
    c.net.hidden = {32, 32};
    c.sampler.step_size = 1e-3;
    c.sampler.outer_iters = desk ? 1000 : 2000;
    c.sampler.inner_iters = 5;
    c.sampler.optimizer.kind = OptimizerSpec::Kind::Adam;
    c.sampler.optimizer.lr = 1e-3;
    c.metrics = {"kl_target"};
    c.metric_grid.lo = {-25.0, -25.0};
    c.metric_grid.hi = {25.0, 25.0};
    c.metric_grid.bins = 50;
    c.checkpoint_every = desk ? 50 : 100;
    c.snapshot_every = 0;
    return c;
}

ExperimentConfig cd_base(const std::string& name, bool desk) {
    ExperimentConfig c;
    c.name = name;
    c.particles = desk ? 256 : 1000;
    c.target.kind = TargetConfig::Kind::ConditionedDiffusion;
    c.target.cd_steps = desk ? 20 : 100;
    c.target.cd_stride = 5;
    c.target.cd_dt = 0.01;
    c.target.cd_sigma = 0.1;
    c.target.cd_obs_seed = 20240601;
    c.net.hidden = {200, 200};
    c.sampler.step_size = 3e-3;
    c.sampler.outer_iters = desk ? 300 : 500;
    c.sampler.inner_iters = 5;
    c.sampler.pretrain_steps = 100;
    c.sampler.optimizer.kind = OptimizerSpec::Kind::Adam;
    c.sampler.optimizer.lr = 1e-3;
    c.metrics = {"mmd_ref"};
    c.mmd_reference = desk ? "runs/cd-groundtruth-desk/snapshots.jsonl"
                           : "runs/cd-groundtruth/snapshots.jsonl";
    c.checkpoint_every = desk ? 10 : 25;
    c.snapshot_every = 0;
    return c;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"mixture-ada", "mixture-l2", "mixture-pfg", "mixture-expgf",
            "monomial-ada", "monomial-gwg", "cd-ada", "cd-pfg",
            "cd-svgd", "cd-groundtruth", "gaussian-sanity",
            "svgd-1d-gaussian", "lmc-1d-gaussian"};
}

ExperimentConfig preset_config(const std::string& name, bool desk_scale) {
    if (name == "mixture-ada") {
        auto c = mixture_base(name);
        c.sampler.method = SamplerSpec::Method::AdaGwg;
        c.sampler.young.kind = YoungConfig::Kind::Lp;
        c.sampler.young.p = 2.0;
        c.sampler.ada.p_lr = 2.5e-7;
        c.sampler.ada.grad_clip = 0.1;
        return c;
    }
    if (name == "mixture-l2") {
        auto c = mixture_base(name);
        c.sampler.method = SamplerSpec::Method::Gwg;
        c.sampler.young.kind = YoungConfig::Kind::Lp;
        c.sampler.young.p = 2.0;
        return c;
    }
    if (name == "mixture-pfg") {
        auto c = mixture_base(name);
        c.sampler.method = SamplerSpec::Method::Gwg;
        c.sampler.young.kind = YoungConfig::Kind::Pfg;
        c.sampler.young.pfg_alpha = 1.0;
        c.sampler.young.pfg_refresh_every = 1;
        return c;
    }
    if (name == "mixture-expgf") {
        auto c = mixture_base(name);
        c.sampler.method = SamplerSpec::Method::Gwg;
        c.sampler.young.kind = YoungConfig::Kind::Exp;
        c.sampler.young.sigma = 1.0;
        return c;
    }
    if (name == "monomial-ada") {
        auto c = monomial_base(name, desk_scale);
        c.sampler.method = SamplerSpec::Method::AdaGwg;
        c.sampler.young.kind = YoungConfig::Kind::Lp;
        c.sampler.young.p = 1.5;
        c.sampler.ada.p_lr = 1.0;
        c.sampler.ada.grad_clip = 0.1;
        return c;
    }
    if (name == "monomial-gwg") {
        auto c = monomial_base(name, desk_scale);
        c.sampler.method = SamplerSpec::Method::Gwg;
        c.sampler.young.kind = YoungConfig::Kind::Lp;
        c.sampler.young.p = 1.5;
        return c;
    }
    if (name == "cd-ada") {
        auto c = cd_base(name, desk_scale);
        c.sampler.method = SamplerSpec::Method::AdaGwg;
        c.sampler.young.kind = YoungConfig::Kind::Lp;
        c.sampler.young.p = 2.2;
        c.sampler.ada.p_lr = 1e-3;
        c.sampler.ada.grad_clip = 0.1;
        return c;
    }
    if (name == "cd-pfg") {
        auto c = cd_base(name, desk_scale);
        c.sampler.method = SamplerSpec::Method::Gwg;
        c.sampler.young.kind = YoungConfig::Kind::Pfg;
        c.sampler.young.pfg_alpha = 0.5;
        c.sampler.young.pfg_refresh_every = 1;
        return c;
    }
    if (name == "cd-svgd") {
        auto c = cd_base(name, desk_scale);
        c.sampler.method = SamplerSpec::Method::Svgd;
        c.sampler.step_size = 1e-3;
        return c;
    }
    if (name == "cd-groundtruth") {
        auto c = cd_base(desk_scale ? "cd-groundtruth-desk" : "cd-groundtruth", desk_scale);
        c.name = desk_scale ? "cd-groundtruth-desk" : "cd-groundtruth";
        c.particles = 1000;
        c.sampler.method = SamplerSpec::Method::Lmc;
        c.sampler.step_size = 1e-4;
        c.sampler.outer_iters = 10000;
        c.metrics = {};
        c.mmd_reference = "";
        c.checkpoint_every = 2000;
        c.snapshot_every = 0;
        return c;
    }
    if (name == "gaussian-sanity") {
        ExperimentConfig c;
        c.name = name;
        c.particles = 500;
        c.init_mean = {5.0, 5.0};
        c.init_std = 1.0;
        c.target = std_gaussian(2);
        c.net.hidden = {32, 32};
        c.sampler.method = SamplerSpec::Method::Gwg;
        c.sampler.young.kind = YoungConfig::Kind::Lp;
        c.sampler.young.p = 2.0;
        c.sampler.step_size = 0.1;
        c.sampler.outer_iters = 300;
        c.sampler.inner_iters = 5;
        c.sampler.optimizer.kind = OptimizerSpec::Kind::SgdMomentum;
        c.sampler.optimizer.nesterov = true;
        c.sampler.optimizer.lr = 1e-3;
        c.metrics = {"mean_norm", "cov_identity_fro"};
        c.checkpoint_every = 50;
        return c;
    }
    if (name == "svgd-1d-gaussian") {
        ExperimentConfig c;
        c.name = name;
        c.particles = 200;
        c.target = std_gaussian(1);
        c.sampler.method = SamplerSpec::Method::Svgd;
        c.sampler.step_size = 0.2;
        c.sampler.outer_iters = 2000;
        c.metrics = {"mean_norm"};
        c.checkpoint_every = 500;
        return c;
    }
    if (name == "lmc-1d-gaussian") {
        ExperimentConfig c;
        c.name = name;
        c.particles = 1000;
        c.target = std_gaussian(1);
        c.sampler.method = SamplerSpec::Method::Lmc;
        c.sampler.step_size = 1e-3;
        c.sampler.outer_iters = 20000;
        c.metrics = {"mean_norm"};
        c.checkpoint_every = 5000;
        return c;
    }
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "' (known: " + known + ")");
}

} // namespace gwg
