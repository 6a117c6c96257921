#include "gwgflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gwg {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) fail(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_req(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) fail(where + "." + key + ": missing");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(where + "." + key + ": wrong type");
    }
}

template <typename T>
T get_opt(const json& obj, const std::string& where, const std::string& key, T def) {
    if (!obj.contains(key)) return def;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(where + "." + key + ": wrong type");
    }
}

TargetConfig parse_target(const json& j) {
    TargetConfig t;
    const std::string kind = get_req<std::string>(j, "target", "kind");
    if (kind == "gaussian_mixture") {
        check_keys(j, "target", {"kind", "weights", "means", "variance"});
        t.kind = TargetConfig::Kind::GaussianMixture;
        t.weights = get_req<std::vector<double>>(j, "target", "weights");
        t.means = get_req<std::vector<std::vector<double>>>(j, "target", "means");
        t.variance = get_req<double>(j, "target", "variance");
    } else if (kind == "monomial_gamma") {
        check_keys(j, "target", {"kind", "a", "b", "epsilon"});
        t.kind = TargetConfig::Kind::MonomialGamma;
        t.mg_a = get_opt<double>(j, "target", "a", 0.3);
        t.mg_b = get_opt<double>(j, "target", "b", 0.9);
        t.mg_epsilon = get_opt<double>(j, "target", "epsilon", 1e-4);
    } else if (kind == "conditioned_diffusion") {
        check_keys(j, "target", {"kind", "steps", "stride", "dt", "sigma", "obs_seed"});
        t.kind = TargetConfig::Kind::ConditionedDiffusion;
        t.cd_steps = get_opt<int>(j, "target", "steps", 100);
        t.cd_stride = get_opt<int>(j, "target", "stride", 5);
        t.cd_dt = get_opt<double>(j, "target", "dt", 0.01);
        t.cd_sigma = get_opt<double>(j, "target", "sigma", 0.1);
        t.cd_obs_seed = get_opt<std::uint64_t>(j, "target", "obs_seed", 0);
    } else {
        fail("target.kind: unknown kind '" + kind + "'");
    }
    return t;
}

json target_to_json(const TargetConfig& t) {
    json j;
    switch (t.kind) {
        case TargetConfig::Kind::GaussianMixture:
            j["kind"] = "gaussian_mixture";
            j["weights"] = t.weights;
            j["means"] = t.means;
            j["variance"] = t.variance;
            break;
        case TargetConfig::Kind::MonomialGamma:
            j["kind"] = "monomial_gamma";
            j["a"] = t.mg_a;
            j["b"] = t.mg_b;
            j["epsilon"] = t.mg_epsilon;
            break;
        case TargetConfig::Kind::ConditionedDiffusion:
            j["kind"] = "conditioned_diffusion";
            j["steps"] = t.cd_steps;
            j["stride"] = t.cd_stride;
            j["dt"] = t.cd_dt;
            j["sigma"] = t.cd_sigma;
            j["obs_seed"] = t.cd_obs_seed;
            break;
    }
    return j;
}

SamplerSpec parse_sampler(const json& j) {
    SamplerSpec s;
    const std::string method = get_req<std::string>(j, "sampler", "method");
    const bool flow = method == "gwg" || method == "ada_gwg";
    if (method == "gwg") s.method = SamplerSpec::Method::Gwg;
    else if (method == "ada_gwg") s.method = SamplerSpec::Method::AdaGwg;
    else if (method == "svgd") s.method = SamplerSpec::Method::Svgd;
    else if (method == "lmc") s.method = SamplerSpec::Method::Lmc;
    else fail("sampler.method: unknown method '" + method + "'");

    std::set<std::string> allowed{"method", "step_size", "outer_iters"};
    if (flow) {
        allowed.insert({"inner_iters", "pretrain_steps", "reinit_net_each_outer", "young",
                        "optimizer", "divergence"});
    }
    if (s.method == SamplerSpec::Method::AdaGwg) allowed.insert("ada");
    check_keys(j, "sampler", allowed);

    s.step_size = get_req<double>(j, "sampler", "step_size");
    s.outer_iters = get_req<int>(j, "sampler", "outer_iters");
    if (!flow) return s;

    s.inner_iters = get_opt<int>(j, "sampler", "inner_iters", 5);
    s.pretrain_steps = get_opt<int>(j, "sampler", "pretrain_steps", 0);
    s.reinit_net_each_outer = get_opt<bool>(j, "sampler", "reinit_net_each_outer", false);

    if (j.contains("young")) {
        const json& y = j.at("young");
        const std::string kind = get_req<std::string>(y, "sampler.young", "kind");
        if (kind == "lp") {
            check_keys(y, "sampler.young", {"kind", "p"});
            s.young.kind = YoungConfig::Kind::Lp;
            s.young.p = get_opt<double>(y, "sampler.young", "p", 2.0);
        } else if (kind == "pfg") {
            check_keys(y, "sampler.young", {"kind", "alpha", "refresh_every"});
            s.young.kind = YoungConfig::Kind::Pfg;
            s.young.pfg_alpha = get_opt<double>(y, "sampler.young", "alpha", 1.0);
            s.young.pfg_refresh_every = get_opt<int>(y, "sampler.young", "refresh_every", 1);
        } else if (kind == "exp") {
            check_keys(y, "sampler.young", {"kind", "sigma"});
            s.young.kind = YoungConfig::Kind::Exp;
            s.young.sigma = get_opt<double>(y, "sampler.young", "sigma", 1.0);
        } else {
            fail("sampler.young.kind: unknown kind '" + kind + "'");
        }
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        check_keys(o, "sampler.optimizer", {"kind", "lr", "momentum"});
        const std::string kind = get_req<std::string>(o, "sampler.optimizer", "kind");
        if (kind == "sgd_nesterov" || kind == "sgd_momentum") {
            s.optimizer.kind = OptimizerSpec::Kind::SgdMomentum;
            s.optimizer.nesterov = kind == "sgd_nesterov";
            s.optimizer.momentum = get_opt<double>(o, "sampler.optimizer", "momentum", 0.9);
        } else if (kind == "adam") {
            s.optimizer.kind = OptimizerSpec::Kind::Adam;
        } else {
            fail("sampler.optimizer.kind: unknown kind '" + kind + "'");
        }
        s.optimizer.lr = get_opt<double>(o, "sampler.optimizer", "lr", 1e-3);
    }
    if (j.contains("divergence")) {
        const json& dv = j.at("divergence");
        check_keys(dv, "sampler.divergence", {"kind", "probes"});
        const std::string kind = get_req<std::string>(dv, "sampler.divergence", "kind");
        if (kind == "exact") s.divergence.kind = DivergenceSpec::Kind::Exact;
        else if (kind == "hutchinson") s.divergence.kind = DivergenceSpec::Kind::Hutchinson;
        else fail("sampler.divergence.kind: unknown kind '" + kind + "'");
        s.divergence.probes = get_opt<int>(dv, "sampler.divergence", "probes", 1);
    }
    if (s.method == SamplerSpec::Method::AdaGwg && j.contains("ada")) {
        const json& a = j.at("ada");
        check_keys(a, "sampler.ada", {"p_lr", "lb", "ub", "grad_clip"});
        s.ada.p_lr = get_opt<double>(a, "sampler.ada", "p_lr", 0.0);
        s.ada.lb = get_opt<double>(a, "sampler.ada", "lb", 1.1);
        s.ada.ub = get_opt<double>(a, "sampler.ada", "ub", 4.0);
        s.ada.grad_clip = get_opt<double>(a, "sampler.ada", "grad_clip", 0.1);
    }
    return s;
}

json sampler_to_json(const SamplerSpec& s) {
    json j;
    switch (s.method) {
        case SamplerSpec::Method::Gwg: j["method"] = "gwg"; break;
        case SamplerSpec::Method::AdaGwg: j["method"] = "ada_gwg"; break;
        case SamplerSpec::Method::Svgd: j["method"] = "svgd"; break;
        case SamplerSpec::Method::Lmc: j["method"] = "lmc"; break;
    }
    j["step_size"] = s.step_size;
    j["outer_iters"] = s.outer_iters;
    if (s.method != SamplerSpec::Method::Gwg && s.method != SamplerSpec::Method::AdaGwg) return j;

    j["inner_iters"] = s.inner_iters;
    j["pretrain_steps"] = s.pretrain_steps;
    j["reinit_net_each_outer"] = s.reinit_net_each_outer;
    json y;
    switch (s.young.kind) {
        case YoungConfig::Kind::Lp:
            y["kind"] = "lp";
            y["p"] = s.young.p;
            break;
        case YoungConfig::Kind::Pfg:
            y["kind"] = "pfg";
            y["alpha"] = s.young.pfg_alpha;
            y["refresh_every"] = s.young.pfg_refresh_every;
            break;
        case YoungConfig::Kind::Exp:
            y["kind"] = "exp";
            y["sigma"] = s.young.sigma;
            break;
    }
    j["young"] = y;
    json o;
    o["kind"] = s.optimizer.kind == OptimizerSpec::Kind::Adam
                    ? "adam"
                    : (s.optimizer.nesterov ? "sgd_nesterov" : "sgd_momentum");
    o["lr"] = s.optimizer.lr;
    if (s.optimizer.kind == OptimizerSpec::Kind::SgdMomentum) o["momentum"] = s.optimizer.momentum;
    j["optimizer"] = o;
    json dv;
    dv["kind"] = s.divergence.kind == DivergenceSpec::Kind::Exact ? "exact" : "hutchinson";
    if (s.divergence.kind == DivergenceSpec::Kind::Hutchinson) dv["probes"] = s.divergence.probes;
    j["divergence"] = dv;
    if (s.method == SamplerSpec::Method::AdaGwg) {
        json a;
        a["p_lr"] = s.ada.p_lr;
        a["lb"] = s.ada.lb;
        a["ub"] = s.ada.ub;
        a["grad_clip"] = s.ada.grad_clip;
        j["ada"] = a;
    }
    return j;
}

const std::set<std::string> kMetricNames{"mean_norm", "cov_identity_fro", "js_target",
                                         "kl_target", "mmd_ref"};

} // namespace

int TargetConfig::dim() const {
    switch (kind) {
        case Kind::GaussianMixture: return means.empty() ? 0 : static_cast<int>(means[0].size());
        case Kind::MonomialGamma: return 2;
        case Kind::ConditionedDiffusion: return cd_steps;
    }
    return 0;
}

std::unique_ptr<Target> TargetConfig::build() const {
    switch (kind) {
        case Kind::GaussianMixture: {
            std::vector<double> flat;
            for (const auto& m : means) flat.insert(flat.end(), m.begin(), m.end());
            return std::make_unique<GaussianMixtureTarget>(weights, flat, dim(), variance);
        }
        case Kind::MonomialGamma:
            return std::make_unique<MonomialGammaTarget>(mg_a, mg_b, mg_epsilon);
        case Kind::ConditionedDiffusion: {
            auto obs = ConditionedDiffusionTarget::generate_observations(
                cd_steps, cd_stride, cd_dt, cd_sigma, RngState{cd_obs_seed, 0});
            return std::make_unique<ConditionedDiffusionTarget>(cd_steps, cd_stride, cd_dt,
                                                                cd_sigma, std::move(obs));
        }
    }
    throw std::logic_error("target: unreachable");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"name", "seed", "particles", "init", "target", "net", "sampler", "metrics",
                "metric_grid", "mmd_reference", "checkpoint_every", "snapshot_every",
                "output_dir"});
    ExperimentConfig c;
    c.name = get_req<std::string>(j, "config", "name");
    c.seed = get_opt<std::uint64_t>(j, "config", "seed", 1);
    c.particles = get_req<int>(j, "config", "particles");
    if (j.contains("init")) {
        const json& ini = j.at("init");
        check_keys(ini, "init", {"mean", "std"});
        c.init_mean = get_opt<std::vector<double>>(ini, "init", "mean", {});
        c.init_std = get_opt<double>(ini, "init", "std", 1.0);
    }
    c.target = parse_target(j.at("target"));
    if (j.contains("net")) {
        const json& n = j.at("net");
        check_keys(n, "net", {"hidden", "activation"});
        c.net.hidden = get_opt<std::vector<int>>(n, "net", "hidden", {32, 32});
        const std::string act = get_opt<std::string>(n, "net", "activation", "tanh");
        if (act == "tanh") c.net.activation = Activation::Tanh;
        else if (act == "leaky_relu") c.net.activation = Activation::LeakyRelu;
        else fail("net.activation: unknown activation '" + act + "'");
    }
    c.sampler = parse_sampler(j.at("sampler"));
    c.metrics = get_opt<std::vector<std::string>>(j, "config", "metrics", {});
    if (j.contains("metric_grid")) {
        const json& g = j.at("metric_grid");
        check_keys(g, "metric_grid", {"lo", "hi", "bins"});
        c.metric_grid.lo = get_req<std::vector<double>>(g, "metric_grid", "lo");
        c.metric_grid.hi = get_req<std::vector<double>>(g, "metric_grid", "hi");
        c.metric_grid.bins = get_opt<int>(g, "metric_grid", "bins", 50);
    }
    c.mmd_reference = get_opt<std::string>(j, "config", "mmd_reference", "");
    c.checkpoint_every = get_opt<int>(j, "config", "checkpoint_every", 50);
    c.snapshot_every = get_opt<int>(j, "config", "snapshot_every", 0);
    c.output_dir = get_opt<std::string>(j, "config", "output_dir", "runs/" + c.name);
    validate_config(c);
    return c;
}

std::string serialize_config(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["particles"] = c.particles;
    json ini;
    ini["mean"] = c.init_mean;
    ini["std"] = c.init_std;
    j["init"] = ini;
    j["target"] = target_to_json(c.target);
    json n;
    n["hidden"] = c.net.hidden;
    n["activation"] = c.net.activation == Activation::Tanh ? "tanh" : "leaky_relu";
    j["net"] = n;
    j["sampler"] = sampler_to_json(c.sampler);
    j["metrics"] = c.metrics;
    if (!c.metric_grid.lo.empty()) {
        json g;
        g["lo"] = c.metric_grid.lo;
        g["hi"] = c.metric_grid.hi;
        g["bins"] = c.metric_grid.bins;
        j["metric_grid"] = g;
    }
    if (!c.mmd_reference.empty()) j["mmd_reference"] = c.mmd_reference;
    j["checkpoint_every"] = c.checkpoint_every;
    j["snapshot_every"] = c.snapshot_every;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("cannot open file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& c) {
    if (c.name.empty()) fail("name: must be nonempty");
    if (c.particles < 1) fail("particles: must be >= 1");
    if (!(c.init_std > 0.0)) fail("init.std: must be > 0");
    const int d = c.target.dim();
    if (d <= 0) fail("target: dimension must be positive");
    if (!c.init_mean.empty() && static_cast<int>(c.init_mean.size()) != d) {
        fail("init.mean: length must match target dimension");
    }
    if (c.target.kind == TargetConfig::Kind::GaussianMixture) {
        if (c.target.weights.size() != c.target.means.size() || c.target.weights.empty()) {
            fail("target.means: must have one row per weight");
        }
        for (const auto& m : c.target.means) {
            if (static_cast<int>(m.size()) != d) fail("target.means: rows must share one dimension");
        }
        double sum = 0.0;
        for (double w : c.target.weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-12) fail("target.weights: must sum to 1");
        if (!(c.target.variance > 0.0)) fail("target.variance: must be > 0");
    }
    if (c.target.kind == TargetConfig::Kind::MonomialGamma) {
        if (!(c.target.mg_b > 0.0 && c.target.mg_b < 1.0)) fail("target.b: must be in (0, 1)");
        if (!(c.target.mg_epsilon >= 0.0)) fail("target.epsilon: must be >= 0");
    }
    if (c.target.kind == TargetConfig::Kind::ConditionedDiffusion) {
        if (c.target.cd_steps <= 0) fail("target.steps: must be > 0");
        if (c.target.cd_stride <= 0 || c.target.cd_steps % c.target.cd_stride != 0) {
            fail("target.stride: steps must be divisible by stride");
        }
        if (!(c.target.cd_dt > 0.0)) fail("target.dt: must be > 0");
        if (!(c.target.cd_sigma > 0.0)) fail("target.sigma: must be > 0");
    }

    const auto& s = c.sampler;
    if (!(s.step_size > 0.0)) fail("sampler.step_size: must be > 0");
    if (s.outer_iters < 1) fail("sampler.outer_iters: must be >= 1");
    const bool flow = s.method == SamplerSpec::Method::Gwg || s.method == SamplerSpec::Method::AdaGwg;
    if (flow) {
        if (s.inner_iters < 0) fail("sampler.inner_iters: must be >= 0");
        if (s.pretrain_steps < 0) fail("sampler.pretrain_steps: must be >= 0");
        for (int hdim : c.net.hidden) {
            if (hdim < 1) fail("net.hidden: widths must be >= 1");
        }
        if (s.young.kind == YoungConfig::Kind::Lp && !(s.young.p > 1.0)) fail("sampler.young.p: must be > 1");
        if (s.young.kind == YoungConfig::Kind::Exp && !(s.young.sigma > 0.0)) fail("sampler.young.sigma: must be > 0");
        if (s.young.kind == YoungConfig::Kind::Pfg && s.young.pfg_refresh_every < 1) {
            fail("sampler.young.refresh_every: must be >= 1");
        }
        if (!(s.optimizer.lr > 0.0)) fail("sampler.optimizer.lr: must be > 0");
        if (s.divergence.kind == DivergenceSpec::Kind::Hutchinson && s.divergence.probes < 1) {
            fail("sampler.divergence.probes: must be >= 1");
        }
    }
    if (s.method == SamplerSpec::Method::AdaGwg) {
        if (s.young.kind != YoungConfig::Kind::Lp) fail("sampler.young.kind: ada_gwg requires lp");
        if (!(s.ada.lb > 1.0)) fail("sampler.ada.lb: must be > 1 (got " + std::to_string(s.ada.lb) + ")");
        if (!(s.ada.ub >= s.ada.lb)) fail("sampler.ada.ub: must be >= lb");
        if (s.young.p < s.ada.lb || s.young.p > s.ada.ub) {
            fail("sampler.young.p: initial p must lie within [lb, ub]");
        }
        if (!(s.ada.grad_clip > 0.0)) fail("sampler.ada.grad_clip: must be > 0");
        if (s.ada.p_lr < 0.0) fail("sampler.ada.p_lr: must be >= 0");
    }

    bool needs_grid = false;
    for (const auto& m : c.metrics) {
        if (!kMetricNames.count(m)) fail("metrics: unknown metric '" + m + "'");
        if (m == "js_target" || m == "kl_target") needs_grid = true;
        if (m == "mmd_ref" && c.mmd_reference.empty()) fail("mmd_reference: required by metric mmd_ref");
    }
    if (needs_grid) {
        if (c.metric_grid.lo.size() != static_cast<std::size_t>(d) ||
            c.metric_grid.hi.size() != c.metric_grid.lo.size()) {
            fail("metric_grid: lo/hi must match target dimension");
        }
        for (std::size_t i = 0; i < c.metric_grid.lo.size(); ++i) {
            if (!(c.metric_grid.hi[i] > c.metric_grid.lo[i])) fail("metric_grid: hi must exceed lo");
        }
        if (c.metric_grid.bins < 2) fail("metric_grid.bins: must be >= 2");
        if (d > 2) fail("metric_grid: histogram metrics support dimension <= 2");
    }
    if (c.checkpoint_every < 1) fail("checkpoint_every: must be >= 1");
    if (c.snapshot_every < 0) fail("snapshot_every: must be >= 0");
    if (c.output_dir.empty()) fail("output_dir: must be nonempty");
}

} // namespace gwg
