#include "gwgflow/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gwgflow/metrics.hpp"

namespace gwg {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json snapshot_json(const TrajectoryRecord& rec, const ParticleSystem& ps) {
    json line;
    line["iter"] = rec.iter;
    line["p"] = rec.p;       // NaN serializes as null
    line["loss"] = rec.loss; // NaN serializes as null
    json parts = json::array();
    for (int i = 0; i < ps.n; ++i) {
        json row = json::array();
        for (int j = 0; j < ps.d; ++j) row.push_back(ps.x[static_cast<std::size_t>(i) * ps.d + j]);
        parts.push_back(std::move(row));
    }
    line["particles"] = std::move(parts);
    return line;
}

using MetricFn = std::function<double(const ParticleSystem&)>;

std::vector<std::pair<std::string, MetricFn>> build_metrics(const ExperimentConfig& cfg,
                                                            const Target& target) {
    std::vector<std::pair<std::string, MetricFn>> out;
    for (const auto& name : cfg.metrics) {
        if (name == "mean_norm") {
            out.emplace_back(name, [](const ParticleSystem& ps) {
                return cloud_mean_norm(ps.x, ps.n, ps.d);
            });
        } else if (name == "cov_identity_fro") {
            out.emplace_back(name, [](const ParticleSystem& ps) {
                return cloud_cov_identity_fro(ps.x, ps.n, ps.d);
            });
        } else if (name == "js_target" || name == "kl_target") {
            HistGrid grid{cfg.metric_grid.lo, cfg.metric_grid.hi, cfg.metric_grid.bins};
            auto logd = [&target](std::span<const double> x) { return target.log_density_unnorm(x); };
            if (name == "js_target") {
                out.emplace_back(name, [grid, logd](const ParticleSystem& ps) {
                    return js_hist_vs_density(ps.x, ps.n, ps.d, logd, grid);
                });
            } else {
                out.emplace_back(name, [grid, logd](const ParticleSystem& ps) {
                    return kl_hist_vs_density(ps.x, ps.n, ps.d, logd, grid);
                });
            }
        } else if (name == "mmd_ref") {
            auto ref = std::make_shared<SnapshotCloud>(load_snapshot_cloud(cfg.mmd_reference));
            // bandwidth frozen on the ground-truth cloud so the series is
            // comparable across methods and iterations
            double bw = median_sq_distance(ref->x, ref->n, ref->d);
            if (!(bw > 0.0)) bw = 1.0;
            out.emplace_back(name, [ref, bw](const ParticleSystem& ps) {
                return mmd_sq_rbf(ps.x, ps.n, ref->x, ref->n, ps.d, bw);
            });
        } else {
            throw std::invalid_argument("unknown metric '" + name + "'");
        }
    }
    return out;
}

} // namespace

std::vector<double> cloud_mean(std::span<const double> x, int n, int d) {
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(i) * d + j];
    for (auto& m : mean) m /= n;
    return mean;
}

double cloud_mean_norm(std::span<const double> x, int n, int d) {
    const auto mean = cloud_mean(x, n, d);
    double s = 0.0;
    for (double m : mean) s += m * m;
    return std::sqrt(s);
}

double cloud_cov_identity_fro(std::span<const double> x, int n, int d) {
    const auto mean = cloud_mean(x, n, d);
    double fro = 0.0;
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            double cov = 0.0;
            for (int i = 0; i < n; ++i) {
                cov += (x[static_cast<std::size_t>(i) * d + a] - mean[static_cast<std::size_t>(a)]) *
                       (x[static_cast<std::size_t>(i) * d + b] - mean[static_cast<std::size_t>(b)]);
            }
            cov /= n;
            const double dev = cov - (a == b ? 1.0 : 0.0);
            fro += dev * dev;
        }
    }
    return std::sqrt(fro);
}

SnapshotCloud load_snapshot_cloud(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open snapshot file " + path);
    std::string line, last;
    while (std::getline(f, line)) {
        if (!line.empty()) last = line;
    }
    if (last.empty()) throw std::runtime_error("snapshot file is empty: " + path);
    const json j = json::parse(last);
    const auto& parts = j.at("particles");
    SnapshotCloud cloud;
    cloud.n = static_cast<int>(parts.size());
    if (cloud.n == 0) throw std::runtime_error("snapshot has no particles: " + path);
    cloud.d = static_cast<int>(parts.at(0).size());
    cloud.x.reserve(static_cast<std::size_t>(cloud.n) * cloud.d);
    for (const auto& row : parts) {
        for (const auto& v : row) cloud.x.push_back(v.get<double>());
    }
    return cloud;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, bool timing) {
    validate_config(cfg);
    fs::create_directories(cfg.output_dir);
    {
        std::ofstream cf(cfg.output_dir + "/config.json");
        cf << serialize_config(cfg);
    }

    auto target = cfg.target.build();
    const int d = target->dim();

    if (cfg.target.kind == TargetConfig::Kind::ConditionedDiffusion) {
        const auto* cd = dynamic_cast<const ConditionedDiffusionTarget*>(target.get());
        json obs;
        obs["observations"] = cd->observations();
        std::ofstream of(cfg.output_dir + "/observations.json");
        of << obs.dump(2) << "\n";
    }

    const auto metric_fns = build_metrics(cfg, *target);

    std::ofstream csv(cfg.output_dir + "/metrics.csv");
    csv << "iter,metric_name,value,wall_ms\n";
    std::ofstream jsonl(cfg.output_dir + "/snapshots.jsonl");

    const RngState base{cfg.seed, 0};
    ParticleSystem ps = ParticleSystem::init_gaussian(cfg.particles, d, cfg.init_mean,
                                                      cfg.init_std, base.split(0));

    std::int64_t last_snapshot_iter = -1;
    auto observe = [&](const TrajectoryRecord& rec, const ParticleSystem& sys) {
        for (const auto& [name, fn] : metric_fns) {
            csv << rec.iter << ',' << name << ',' << fmt_double(fn(sys)) << ',';
            if (timing) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.3f", rec.wall_ms);
                csv << buf;
            } else {
                csv << '0';
            }
            csv << '\n';
        }
        if (cfg.snapshot_every > 0 && rec.iter % cfg.snapshot_every == 0) {
            jsonl << snapshot_json(rec, sys).dump() << "\n";
            last_snapshot_iter = rec.iter;
        }
    };

    TrajectoryLog log;
    const auto method = cfg.sampler.method;
    if (method == SamplerSpec::Method::Gwg || method == SamplerSpec::Method::AdaGwg) {
        YoungFunction young = YoungFunction::lp(2.0);
        FlowOptions opts;
        opts.step_size = cfg.sampler.step_size;
        opts.outer_iters = cfg.sampler.outer_iters;
        opts.inner_iters = cfg.sampler.inner_iters;
        opts.pretrain_steps = cfg.sampler.pretrain_steps;
        opts.optimizer = cfg.sampler.optimizer;
        opts.divergence = cfg.sampler.divergence;
        opts.reinit_net_each_outer = cfg.sampler.reinit_net_each_outer;
        opts.checkpoint_every = cfg.checkpoint_every;
        switch (cfg.sampler.young.kind) {
            case YoungConfig::Kind::Lp:
                young = YoungFunction::lp(cfg.sampler.young.p);
                break;
            case YoungConfig::Kind::Pfg:
                young = YoungFunction::quadratic(std::vector<double>(static_cast<std::size_t>(d), 1.0));
                opts.pfg = true;
                opts.pfg_alpha = cfg.sampler.young.pfg_alpha;
                opts.pfg_refresh_every = cfg.sampler.young.pfg_refresh_every;
                break;
            case YoungConfig::Kind::Exp:
                young = YoungFunction::exp(cfg.sampler.young.sigma);
                break;
        }
        if (method == SamplerSpec::Method::AdaGwg) {
            opts.adaptive = true;
            opts.ada_p_lr = cfg.sampler.ada.p_lr;
            opts.ada_lb = cfg.sampler.ada.lb;
            opts.ada_ub = cfg.sampler.ada.ub;
            opts.ada_grad_clip = cfg.sampler.ada.grad_clip;
        }
        RngState net_rng = base.split(1);
        Mlp net = Mlp::init(d, cfg.net.hidden, cfg.net.activation, net_rng);
        log = gwg_run(opts, *target, ps, net, young, observe);
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        auto record = [&](double wall) {
            TrajectoryRecord rec{ps.iter, nan, nan, wall};
            log.records.push_back(rec);
            observe(rec, ps);
        };
        record(0.0);
        const auto t0 = std::chrono::steady_clock::now();
        for (int s = 0; s < cfg.sampler.outer_iters;) {
            const int chunk = std::min(cfg.checkpoint_every, cfg.sampler.outer_iters - s);
            if (method == SamplerSpec::Method::Svgd) {
                for (int k = 0; k < chunk; ++k) svgd_step(ps, *target, cfg.sampler.step_size);
            } else {
                lmc_run(ps, *target, cfg.sampler.step_size, chunk);
            }
            s += chunk;
            const double wall =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            int bad = -1;
            if (!ps.all_finite(&bad)) {
                log.diverged = true;
                log.failure = "iteration " + std::to_string(ps.iter) + ": non-finite position at particle " +
                              std::to_string(bad);
                break;
            }
            record(wall);
        }
    }

    if (ps.all_finite() && last_snapshot_iter != ps.iter) {
        TrajectoryRecord rec{ps.iter,
                             log.records.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : log.records.back().p,
                             log.records.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : log.records.back().loss,
                             log.records.empty() ? 0.0 : log.records.back().wall_ms};
        jsonl << snapshot_json(rec, ps).dump() << "\n";
    }

    if (log.diverged) return {false, log.failure};
    return {true, ""};
}

void compare_runs(const std::vector<std::string>& run_dirs, const std::string& out_path) {
    if (run_dirs.size() < 2) throw std::invalid_argument("compare: needs at least two run directories");

    struct RunData {
        std::string label;
        std::set<std::string> metric_names;
        std::vector<std::array<std::string, 3>> rows; // iter, metric, value
    };
    std::vector<RunData> runs;
    std::map<std::string, int> label_count;

    for (const auto& dir : run_dirs) {
        RunData rd;
        const ExperimentConfig cfg = load_config_file(dir + "/config.json");
        rd.label = cfg.name;
        const int c = ++label_count[rd.label];
        if (c > 1) rd.label += "#" + std::to_string(c);

        std::ifstream csv(dir + "/metrics.csv");
        if (!csv) throw std::runtime_error("compare: cannot open " + dir + "/metrics.csv");
        std::string line;
        std::getline(csv, line); // header
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string iter, metric, value;
            std::getline(ss, iter, ',');
            std::getline(ss, metric, ',');
            std::getline(ss, value, ',');
            rd.metric_names.insert(metric);
            rd.rows.push_back({iter, metric, value});
        }
        runs.push_back(std::move(rd));
    }

    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].metric_names != runs[0].metric_names) {
            auto join = [](const std::set<std::string>& s) {
                std::string out;
                for (const auto& m : s) out += (out.empty() ? "" : " ") + m;
                return out.empty() ? "(none)" : out;
            };
            throw std::runtime_error("compare: metric sets differ: " + runs[0].label + " has {" +
                                     join(runs[0].metric_names) + "} but " + runs[i].label +
                                     " has {" + join(runs[i].metric_names) + "}");
        }
    }

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("compare: cannot open output " + out_path);
    out << "method,iter,metric,value\n";
    for (const auto& rd : runs) {
        for (const auto& row : rd.rows) {
            out << rd.label << ',' << row[0] << ',' << row[1] << ',' << row[2] << '\n';
        }
    }
}

} // namespace gwg
