#include "gwgflow/samplers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gwgflow/metrics.hpp"
#include "gwgflow/parallel.hpp"

namespace gwg {

namespace {

// Substream keys off ps.rng. Particle init consumes the base stream
// directly (see ParticleSystem::init_gaussian); everything below derives
// pure child streams so that worker count never touches the draw order.
constexpr std::uint64_t kStreamTrain = 1;
constexpr std::uint64_t kStreamPretrain = 2;
constexpr std::uint64_t kStreamLmc = 3;

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

void compute_scores(const Target& target, const ParticleSystem& ps, std::vector<double>& out) {
    out.resize(ps.x.size());
    parallel_for(static_cast<std::size_t>(ps.n), [&](std::size_t i) {
        target.score(ps.particle(static_cast<int>(i)),
                     {out.data() + i * static_cast<std::size_t>(ps.d), static_cast<std::size_t>(ps.d)});
    });
}

void compute_field(const Mlp& net, const ParticleSystem& ps, std::vector<double>& out) {
    out.resize(ps.x.size());
    parallel_chunks(static_cast<std::size_t>(ps.n), kDefaultChunk,
                    [&](std::size_t, std::size_t lo, std::size_t hi) {
        MlpScratch ws;
        ws.resize(net);
        for (std::size_t i = lo; i < hi; ++i) {
            mlp_forward(net, ps.particle(static_cast<int>(i)),
                        ws, {out.data() + i * static_cast<std::size_t>(ps.d), static_cast<std::size_t>(ps.d)});
        }
    });
}

std::string dump_particle(const ParticleSystem& ps, int i) {
    std::ostringstream os;
    os << "particle " << i << " = [";
    for (int j = 0; j < ps.d; ++j) {
        if (j) os << ", ";
        os << ps.x[static_cast<std::size_t>(i) * ps.d + j];
    }
    os << "]";
    return os.str();
}

TrajectoryLog run_flow(const FlowOptions& opts, const Target& target, ParticleSystem& ps,
                       Mlp& net, YoungFunction& young, const Observer& observer) {
    if (!(opts.step_size > 0.0)) throw std::invalid_argument("gwg: step size must be > 0");
    if (opts.inner_iters < 0) throw std::invalid_argument("gwg: inner iterations must be >= 0");
    if (opts.adaptive) {
        if (young.kind() != YoungFunction::Kind::Lp) throw std::invalid_argument("ada-gwg: young must be Lp");
        if (!(opts.ada_lb > 1.0)) throw std::invalid_argument("ada-gwg: lb must be > 1");
        if (!(opts.ada_ub >= opts.ada_lb)) throw std::invalid_argument("ada-gwg: ub must be >= lb");
        if (young.p() < opts.ada_lb || young.p() > opts.ada_ub) {
            throw std::invalid_argument("ada-gwg: requires lb <= p0 <= ub");
        }
    }
    if (opts.pfg && young.kind() != YoungFunction::Kind::Quadratic) {
        throw std::invalid_argument("pfg: young must be Quadratic");
    }

    TrajectoryLog log;
    const double t0 = now_ms();
    const Mlp net0 = opts.reinit_net_each_outer ? net : Mlp{};
    Optimizer opt(opts.optimizer, net);
    Mlp grad = Mlp::zeros_like(net);
    std::vector<double> scores, field;

    double loss = std::numeric_limits<double>::quiet_NaN();
    auto current_p = [&]() {
        return young.kind() == YoungFunction::Kind::Lp ? young.p()
                                                       : std::numeric_limits<double>::quiet_NaN();
    };
    auto checkpoint = [&]() {
        TrajectoryRecord rec{ps.iter, current_p(), loss, now_ms() - t0};
        log.records.push_back(rec);
        if (observer) observer(rec, ps);
    };
    auto refresh_pfg = [&]() {
        std::vector<double> h(static_cast<std::size_t>(ps.d));
        for (int j = 0; j < ps.d; ++j) {
            double mean = 0.0;
            for (int i = 0; i < ps.n; ++i) mean += ps.x[static_cast<std::size_t>(i) * ps.d + j];
            mean /= ps.n;
            double var = 0.0;
            for (int i = 0; i < ps.n; ++i) {
                const double dv = ps.x[static_cast<std::size_t>(i) * ps.d + j] - mean;
                var += dv * dv;
            }
            var /= ps.n;
            h[static_cast<std::size_t>(j)] = std::pow(std::max(var, opts.pfg_var_floor), -opts.pfg_alpha);
        }
        young.set_h_diag(std::move(h));
    };

    checkpoint(); // initial state

    if (opts.pretrain_steps > 0) {
        compute_scores(target, ps, scores);
        const RngState base = ps.rng.split(kStreamPretrain);
        for (int s = 0; s < opts.pretrain_steps; ++s) {
            loss = training_loss_grad(net, ps.x, scores, ps.n, ps.d, young, opts.divergence,
                                      base.split(static_cast<std::uint64_t>(s)), grad);
            opt.step(net, grad, /*ascent=*/true);
        }
    }

    const RngState train_base = ps.rng.split(kStreamTrain);
    for (int k = 0; k < opts.outer_iters; ++k) {
        if (opts.reinit_net_each_outer) {
            net = net0;
            opt.reset();
        }
        if (opts.pfg && k % opts.pfg_refresh_every == 0) refresh_pfg();

        compute_scores(target, ps, scores);
        const RngState outer_rng = train_base.split(static_cast<std::uint64_t>(k));
        try {
            for (int t = 0; t < opts.inner_iters; ++t) {
                loss = training_loss_grad(net, ps.x, scores, ps.n, ps.d, young, opts.divergence,
                                          outer_rng.split(static_cast<std::uint64_t>(t)), grad);
                opt.step(net, grad, /*ascent=*/true);
            }
        } catch (const std::runtime_error& e) {
            log.diverged = true;
            log.failure = "iteration " + std::to_string(ps.iter) + ": " + e.what();
            return log;
        }

        compute_field(net, ps, field);

        if (opts.adaptive) {
            const AHat a = a_hat_grad(young.p(), field, ps.n, ps.d);
            const double step = clip(a.d_dp, -opts.ada_grad_clip, opts.ada_grad_clip);
            const double p_next = clip(young.p() + opts.ada_p_lr * step, opts.ada_lb, opts.ada_ub);
            young.set_p(p_next);
        }

        for (std::size_t i = 0; i < ps.x.size(); ++i) ps.x[i] += opts.step_size * field[i];
        ps.iter += 1;

        int bad = -1;
        if (!ps.all_finite(&bad)) {
            log.diverged = true;
            log.failure = "iteration " + std::to_string(ps.iter) + ": non-finite position, " +
                          dump_particle(ps, bad);
            return log;
        }

        if (opts.checkpoint_every > 0 &&
            ((k + 1) % opts.checkpoint_every == 0 || k + 1 == opts.outer_iters)) {
            checkpoint();
        }
    }
    return log;
}

} // namespace

ParticleSystem ParticleSystem::init_gaussian(int n, int d, std::span<const double> mean,
                                             double stddev, RngState rng) {
    if (n <= 0 || d <= 0) throw std::invalid_argument("particles: n and d must be positive");
    ParticleSystem ps;
    ps.n = n;
    ps.d = d;
    ps.rng = rng;
    ps.x.resize(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double m = mean.empty() ? 0.0 : mean[static_cast<std::size_t>(j)];
            ps.x[static_cast<std::size_t>(i) * d + j] = m + stddev * ps.rng.next_gaussian();
        }
    }
    return ps;
}

bool ParticleSystem::all_finite(int* bad_index) const {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            if (!std::isfinite(x[static_cast<std::size_t>(i) * d + j])) {
                if (bad_index) *bad_index = i;
                return false;
            }
        }
    }
    return true;
}

TrajectoryLog gwg_run(const FlowOptions& opts, const Target& target, ParticleSystem& ps,
                      Mlp& net, YoungFunction& young, const Observer& observer) {
    return run_flow(opts, target, ps, net, young, observer);
}

TrajectoryLog ada_gwg_run(const FlowOptions& opts, const Target& target, ParticleSystem& ps,
                          Mlp& net, YoungFunction& young, const Observer& observer) {
    FlowOptions o = opts;
    o.adaptive = true;
    return run_flow(o, target, ps, net, young, observer);
}

AHat a_hat_grad(double p, std::span<const double> field_values, int n, int d) {
    if (!(p > 1.0)) throw std::invalid_argument("a_hat_grad: requires p > 1");
    double value = 0.0, dlog = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0, slog = 0.0;
        for (int j = 0; j < d; ++j) {
            const double a = std::fabs(field_values[static_cast<std::size_t>(i) * d + j]);
            if (a == 0.0) continue;
            const double ap = std::pow(a, p);
            s += ap;
            slog += ap * std::log(a);
        }
        value += s / p;
        dlog += -s / (p * p) + slog / p;
    }
    return {value / n, dlog / n};
}

void svgd_step(ParticleSystem& ps, const Target& target, double h) {
    if (ps.n < 1) throw std::invalid_argument("svgd: needs at least one particle");
    const int n = ps.n;
    const int d = ps.d;
    std::vector<double> scores;
    compute_scores(target, ps, scores);

    double bandwidth = median_sq_distance(ps.x, n, d) / std::log(n + 1.0);
    if (!(bandwidth > 1e-8)) bandwidth = 1e-8;

    std::vector<double> phi(ps.x.size(), 0.0);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        double* out = phi.data() + i * static_cast<std::size_t>(d);
        const double* xi = ps.x.data() + i * static_cast<std::size_t>(d);
        for (int j = 0; j < n; ++j) {
            const double* xj = ps.x.data() + static_cast<std::size_t>(j) * d;
            double sq = 0.0;
            for (int k = 0; k < d; ++k) {
                const double dv = xj[k] - xi[k];
                sq += dv * dv;
            }
            const double kv = std::exp(-sq / bandwidth);
            const double* sj = scores.data() + static_cast<std::size_t>(j) * d;
            for (int k = 0; k < d; ++k) {
                // grad_{x_j} k(x_j, x_i) = 2 (x_i - x_j) / bw * k
                out[k] += kv * sj[k] + 2.0 * (xi[k] - xj[k]) / bandwidth * kv;
            }
        }
    });
    const double scale = h / n;
    for (std::size_t i = 0; i < ps.x.size(); ++i) ps.x[i] += scale * phi[i];
    ps.iter += 1;
}

void lmc_step_with_noise(ParticleSystem& ps, const Target& target, double h,
                         std::span<const double> noise) {
    if (!(h > 0.0)) throw std::invalid_argument("lmc: step size must be > 0");
    const double diff = std::sqrt(2.0 * h);
    std::vector<double> scores;
    compute_scores(target, ps, scores);
    for (std::size_t i = 0; i < ps.x.size(); ++i) ps.x[i] += h * scores[i] + diff * noise[i];
    ps.iter += 1;
}

void lmc_run(ParticleSystem& ps, const Target& target, double h, int steps) {
    if (!(h > 0.0)) throw std::invalid_argument("lmc: step size must be > 0");
    const double diff = std::sqrt(2.0 * h);
    const RngState base = ps.rng.split(kStreamLmc);
    std::vector<double> scores;
    for (int s = 0; s < steps; ++s) {
        compute_scores(target, ps, scores);
        const RngState step_rng = base.split(static_cast<std::uint64_t>(ps.iter));
        parallel_for(static_cast<std::size_t>(ps.n), [&](std::size_t i) {
            RngState r = step_rng.split(i);
            double* xi = ps.x.data() + i * static_cast<std::size_t>(ps.d);
            const double* si = scores.data() + i * static_cast<std::size_t>(ps.d);
            for (int j = 0; j < ps.d; ++j) xi[j] += h * si[j] + diff * r.next_gaussian();
        });
        ps.iter += 1;
    }
}

} // namespace gwg
