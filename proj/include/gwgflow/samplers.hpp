#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gwgflow/mlp.hpp"
#include "gwgflow/rng.hpp"
#include "gwgflow/target.hpp"
#include "gwgflow/young.hpp"

namespace gwg {

struct ParticleSystem {
    int n = 0;
    int d = 0;
    std::vector<double> x; // n x d, row-major
    std::int64_t iter = 0;
    RngState rng;

    static ParticleSystem init_gaussian(int n, int d, std::span<const double> mean, double stddev,
                                        RngState rng);

    std::span<double> particle(int i) { return {x.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)}; }
    std::span<const double> particle(int i) const { return {x.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)}; }
    bool all_finite(int* bad_index = nullptr) const;
};

struct TrajectoryRecord {
    std::int64_t iter = 0;
    double p = 0.0;    // current Lp exponent (NaN for non-Lp flows)
    double loss = 0.0; // last inner-loop training loss (NaN before any training)
    double wall_ms = 0.0;
};

struct TrajectoryLog {
    std::vector<TrajectoryRecord> records;
    bool diverged = false;
    std::string failure; // iteration index and offending particle dump
};

// Called at every checkpoint with the freshly appended record.
using Observer = std::function<void(const TrajectoryRecord&, const ParticleSystem&)>;

struct FlowOptions {
    double step_size = 0.1; // particle step h
    int outer_iters = 1000; // N
    int inner_iters = 5;    // N'
    int pretrain_steps = 0; // training steps on the initial cloud before any move
    OptimizerSpec optimizer;
    DivergenceSpec divergence;
    bool reinit_net_each_outer = false; // ablation hook; warm start is the default
    int checkpoint_every = 50;

    // Ada-GWG (Lp Young function only)
    bool adaptive = false;
    double ada_p_lr = 0.0;      // eta-tilde
    double ada_lb = 1.1;
    double ada_ub = 4.0;
    double ada_grad_clip = 0.1; // c_A, clip on dA/dp

    // PFG (Quadratic Young function): H = (diag particle variance)^{-alpha},
    // refreshed from the cloud every refresh_every outer iterations.
    bool pfg = false;
    double pfg_alpha = 1.0;
    int pfg_refresh_every = 1;
    double pfg_var_floor = 1e-6;
};

// Algorithm: N outer iterations; each runs N' ascent steps of the
// Stein-identity objective, then moves every particle by h * f_w(x).
// L2-GF is this with Lp(p=2), PFG with the refreshed Quadratic, Exp-GF with
// Exp(sigma). Aborts (log.diverged) on any non-finite particle, recording
// the iteration index and a dump of the offending particle.
TrajectoryLog gwg_run(const FlowOptions& opts, const Target& target, ParticleSystem& ps,
                      Mlp& net, YoungFunction& young, const Observer& observer = {});

// As gwg_run with opts.adaptive: after each inner loop computes
// A(p) = (1/n) sum_i (1/p) |f(x_i)|_p^p, its analytic p-derivative clipped
// into [-c_A, c_A], ascends p and clips into [lb, ub]. Requires young Lp and
// lb <= p0 <= ub.
TrajectoryLog ada_gwg_run(const FlowOptions& opts, const Target& target, ParticleSystem& ps,
                          Mlp& net, YoungFunction& young, const Observer& observer = {});

// A(p) and dA/dp for field values (n x d). Entries with f_ij = 0 contribute
// zero to the log term.
struct AHat {
    double value = 0.0;
    double d_dp = 0.0;
};
AHat a_hat_grad(double p, std::span<const double> field_values, int n, int d);

// One SVGD step:
//   x_i += (h/n) sum_j [ k(x_j, x_i) score(x_j) + grad_{x_j} k(x_j, x_i) ],
// RBF kernel with bandwidth med^2 / ln(n+1), med = median pairwise distance,
// recomputed every step (floored at 1e-8 when all particles coincide).
void svgd_step(ParticleSystem& ps, const Target& target, double h);

// Unadjusted Langevin: x += h score(x) + sqrt(2h) xi per particle per step,
// noise drawn from per-(step, particle) substreams of ps.rng.
void lmc_run(ParticleSystem& ps, const Target& target, double h, int steps);

// Single step with caller-provided noise (n x d), for tests.
void lmc_step_with_noise(ParticleSystem& ps, const Target& target, double h,
                         std::span<const double> noise);

inline double clip(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

} // namespace gwg
