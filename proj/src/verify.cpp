#include "gwgflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gwgflow/metrics.hpp"
#include "gwgflow/mlp.hpp"
#include "gwgflow/rng.hpp"
#include "gwgflow/target.hpp"
#include "gwgflow/young.hpp"

namespace gwg {

namespace {

std::vector<YoungFunction> test_young_set(int d, RngState& rng) {
    std::vector<double> h(static_cast<std::size_t>(d));
    for (auto& v : h) v = rng.next_uniform(0.5, 3.0);
    std::vector<YoungFunction> out;
    out.push_back(YoungFunction::lp(1.5));
    out.push_back(YoungFunction::lp(2.0));
    out.push_back(YoungFunction::lp(3.0));
    out.push_back(YoungFunction::quadratic(h));
    out.push_back(YoungFunction::exp(1.0));
    return out;
}

CheckResult check_fenchel_young() {
    RngState rng{2024001, 0};
    const int d = 3;
    auto gs = test_young_set(d, rng);
    double worst = 0.0;
    std::vector<double> y(d), v(d);
    for (auto& g : gs) {
        for (int trial = 0; trial < 60; ++trial) {
            for (auto& yi : y) yi = rng.next_uniform(-4.0, 4.0);
            g.conjugate_grad(y, v);
            double dot = 0.0;
            for (int j = 0; j < d; ++j) dot += y[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
            const double lhs = dot - g.value(v);
            const double rhs = g.conjugate_value(y);
            if (g.kind() == YoungFunction::Kind::Exp) continue; // closed form only for Lp/Quadratic
            const double err = std::fabs(lhs - rhs) / std::max(std::fabs(rhs), 1e-12);
            worst = std::max(worst, err);
        }
    }
    return {"fenchel-young", worst, 0.0, 1e-9, worst <= 1e-9};
}

CheckResult check_involution() {
    RngState rng{2024002, 0};
    const int d = 3;
    auto gs = test_young_set(d, rng);
    double worst = 0.0;
    std::vector<double> v(d), y(d), back(d);
    for (auto& g : gs) {
        for (int trial = 0; trial < 60; ++trial) {
            double norm = 0.0;
            for (auto& vi : v) {
                vi = rng.next_uniform(-1.0, 1.0);
                norm += vi * vi;
            }
            norm = std::sqrt(norm);
            const double scale = rng.next_uniform(0.05, 5.0) / std::max(norm, 1e-9);
            for (auto& vi : v) vi *= scale;
            g.grad(v, y);
            g.conjugate_grad(y, back);
            for (int j = 0; j < d; ++j) {
                const double err = std::fabs(back[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(j)]) /
                                   std::max(std::fabs(v[static_cast<std::size_t>(j)]), 1e-8);
                worst = std::max(worst, err);
            }
        }
    }
    return {"conjugate-involution", worst, 0.0, 1e-8, worst <= 1e-8};
}

CheckResult check_jvp_fd() {
    RngState rng{2024003, 0};
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
        const int d = 2 + t;
        Mlp net = Mlp::init(d, {7, 7}, Activation::Tanh, rng);
        MlpScratch ws;
        std::vector<double> x(static_cast<std::size_t>(d)), u(static_cast<std::size_t>(d));
        std::vector<double> jv(static_cast<std::size_t>(d)), fp(static_cast<std::size_t>(d)), fm(static_cast<std::size_t>(d));
        std::vector<double> xs(static_cast<std::size_t>(d));
        for (auto& v : x) v = rng.next_uniform(-2.0, 2.0);
        for (auto& v : u) v = rng.next_uniform(-1.0, 1.0);
        mlp_jvp(net, x, u, ws, jv);
        const double delta = 1e-5;
        for (int j = 0; j < d; ++j) xs[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] + delta * u[static_cast<std::size_t>(j)];
        mlp_forward(net, xs, ws, fp);
        for (int j = 0; j < d; ++j) xs[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] - delta * u[static_cast<std::size_t>(j)];
        mlp_forward(net, xs, ws, fm);
        for (int j = 0; j < d; ++j) {
            const double fd = (fp[static_cast<std::size_t>(j)] - fm[static_cast<std::size_t>(j)]) / (2.0 * delta);
            const double err = std::fabs(fd - jv[static_cast<std::size_t>(j)]) /
                               std::max({std::fabs(fd), std::fabs(jv[static_cast<std::size_t>(j)]), 1e-6});
            worst = std::max(worst, err);
        }
    }
    return {"jvp-finite-diff", worst, 0.0, 1e-6, worst <= 1e-6};
}

} // namespace

CheckResult check_hutchinson_enumeration(int n_nets) {
    RngState rng{2024004, 0};
    double worst = 0.0;
    for (int t = 0; t < n_nets; ++t) {
        const int d = 2 + t % 9; // 2..10
        Mlp net = Mlp::init(d, {6, 6}, t % 2 ? Activation::LeakyRelu : Activation::Tanh, rng);
        MlpScratch ws;
        std::vector<double> x(static_cast<std::size_t>(d)), probe(static_cast<std::size_t>(d));
        std::vector<double> jv(static_cast<std::size_t>(d));
        for (auto& v : x) v = rng.next_uniform(-2.0, 2.0);

        const double exact = divergence(net, x, {DivergenceSpec::Kind::Exact, 0}, rng, ws);

        double avg = 0.0;
        const std::uint64_t count = 1ULL << d;
        for (std::uint64_t mask = 0; mask < count; ++mask) {
            for (int j = 0; j < d; ++j) probe[static_cast<std::size_t>(j)] = (mask >> j) & 1 ? 1.0 : -1.0;
            mlp_jvp(net, x, probe, ws, jv);
            double quad = 0.0;
            for (int j = 0; j < d; ++j) quad += probe[static_cast<std::size_t>(j)] * jv[static_cast<std::size_t>(j)];
            avg += quad;
        }
        avg /= static_cast<double>(count);
        worst = std::max(worst, std::fabs(avg - exact));
    }
    return {"hutchinson-enumeration", worst, 0.0, 1e-10, worst <= 1e-10};
}

CheckResult check_loss_grad_fd(int n_nets) {
    RngState rng{2024005, 0};
    const int dims[] = {2, 5, 16};
    double worst = 0.0;
    for (int t = 0; t < n_nets; ++t) {
        const int d = dims[t % 3];
        const int n = 4;
        Mlp net = Mlp::init(d, {6, 6}, t % 2 ? Activation::LeakyRelu : Activation::Tanh, rng);
        RngState gdata = rng.split(static_cast<std::uint64_t>(t));
        std::vector<double> particles(static_cast<std::size_t>(n) * d), scores(static_cast<std::size_t>(n) * d);
        for (auto& v : particles) v = gdata.next_uniform(-2.0, 2.0);
        for (auto& v : scores) v = gdata.next_uniform(-2.0, 2.0);

        auto young = test_young_set(d, gdata);
        const YoungFunction& g = young[static_cast<std::size_t>(t) % young.size()];

        for (int mode = 0; mode < 2; ++mode) {
            DivergenceSpec spec;
            std::vector<double> frozen;
            if (mode == 0) {
                spec.kind = DivergenceSpec::Kind::Exact;
            } else {
                spec.kind = DivergenceSpec::Kind::Hutchinson;
                spec.probes = 2;
                frozen.resize(static_cast<std::size_t>(n) * spec.probes * d);
                for (auto& v : frozen) v = gdata.next_rademacher();
            }
            const double* fp = frozen.empty() ? nullptr : frozen.data();

            Mlp grad = Mlp::zeros_like(net);
            training_loss_grad(net, particles, scores, n, d, g, spec, gdata, grad, fp);

            const auto theta0 = flatten(net);
            const auto grad_flat = flatten(grad);
            Mlp probe_net = net;
            auto loss_of = [&](std::span<const double> theta) {
                unflatten(theta, probe_net);
                Mlp tmp = Mlp::zeros_like(probe_net);
                return training_loss_grad(probe_net, particles, scores, n, d, g, spec, gdata, tmp, fp);
            };
            const auto rep = finite_diff_check(loss_of, theta0, grad_flat, 1e-5, 1e-5, 1e-4);
            worst = std::max(worst, rep.max_rel_err);
        }
    }
    return {"loss-grad-finite-diff", worst, 0.0, 1e-5, worst <= 1e-5};
}

std::vector<CheckResult> check_example1_brackets() {
    std::vector<CheckResult> out;
    const double kl_floor = 1.0 / (10.0 * std::sqrt(2.0));
    for (double m : {0.5, 1.0, 2.0}) {
        const auto pi = gaussian_mixture_density_1d({0.5, 0.5}, {-m, m});
        const auto mu = gaussian_mixture_density_1d({0.75, 0.25}, {-m, m});
        QuadratureGrid grid{-(m + 10.0), m + 10.0, 20001};
        double kl = 0.0;
        for (double q : {1.0, 2.0, 4.0}) {
            const auto res = quadrature_1d(pi, mu, q, grid);
            kl = res.kl;
            const double lo = 0.08 / (q * m) * std::pow(m / 3.0, q) * std::exp(-m * m / 2.0);
            const double hi = 0.2 / (q * m) * std::pow(4.0 * m, q) * std::exp(-m * m / 2.0);
            char name[64];
            std::snprintf(name, sizeof(name), "example1-bracket-m%.1f-q%g", m, q);
            out.push_back({name, res.score_div, lo, hi,
                           res.score_div >= lo && res.score_div <= hi});
        }
        // The KL floor holds for the well-separated instances (m >= 1); at
        // m = 0.5 the mixtures overlap too much for this constant.
        if (m >= 1.0) {
            char name[64];
            std::snprintf(name, sizeof(name), "example1-kl-m%.1f", m);
            out.push_back({name, kl, kl_floor, std::numeric_limits<double>::infinity(),
                           kl >= kl_floor});
        }
    }
    return out;
}

std::vector<CheckResult> check_prop5_triangles(int trials_per_p) {
    RngState rng{2024006, 0};
    std::vector<CheckResult> out;
    const int n = 4, d = 2;
    std::vector<double> a(static_cast<std::size_t>(n) * d), b(a.size()), c(a.size());
    for (double p : {1.5, 2.0, 3.0}) {
        const YoungFunction g = YoungFunction::lp(p);
        double min_slack = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < trials_per_p; ++trial) {
            const double h = trial % 2 ? 1.0 : 0.5;
            for (auto& v : a) v = rng.next_uniform(-2.0, 2.0);
            for (auto& v : b) v = rng.next_uniform(-2.0, 2.0);
            for (auto& v : c) v = rng.next_uniform(-2.0, 2.0);
            const double ab = wc_metric_from_cost(discrete_wc_bruteforce(a, b, n, d, g, h), p, h);
            const double bc = wc_metric_from_cost(discrete_wc_bruteforce(b, c, n, d, g, h), p, h);
            const double ac = wc_metric_from_cost(discrete_wc_bruteforce(a, c, n, d, g, h), p, h);
            min_slack = std::min(min_slack, ab + bc - ac);
        }
        char name[48];
        std::snprintf(name, sizeof(name), "prop5-triangle-p%g", p);
        out.push_back({name, min_slack, -1e-9, std::numeric_limits<double>::infinity(),
                       min_slack >= -1e-9});
    }
    return out;
}

CheckResult check_cd_score_fd(bool corrupt_sign) {
    RngState rng{2024007, 0};
    const int steps = 20, stride = 5;
    const double dt = 0.01, sigma = 0.1;
    auto obs = ConditionedDiffusionTarget::generate_observations(steps, stride, dt, sigma,
                                                                 RngState{77, 0});
    ConditionedDiffusionTarget target(steps, stride, dt, sigma, std::move(obs));

    double worst = 0.0;
    std::vector<double> x(static_cast<std::size_t>(steps)), grad(x.size());
    for (int trial = 0; trial < 3; ++trial) {
        for (auto& v : x) v = 0.1 * rng.next_gaussian();
        target.score(x, grad);
        if (corrupt_sign) {
            for (auto& v : grad) v = -v;
        }
        auto logd = [&](std::span<const double> pt) { return target.log_density_unnorm(pt); };
        const auto rep = finite_diff_check(logd, x, grad, 1e-5, 1e-5, 1e-4);
        worst = std::max(worst, rep.max_rel_err);
    }
    return {"cd-score-finite-diff", worst, 0.0, 1e-5, worst <= 1e-5};
}

std::vector<CheckResult> verify_suite(const VerifyHooks& hooks) {
    std::vector<CheckResult> out;
    out.push_back(check_fenchel_young());
    out.push_back(check_involution());
    out.push_back(check_jvp_fd());
    out.push_back(check_hutchinson_enumeration(10));
    out.push_back(check_loss_grad_fd(20));
    for (auto& r : check_example1_brackets()) out.push_back(r);
    for (auto& r : check_prop5_triangles(1000)) out.push_back(r);
    out.push_back(check_cd_score_fd(hooks.corrupt_cd_score_sign));
    return out;
}

} // namespace gwg
