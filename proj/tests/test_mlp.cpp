#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gwgflow/mlp.hpp"
#include "gwgflow/rng.hpp"
#include "gwgflow/verify.hpp"
#include "gwgflow/young.hpp"

using namespace gwg;

namespace {

Mlp linear_net(const std::vector<double>& w_rowmajor, int d) {
    RngState rng{1, 0};
    Mlp net = Mlp::init(d, {}, Activation::Tanh, rng);
    net.layers[0].w = w_rowmajor;
    std::fill(net.layers[0].b.begin(), net.layers[0].b.end(), 0.0);
    return net;
}

} // namespace

TEST_CASE("forward: zero net maps everything to zero") {
    RngState rng{2, 0};
    Mlp net = Mlp::init(3, {8, 8}, Activation::Tanh, rng);
    net.fill(0.0);
    MlpScratch ws;
    std::vector<double> out(3);
    mlp_forward(net, std::vector<double>{1.0, -2.0, 0.5}, ws, out);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("forward: single linear layer") {
    Mlp net = linear_net({2.0, 0.0, 0.0, 2.0}, 2);
    MlpScratch ws;
    std::vector<double> out(2);
    mlp_forward(net, std::vector<double>{1.0, -3.0}, ws, out);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == -6.0);
}

TEST_CASE("forward matches an independent straight-line evaluation") {
    RngState rng{42, 0};
    Mlp net = Mlp::init(2, {5, 4}, Activation::Tanh, rng);
    const std::vector<double> x{0.7, -1.2};

    // duplicate evaluation written directly against the stored matrices
    std::vector<double> cur(x);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& lay = net.layers[l];
        std::vector<double> next(static_cast<std::size_t>(lay.out));
        for (int o = 0; o < lay.out; ++o) {
            double acc = lay.b[static_cast<std::size_t>(o)];
            for (int i = 0; i < lay.in; ++i) acc += lay.w[static_cast<std::size_t>(o) * lay.in + i] * cur[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = (l + 1 == net.layers.size()) ? acc : std::tanh(acc);
        }
        cur = std::move(next);
    }

    MlpScratch ws;
    std::vector<double> out(2);
    mlp_forward(net, x, ws, out);
    CHECK(out[0] == doctest::Approx(cur[0]).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(cur[1]).epsilon(1e-15));
}

TEST_CASE("jvp: linear net returns matrix columns") {
    Mlp net = linear_net({1.0, 2.0, 3.0, 4.0}, 2);
    MlpScratch ws;
    std::vector<double> out(2);
    mlp_jvp(net, std::vector<double>{0.3, 0.4}, std::vector<double>{1.0, 0.0}, ws, out);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 3.0);

    mlp_jvp(net, std::vector<double>{0.3, 0.4}, std::vector<double>{0.0, 0.0}, ws, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("jvp matches central differences on a random net") {
    RngState rng{7, 0};
    const int d = 4;
    Mlp net = Mlp::init(d, {9, 9}, Activation::Tanh, rng);
    MlpScratch ws;
    std::vector<double> x(d), u(d), jv(d), xp(d), fp(d), fm(d);
    for (auto& v : x) v = rng.next_uniform(-1.5, 1.5);
    for (auto& v : u) v = rng.next_uniform(-1.0, 1.0);
    mlp_jvp(net, x, u, ws, jv);
    const double delta = 1e-5;
    for (int j = 0; j < d; ++j) xp[j] = x[j] + delta * u[j];
    mlp_forward(net, xp, ws, fp);
    for (int j = 0; j < d; ++j) xp[j] = x[j] - delta * u[j];
    mlp_forward(net, xp, ws, fm);
    for (int j = 0; j < d; ++j) {
        const double fd = (fp[j] - fm[j]) / (2.0 * delta);
        CHECK(std::fabs(fd - jv[j]) <= 1e-6 * std::max({std::fabs(fd), std::fabs(jv[j]), 1e-6}));
    }
}

TEST_CASE("jvp is linear in the direction") {
    RngState rng{8, 0};
    const int d = 3;
    Mlp net = Mlp::init(d, {7}, Activation::LeakyRelu, rng);
    MlpScratch ws;
    std::vector<double> x(d), u(d), v(d), mix(d), ju(d), jvv(d), jmix(d);
    for (auto& e : x) e = rng.next_uniform(-2.0, 2.0);
    for (auto& e : u) e = rng.next_uniform(-1.0, 1.0);
    for (auto& e : v) e = rng.next_uniform(-1.0, 1.0);
    const double a = 1.7, b = -0.6;
    for (int j = 0; j < d; ++j) mix[j] = a * u[j] + b * v[j];
    mlp_jvp(net, x, u, ws, ju);
    mlp_jvp(net, x, v, ws, jvv);
    mlp_jvp(net, x, mix, ws, jmix);
    for (int j = 0; j < d; ++j) {
        CHECK(std::fabs(jmix[j] - (a * ju[j] + b * jvv[j])) <= 1e-12);
    }
}

TEST_CASE("divergence: identity map and pinned linear example") {
    MlpScratch ws;
    RngState rng{9, 0};

    Mlp ident = linear_net({1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0}, 3);
    CHECK(divergence(ident, std::vector<double>{0.2, -0.3, 0.9},
                     {DivergenceSpec::Kind::Exact, 0}, rng, ws) == doctest::Approx(3.0));

    Mlp lin = linear_net({1.0, 2.0, 3.0, 4.0}, 2);
    const std::vector<double> x{0.1, 0.2};
    CHECK(divergence(lin, x, {DivergenceSpec::Kind::Exact, 0}, rng, ws) == doctest::Approx(5.0));

    // enumeration over the full Rademacher set {+-1}^2: (10 + 0 + 0 + 10)/4
    const double probes_all[8] = {1, 1, 1, -1, -1, 1, -1, -1};
    CHECK(divergence(lin, x, {DivergenceSpec::Kind::Hutchinson, 4}, rng, ws, probes_all) ==
          doctest::Approx(5.0));

    const double probe_single[2] = {1, -1};
    CHECK(divergence(lin, x, {DivergenceSpec::Kind::Hutchinson, 1}, rng, ws, probe_single) ==
          doctest::Approx(0.0));

    CHECK_THROWS(divergence(lin, x, {DivergenceSpec::Kind::Hutchinson, 0}, rng, ws));
}

TEST_CASE("hutchinson averaged over the complete probe set equals exact divergence") {
    const auto r = check_hutchinson_enumeration(10);
    CHECK(r.pass);
    CHECK(r.value <= 1e-10);
}

TEST_CASE("training loss: constant field has analytic loss and bias gradient") {
    RngState rng{10, 0};
    Mlp net = Mlp::init(1, {4, 4}, Activation::Tanh, rng);
    net.fill(0.0);
    net.layers.back().b[0] = 0.5; // f == 0.5 everywhere

    const std::vector<double> particles{1.0, -1.0};
    const std::vector<double> scores{-1.0, 1.0}; // standard normal scores at +-1
    const auto g = YoungFunction::lp(2.0);
    Mlp grad = Mlp::zeros_like(net);
    const double loss = training_loss_grad(net, particles, scores, 2, 1, g,
                                           {DivergenceSpec::Kind::Exact, 0}, rng, grad);
    CHECK(loss == doctest::Approx(-0.125).epsilon(1e-14)); // -b^2/2
    CHECK(grad.layers.back().b[0] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("training loss is exactly zero at f == 0 for every young variant") {
    RngState rng{11, 0};
    Mlp net = Mlp::init(2, {6, 6}, Activation::Tanh, rng);
    net.fill(0.0);
    std::vector<double> particles(8), scores(8);
    for (auto& v : particles) v = rng.next_uniform(-2.0, 2.0);
    for (auto& v : scores) v = rng.next_uniform(-2.0, 2.0);
    Mlp grad = Mlp::zeros_like(net);
    std::vector<YoungFunction> gs;
    gs.push_back(YoungFunction::lp(1.5));
    gs.push_back(YoungFunction::lp(2.0));
    gs.push_back(YoungFunction::quadratic({1.2, 0.8}));
    gs.push_back(YoungFunction::exp(1.0));
    for (const auto& g : gs) {
        const double loss = training_loss_grad(net, particles, scores, 4, 2, g,
                                               {DivergenceSpec::Kind::Exact, 0}, rng, grad);
        CHECK(loss == 0.0);
    }
}

TEST_CASE("training gradient matches finite differences (both divergence modes)") {
    const auto r = check_loss_grad_fd(6);
    CHECK(r.pass);
    CHECK(r.value <= 1e-5);
}

TEST_CASE("non-finite objective reports the offending particle") {
    RngState rng{12, 0};
    Mlp net = Mlp::init(1, {4}, Activation::Tanh, rng);
    std::vector<double> particles{0.1, 0.2, 0.3};
    std::vector<double> scores{0.0, std::numeric_limits<double>::infinity(), 0.0};
    Mlp grad = Mlp::zeros_like(net);
    try {
        training_loss_grad(net, particles, scores, 3, 1, YoungFunction::lp(2.0),
                           {DivergenceSpec::Kind::Exact, 0}, rng, grad);
        CHECK(false);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("particle 1") != std::string::npos);
    }
}

TEST_CASE("sgd ascent with zero momentum moves by lr * grad") {
    RngState rng{13, 0};
    Mlp net = Mlp::init(2, {3}, Activation::Tanh, rng);
    net.fill(1.0);
    Mlp grad = Mlp::zeros_like(net);
    grad.fill(1.0);
    OptimizerSpec spec;
    spec.kind = OptimizerSpec::Kind::SgdMomentum;
    spec.lr = 0.1;
    spec.momentum = 0.0;
    Optimizer opt(spec, net);
    opt.step(net, grad, /*ascent=*/true);
    for (const auto& l : net.layers) {
        for (double w : l.w) CHECK(w == doctest::Approx(1.1).epsilon(1e-15));
        for (double b : l.b) CHECK(b == doctest::Approx(1.1).epsilon(1e-15));
    }
}

TEST_CASE("adam first step has magnitude close to lr in the gradient sign") {
    RngState rng{14, 0};
    Mlp net = Mlp::init(2, {3}, Activation::Tanh, rng);
    const auto before = flatten(net);
    Mlp grad = Mlp::zeros_like(net);
    RngState grng{15, 0};
    for (auto& l : grad.layers) {
        for (auto& w : l.w) w = grng.next_uniform(-2.0, 2.0);
        for (auto& b : l.b) b = grng.next_uniform(-2.0, 2.0);
    }
    OptimizerSpec spec;
    spec.kind = OptimizerSpec::Kind::Adam;
    spec.lr = 1e-3;
    Optimizer opt(spec, net);
    opt.step(net, grad, /*ascent=*/true);
    const auto after = flatten(net);
    const auto gflat = flatten(grad);
    for (std::size_t i = 0; i < after.size(); ++i) {
        const double delta = after[i] - before[i];
        CHECK(delta == doctest::Approx(spec.lr * (gflat[i] > 0 ? 1.0 : -1.0)).epsilon(1e-4));
    }
}

TEST_CASE("identically seeded optimization runs are bit-identical after 100 steps") {
    auto run_once = [] {
        RngState rng{16, 0};
        Mlp net = Mlp::init(2, {8, 8}, Activation::Tanh, rng);
        std::vector<double> particles(20), scores(20);
        RngState data{17, 0};
        for (auto& v : particles) v = data.next_uniform(-2.0, 2.0);
        for (auto& v : scores) v = data.next_uniform(-2.0, 2.0);
        OptimizerSpec spec;
        spec.kind = OptimizerSpec::Kind::Adam;
        spec.lr = 1e-2;
        Optimizer opt(spec, net);
        Mlp grad = Mlp::zeros_like(net);
        const auto g = YoungFunction::lp(2.0);
        const RngState probes{18, 0};
        for (int s = 0; s < 100; ++s) {
            training_loss_grad(net, particles, scores, 10, 2, g,
                               {DivergenceSpec::Kind::Hutchinson, 1},
                               probes.split(static_cast<std::uint64_t>(s)), grad);
            opt.step(net, grad, true);
        }
        return flatten(net);
    };
    const auto a = run_once();
    const auto b = run_once();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("parameter snapshots round-trip through the flat binary dump") {
    RngState rng{19, 0};
    Mlp net = Mlp::init(3, {5, 4}, Activation::LeakyRelu, rng);
    const std::string path = "/tmp/gwgflow_test_params.bin";
    save_params(net, path);
    Mlp other = Mlp::zeros_like(net);
    load_params(other, path);
    const auto a = flatten(net), b = flatten(other);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
