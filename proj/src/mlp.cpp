#include "gwgflow/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gwgflow/parallel.hpp"

namespace gwg {

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

Mlp Mlp::init(int dim, const std::vector<int>& hidden, Activation act, RngState& rng) {
    if (dim <= 0) throw std::invalid_argument("mlp: dim must be positive");
    Mlp net;
    net.act = act;
    std::vector<int> dims;
    dims.push_back(dim);
    for (int h : hidden) {
        if (h <= 0) throw std::invalid_argument("mlp: hidden widths must be positive");
        dims.push_back(h);
    }
    dims.push_back(dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
        layer.b.resize(static_cast<std::size_t>(layer.out));
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (auto& v : layer.w) v = rng.next_uniform(-bound, bound);
        for (auto& v : layer.b) v = rng.next_uniform(-bound, bound);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Mlp Mlp::zeros_like(const Mlp& other) {
    Mlp net = other;
    net.fill(0.0);
    return net;
}

void Mlp::fill(double v) {
    for (auto& l : layers) {
        std::fill(l.w.begin(), l.w.end(), v);
        std::fill(l.b.begin(), l.b.end(), v);
    }
}

void Mlp::add_scaled(const Mlp& g, double scale) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].w.size(); ++i) layers[l].w[i] += scale * g.layers[l].w[i];
        for (std::size_t i = 0; i < layers[l].b.size(); ++i) layers[l].b[i] += scale * g.layers[l].b[i];
    }
}

void Mlp::scale(double s) {
    for (auto& l : layers) {
        for (auto& v : l.w) v *= s;
        for (auto& v : l.b) v *= s;
    }
}

std::vector<double> flatten(const Mlp& net) {
    std::vector<double> flat;
    flat.reserve(net.param_count());
    for (const auto& l : net.layers) {
        flat.insert(flat.end(), l.w.begin(), l.w.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void unflatten(std::span<const double> flat, Mlp& net) {
    if (flat.size() != net.param_count()) throw std::invalid_argument("unflatten: size mismatch");
    std::size_t k = 0;
    for (auto& l : net.layers) {
        for (auto& v : l.w) v = flat[k++];
        for (auto& v : l.b) v = flat[k++];
    }
}

void save_params(const Mlp& net, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_params: cannot open " + path);
    const auto flat = flatten(net);
    f.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
}

void load_params(Mlp& net, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_params: cannot open " + path);
    std::vector<double> flat(net.param_count());
    f.read(reinterpret_cast<char*>(flat.data()),
           static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!f) throw std::runtime_error("load_params: short read from " + path);
    unflatten(flat, net);
}

void MlpScratch::resize(const Mlp& net) {
    const std::size_t L = net.layers.size();
    auto fit = [&](std::vector<std::vector<double>>& buf, std::size_t count) {
        buf.resize(count);
    };
    fit(z, L + 1);
    fit(t, L + 1);
    fit(zbar, L + 1);
    fit(tbar, L + 1);
    fit(a, L);
    fit(ta, L);
    fit(abar, L);
    fit(tabar, L);
    z[0].resize(static_cast<std::size_t>(net.layers[0].in));
    t[0].resize(static_cast<std::size_t>(net.layers[0].in));
    zbar[0].resize(static_cast<std::size_t>(net.layers[0].in));
    tbar[0].resize(static_cast<std::size_t>(net.layers[0].in));
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t out = static_cast<std::size_t>(net.layers[l].out);
        z[l + 1].resize(out);
        t[l + 1].resize(out);
        zbar[l + 1].resize(out);
        tbar[l + 1].resize(out);
        a[l].resize(out);
        ta[l].resize(out);
        abar[l].resize(out);
        tabar[l].resize(out);
    }
}

namespace {

inline void affine(const Layer& l, const double* in, double* out, bool with_bias) {
    for (int o = 0; o < l.out; ++o) {
        const double* row = l.w.data() + static_cast<std::size_t>(o) * l.in;
        double acc = with_bias ? l.b[static_cast<std::size_t>(o)] : 0.0;
        for (int i = 0; i < l.in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

inline void primal_forward(const Mlp& net, std::span<const double> x, MlpScratch& ws) {
    const std::size_t L = net.layers.size();
    std::copy(x.begin(), x.end(), ws.z[0].begin());
    for (std::size_t l = 0; l < L; ++l) {
        affine(net.layers[l], ws.z[l].data(), ws.a[l].data(), true);
        const bool last = l + 1 == L;
        double* zl = ws.z[l + 1].data();
        const double* al = ws.a[l].data();
        const int out = net.layers[l].out;
        if (last) {
            std::copy(al, al + out, zl);
        } else if (net.act == Activation::Tanh) {
            for (int o = 0; o < out; ++o) zl[o] = std::tanh(al[o]);
        } else {
            for (int o = 0; o < out; ++o) zl[o] = al[o] > 0.0 ? al[o] : net.leaky_slope * al[o];
        }
    }
}

// Tangent sweep; requires a primal pass in ws for this x.
inline void tangent_forward(const Mlp& net, std::span<const double> dir, MlpScratch& ws) {
    const std::size_t L = net.layers.size();
    std::copy(dir.begin(), dir.end(), ws.t[0].begin());
    for (std::size_t l = 0; l < L; ++l) {
        affine(net.layers[l], ws.t[l].data(), ws.ta[l].data(), false);
        const bool last = l + 1 == L;
        double* tl = ws.t[l + 1].data();
        const double* tal = ws.ta[l].data();
        const int out = net.layers[l].out;
        if (last) {
            std::copy(tal, tal + out, tl);
        } else if (net.act == Activation::Tanh) {
            const double* zl = ws.z[l + 1].data();
            for (int o = 0; o < out; ++o) tl[o] = (1.0 - zl[o] * zl[o]) * tal[o];
        } else {
            const double* al = ws.a[l].data();
            for (int o = 0; o < out; ++o) tl[o] = (al[o] > 0.0 ? 1.0 : net.leaky_slope) * tal[o];
        }
    }
}

// One reverse sweep over the combined primal+tangent graph, seeded with
// cotangents zbar[L] and tbar[L]. Accumulates into grad. tbar flows through
// the tangent chain, and the tangent chain's dependence on the primal
// pre-activations feeds back into abar via the second derivative of the
// activation.
inline void reverse_sweep(const Mlp& net, MlpScratch& ws, Mlp& grad, bool with_tangent) {
    const std::size_t L = net.layers.size();
    for (std::size_t l = L; l-- > 0;) {
        const Layer& lay = net.layers[l];
        const int out = lay.out;
        const int in = lay.in;
        const bool last = l + 1 == L;
        double* ab = ws.abar[l].data();
        double* tab = ws.tabar[l].data();
        const double* zb = ws.zbar[l + 1].data();
        const double* tb = ws.tbar[l + 1].data();
        if (last) {
            for (int o = 0; o < out; ++o) {
                ab[o] = zb[o];
                tab[o] = tb[o];
            }
        } else if (net.act == Activation::Tanh) {
            const double* zl = ws.z[l + 1].data();
            const double* tal = ws.ta[l].data();
            for (int o = 0; o < out; ++o) {
                const double s1 = 1.0 - zl[o] * zl[o];
                ab[o] = s1 * zb[o];
                tab[o] = s1 * tb[o];
                if (with_tangent) ab[o] += -2.0 * zl[o] * s1 * tal[o] * tb[o];
            }
        } else {
            const double* al = ws.a[l].data();
            for (int o = 0; o < out; ++o) {
                const double s1 = al[o] > 0.0 ? 1.0 : net.leaky_slope;
                ab[o] = s1 * zb[o];
                tab[o] = s1 * tb[o];
            }
        }
        Layer& glay = grad.layers[l];
        const double* zin = ws.z[l].data();
        const double* tin = ws.t[l].data();
        if (with_tangent) {
            for (int o = 0; o < out; ++o) {
                const double c1 = ab[o];
                const double c2 = tab[o];
                double* grow = glay.w.data() + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) grow[i] += c1 * zin[i] + c2 * tin[i];
                glay.b[static_cast<std::size_t>(o)] += c1;
            }
        } else {
            for (int o = 0; o < out; ++o) {
                const double c1 = ab[o];
                double* grow = glay.w.data() + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) grow[i] += c1 * zin[i];
                glay.b[static_cast<std::size_t>(o)] += c1;
            }
        }
        if (l > 0) {
            double* zprev = ws.zbar[l].data();
            double* tprev = ws.tbar[l].data();
            for (int i = 0; i < in; ++i) {
                double acc1 = 0.0, acc2 = 0.0;
                for (int o = 0; o < out; ++o) {
                    const double wv = lay.w[static_cast<std::size_t>(o) * in + i];
                    acc1 += wv * ab[o];
                    if (with_tangent) acc2 += wv * tab[o];
                }
                zprev[i] = acc1;
                tprev[i] = acc2;
            }
        }
    }
}

} // namespace

void mlp_forward(const Mlp& net, std::span<const double> x, MlpScratch& ws, std::span<double> out) {
    ws.resize(net);
    primal_forward(net, x, ws);
    const auto& f = ws.z.back();
    std::copy(f.begin(), f.end(), out.begin());
}

void mlp_jvp(const Mlp& net, std::span<const double> x, std::span<const double> direction,
             MlpScratch& ws, std::span<double> out) {
    ws.resize(net);
    primal_forward(net, x, ws);
    tangent_forward(net, direction, ws);
    const auto& t = ws.t.back();
    std::copy(t.begin(), t.end(), out.begin());
}

double divergence(const Mlp& net, std::span<const double> x, const DivergenceSpec& spec,
                  RngState probe_rng, MlpScratch& ws, const double* frozen_probes) {
    const int d = net.input_dim();
    ws.resize(net);
    primal_forward(net, x, ws);
    std::vector<double> probe(static_cast<std::size_t>(d));
    if (spec.kind == DivergenceSpec::Kind::Exact) {
        double div = 0.0;
        for (int k = 0; k < d; ++k) {
            std::fill(probe.begin(), probe.end(), 0.0);
            probe[static_cast<std::size_t>(k)] = 1.0;
            tangent_forward(net, probe, ws);
            div += ws.t.back()[static_cast<std::size_t>(k)];
        }
        return div;
    }
    if (spec.probes <= 0) throw std::invalid_argument("divergence: hutchinson needs probes >= 1");
    double div = 0.0;
    for (int p = 0; p < spec.probes; ++p) {
        if (frozen_probes) {
            const double* src = frozen_probes + static_cast<std::size_t>(p) * d;
            std::copy(src, src + d, probe.begin());
        } else {
            for (auto& v : probe) v = probe_rng.next_rademacher();
        }
        tangent_forward(net, probe, ws);
        double quad = 0.0;
        for (int k = 0; k < d; ++k) quad += probe[static_cast<std::size_t>(k)] * ws.t.back()[static_cast<std::size_t>(k)];
        div += quad;
    }
    return div / spec.probes;
}

namespace {

// Objective value for one particle plus gradient accumulation (unscaled).
double particle_term(const Mlp& net, std::span<const double> x, std::span<const double> score,
                     const YoungFunction& g, const DivergenceSpec& spec, RngState probe_rng,
                     const double* frozen_probes, Mlp& grad, MlpScratch& ws,
                     std::vector<double>& probe, std::vector<double>& c0) {
    const int d = net.input_dim();
    primal_forward(net, x, ws);
    const auto& f = ws.z.back();

    double sdotf = 0.0;
    for (int k = 0; k < d; ++k) sdotf += score[static_cast<std::size_t>(k)] * f[static_cast<std::size_t>(k)];
    const double gval = g.value(f);
    g.grad(f, c0);
    for (int k = 0; k < d; ++k) c0[static_cast<std::size_t>(k)] = score[static_cast<std::size_t>(k)] - c0[static_cast<std::size_t>(k)];

    const bool exact = spec.kind == DivergenceSpec::Kind::Exact;
    if (!exact && spec.probes <= 0) throw std::invalid_argument("training_loss_grad: hutchinson needs probes >= 1");
    const int n_probes = exact ? d : spec.probes;
    const double coef = exact ? 1.0 : 1.0 / spec.probes;

    double div = 0.0;
    for (int p = 0; p < n_probes; ++p) {
        if (exact) {
            std::fill(probe.begin(), probe.end(), 0.0);
            probe[static_cast<std::size_t>(p)] = 1.0;
        } else if (frozen_probes) {
            const double* src = frozen_probes + static_cast<std::size_t>(p) * d;
            std::copy(src, src + d, probe.begin());
        } else {
            for (auto& v : probe) v = probe_rng.next_rademacher();
        }
        tangent_forward(net, probe, ws);
        double quad = 0.0;
        for (int k = 0; k < d; ++k) quad += probe[static_cast<std::size_t>(k)] * ws.t.back()[static_cast<std::size_t>(k)];
        div += coef * quad;

        auto& zbarL = ws.zbar.back();
        auto& tbarL = ws.tbar.back();
        for (int k = 0; k < d; ++k) {
            zbarL[static_cast<std::size_t>(k)] = (p == 0) ? c0[static_cast<std::size_t>(k)] : 0.0;
            tbarL[static_cast<std::size_t>(k)] = coef * probe[static_cast<std::size_t>(k)];
        }
        reverse_sweep(net, ws, grad, /*with_tangent=*/true);
    }
    return sdotf + div - gval;
}

} // namespace

double training_loss_grad(const Mlp& net, std::span<const double> particles,
                          std::span<const double> scores, int n, int d,
                          const YoungFunction& g, const DivergenceSpec& spec,
                          RngState probe_rng, Mlp& grad, const double* frozen_probes) {
    if (n < 1) throw std::invalid_argument("training_loss_grad: needs at least one particle");
    if (particles.size() != static_cast<std::size_t>(n) * d || scores.size() != particles.size()) {
        throw std::invalid_argument("training_loss_grad: shape mismatch");
    }
    grad.fill(0.0);

    const std::size_t chunk = kDefaultChunk;
    const std::size_t n_chunks = (static_cast<std::size_t>(n) + chunk - 1) / chunk;
    std::vector<Mlp> chunk_grads(n_chunks);
    std::vector<double> chunk_loss(n_chunks, 0.0);
    std::vector<std::ptrdiff_t> chunk_bad(n_chunks, -1);

    parallel_chunks(static_cast<std::size_t>(n), chunk,
                    [&](std::size_t c, std::size_t lo, std::size_t hi) {
        Mlp local = Mlp::zeros_like(net);
        MlpScratch ws;
        ws.resize(net);
        std::vector<double> probe(static_cast<std::size_t>(d));
        std::vector<double> c0(static_cast<std::size_t>(d));
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double* x = particles.data() + i * static_cast<std::size_t>(d);
            const double* s = scores.data() + i * static_cast<std::size_t>(d);
            const double* fp = frozen_probes
                ? frozen_probes + i * static_cast<std::size_t>(spec.probes) * d
                : nullptr;
            const double term = particle_term(net, {x, static_cast<std::size_t>(d)},
                                              {s, static_cast<std::size_t>(d)}, g, spec,
                                              probe_rng.split(i), fp, local, ws, probe, c0);
            if (!std::isfinite(term) && chunk_bad[c] < 0) chunk_bad[c] = static_cast<std::ptrdiff_t>(i);
            acc += term;
        }
        chunk_loss[c] = acc;
        chunk_grads[c] = std::move(local);
    });

    for (std::size_t c = 0; c < n_chunks; ++c) {
        if (chunk_bad[c] >= 0) {
            throw std::runtime_error("training_loss_grad: non-finite objective at particle " +
                                     std::to_string(chunk_bad[c]));
        }
    }
    double loss = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        loss += chunk_loss[c];
        grad.add_scaled(chunk_grads[c], 1.0);
    }
    const double inv_n = 1.0 / n;
    grad.scale(inv_n);
    return loss * inv_n;
}

Optimizer::Optimizer(OptimizerSpec spec, const Mlp& shape)
    : spec_(spec), m_(Mlp::zeros_like(shape)), v_(Mlp::zeros_like(shape)) {}

void Optimizer::reset() {
    m_.fill(0.0);
    v_.fill(0.0);
    t_ = 0;
}

void Optimizer::step(Mlp& params, const Mlp& grad, bool ascent) {
    const double sign = ascent ? 1.0 : -1.0;
    if (spec_.kind == OptimizerSpec::Kind::SgdMomentum) {
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            auto upd = [&](std::vector<double>& w, const std::vector<double>& gv, std::vector<double>& buf) {
                for (std::size_t i = 0; i < w.size(); ++i) {
                    const double ge = sign * gv[i];
                    buf[i] = spec_.momentum * buf[i] + ge;
                    const double dir = spec_.nesterov ? ge + spec_.momentum * buf[i] : buf[i];
                    w[i] += spec_.lr * dir;
                }
            };
            upd(params.layers[l].w, grad.layers[l].w, m_.layers[l].w);
            upd(params.layers[l].b, grad.layers[l].b, m_.layers[l].b);
        }
        return;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(spec_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(spec_.beta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto upd = [&](std::vector<double>& w, const std::vector<double>& gv,
                       std::vector<double>& m, std::vector<double>& v) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double ge = sign * gv[i];
                m[i] = spec_.beta1 * m[i] + (1.0 - spec_.beta1) * ge;
                v[i] = spec_.beta2 * v[i] + (1.0 - spec_.beta2) * ge * ge;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                w[i] += spec_.lr * mhat / (std::sqrt(vhat) + spec_.eps);
            }
        };
        upd(params.layers[l].w, grad.layers[l].w, m_.layers[l].w, v_.layers[l].w);
        upd(params.layers[l].b, grad.layers[l].b, m_.layers[l].b, v_.layers[l].b);
    }
}

} // namespace gwg
