#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gwgflow/rng.hpp"
#include "gwgflow/young.hpp"

namespace gwg {

enum class Activation { Tanh, LeakyRelu };

struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w; // out x in, row-major
    std::vector<double> b; // out
};

// The vector field f_w: R^d -> R^d. Hidden layers use the configured
// activation, the output layer is linear.
struct Mlp {
    std::vector<Layer> layers;
    Activation act = Activation::Tanh;
    double leaky_slope = 0.1;

    int input_dim() const { return layers.front().in; }
    int output_dim() const { return layers.back().out; }
    std::size_t param_count() const;

    // dims chain d -> hidden... -> d; weights and biases U(-1/sqrt(in), 1/sqrt(in))
    static Mlp init(int dim, const std::vector<int>& hidden, Activation act, RngState& rng);

    // Same shapes, all parameters zero (gradient / accumulator container).
    static Mlp zeros_like(const Mlp& other);

    void fill(double v);
    void add_scaled(const Mlp& g, double scale); // params += scale * g
    void scale(double s);
};

std::vector<double> flatten(const Mlp& net);
void unflatten(std::span<const double> flat, Mlp& net);

// In documented order: per layer, W row-major then b, raw little-endian f64.
void save_params(const Mlp& net, const std::string& path);
void load_params(Mlp& net, const std::string& path);

// Reusable per-evaluation buffers; sized on first use for a given net shape.
struct MlpScratch {
    std::vector<std::vector<double>> z, a, t, ta, zbar, tbar, abar, tabar;
    void resize(const Mlp& net);
};

// f_w(x) written into out (size d).
void mlp_forward(const Mlp& net, std::span<const double> x, MlpScratch& ws,
                 std::span<double> out);

// (df_w/dx)(x) * direction via forward-mode tangent propagation. Runs the
// primal pass as part of the sweep.
void mlp_jvp(const Mlp& net, std::span<const double> x, std::span<const double> direction,
             MlpScratch& ws, std::span<double> out);

struct DivergenceSpec {
    enum class Kind { Exact, Hutchinson };
    Kind kind = Kind::Hutchinson;
    int probes = 1; // Hutchinson only; fresh Rademacher probes each call
};

// div f_w(x). Exact mode runs d tangent passes over basis vectors;
// Hutchinson averages xi^T J xi over Rademacher probes drawn from probe_rng.
// frozen_probes, when non-null, supplies probes * d entries and bypasses the rng.
double divergence(const Mlp& net, std::span<const double> x, const DivergenceSpec& spec,
                  RngState probe_rng, MlpScratch& ws,
                  const double* frozen_probes = nullptr);

// Monte-Carlo objective over the particle set,
//   loss = (1/n) sum_i [ score_i . f_w(x_i) + div f_w(x_i) - g(f_w(x_i)) ],
// with the divergence term per spec (estimator value enters the loss), and
// its exact parameter gradient, including backpropagation through the
// tangent (JVP) graph of the divergence term. grad is overwritten.
// Probes for particle i are drawn from probe_rng.split(i), or read from
// frozen_probes (n * probes * d) when non-null. Throws on a non-finite
// per-particle objective, naming the particle index.
double training_loss_grad(const Mlp& net, std::span<const double> particles,
                          std::span<const double> scores, int n, int d,
                          const YoungFunction& g, const DivergenceSpec& spec,
                          RngState probe_rng, Mlp& grad,
                          const double* frozen_probes = nullptr);

struct OptimizerSpec {
    enum class Kind { SgdMomentum, Adam };
    Kind kind = Kind::SgdMomentum;
    double lr = 1e-3;
    double momentum = 0.9;
    bool nesterov = true;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Optimizer {
  public:
    Optimizer(OptimizerSpec spec, const Mlp& shape);

    // ascent flips the gradient sign (the training objective is maximized)
    void step(Mlp& params, const Mlp& grad, bool ascent);
    void reset();

    const OptimizerSpec& spec() const { return spec_; }

  private:
    OptimizerSpec spec_;
    Mlp m_, v_;
    std::int64_t t_ = 0;
};

} // namespace gwg
