#pragma once

#include <memory>
#include <span>
#include <vector>

#include "gwgflow/rng.hpp"

namespace gwg {

// A sampling target pi: unnormalized log-density plus its gradient (the
// score, identical for the normalized density). Immutable after
// construction; evaluations are safe to run concurrently.
class Target {
  public:
    virtual ~Target() = default;
    virtual int dim() const = 0;
    virtual double log_density_unnorm(std::span<const double> x) const = 0;
    virtual void score(std::span<const double> x, std::span<double> out) const = 0;
};

// Isotropic Gaussian mixture: weights on the simplex, k x d means, one
// shared per-component variance.
class GaussianMixtureTarget final : public Target {
  public:
    GaussianMixtureTarget(std::vector<double> weights, std::vector<double> means,
                          int dim, double variance);

    int dim() const override { return dim_; }
    double log_density_unnorm(std::span<const double> x) const override;
    void score(std::span<const double> x, std::span<double> out) const override;

    int components() const { return static_cast<int>(weights_.size()); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& means() const { return means_; }
    double variance() const { return variance_; }

  private:
    std::vector<double> weights_; // k
    std::vector<double> means_;   // k x d, row-major
    int dim_;
    double variance_;
};

// Heavy-tailed 2-D target pi ~ exp(-a (|x1|^b + |x2|^b)), 0 < b < 1.
// The score is singular at x_i = 0; |x_i| is floored at epsilon inside the
// power so particle updates stay finite.
class MonomialGammaTarget final : public Target {
  public:
    explicit MonomialGammaTarget(double a = 0.3, double b = 0.9, double epsilon = 1e-4);

    int dim() const override { return 2; }
    double log_density_unnorm(std::span<const double> x) const override;
    void score(std::span<const double> x, std::span<double> out) const override;

    double a() const { return a_; }
    double b() const { return b_; }
    double epsilon() const { return epsilon_; }

  private:
    double a_, b_, epsilon_;
};

// Posterior over the K Brownian increments x driving
//   u_{j+1} = u_j + b(u_j) dt + x_{j+1},  u_0 = 0,
//   b(u) = 10 u (1 - u^2) / (1 + u^2),
// observed as y_m = u_{m*stride} + noise, noise ~ N(0, sigma^2).
// Prior: x_j ~ N(0, dt). Score of the likelihood term is computed by a
// reverse (adjoint) sweep through the Euler recursion.
class ConditionedDiffusionTarget final : public Target {
  public:
    ConditionedDiffusionTarget(int steps, int obs_stride, double dt, double sigma,
                               std::vector<double> observations);

    // Draws a true increment path from the prior, pushes it through the
    // forward map and perturbs with N(0, sigma^2) noise.
    static std::vector<double> generate_observations(int steps, int obs_stride, double dt,
                                                     double sigma, RngState rng);

    int dim() const override { return steps_; }
    double log_density_unnorm(std::span<const double> x) const override;
    void score(std::span<const double> x, std::span<double> out) const override;

    // Euler recursion; writes u at every stride-th step into obs_out
    // (length steps/stride).
    void forward(std::span<const double> x, std::span<double> obs_out) const;

    int steps() const { return steps_; }
    int obs_stride() const { return obs_stride_; }
    double dt() const { return dt_; }
    double sigma() const { return sigma_; }
    const std::vector<double>& observations() const { return obs_; }

    static double drift(double u);
    static double drift_deriv(double u);

    double drift_scale = 1.0; // test hook: 0 turns the forward map into cumulative sums

  private:
    int steps_, obs_stride_;
    double dt_, sigma_;
    std::vector<double> obs_;
};

} // namespace gwg
