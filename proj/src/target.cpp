#include "gwgflow/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gwg {

GaussianMixtureTarget::GaussianMixtureTarget(std::vector<double> weights,
                                             std::vector<double> means, int dim,
                                             double variance)
    : weights_(std::move(weights)), means_(std::move(means)), dim_(dim), variance_(variance) {
    if (dim_ <= 0) throw std::invalid_argument("mixture: dim must be positive");
    if (weights_.empty()) throw std::invalid_argument("mixture: needs at least one component");
    if (means_.size() != weights_.size() * static_cast<std::size_t>(dim_)) {
        throw std::invalid_argument("mixture: means shape must be k x d");
    }
    if (!(variance_ > 0.0)) throw std::invalid_argument("mixture: variance must be > 0");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw std::invalid_argument("mixture: weights must be nonnegative");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("mixture: weights must sum to 1");
}

double GaussianMixtureTarget::log_density_unnorm(std::span<const double> x) const {
    const int k = components();
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> logits(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        double sq = 0.0;
        for (int j = 0; j < dim_; ++j) {
            const double dsh = x[static_cast<std::size_t>(j)] - means_[static_cast<std::size_t>(c * dim_ + j)];
            sq += dsh * dsh;
        }
        const double l = std::log(weights_[static_cast<std::size_t>(c)]) - sq / (2.0 * variance_);
        logits[static_cast<std::size_t>(c)] = l;
        best = std::max(best, l);
    }
    double acc = 0.0;
    for (int c = 0; c < k; ++c) acc += std::exp(logits[static_cast<std::size_t>(c)] - best);
    return best + std::log(acc);
}

void GaussianMixtureTarget::score(std::span<const double> x, std::span<double> out) const {
    const int k = components();
    std::vector<double> logits(static_cast<std::size_t>(k));
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        double sq = 0.0;
        for (int j = 0; j < dim_; ++j) {
            const double dsh = x[static_cast<std::size_t>(j)] - means_[static_cast<std::size_t>(c * dim_ + j)];
            sq += dsh * dsh;
        }
        logits[static_cast<std::size_t>(c)] = std::log(weights_[static_cast<std::size_t>(c)]) - sq / (2.0 * variance_);
        best = std::max(best, logits[static_cast<std::size_t>(c)]);
    }
    double z = 0.0;
    for (int c = 0; c < k; ++c) {
        logits[static_cast<std::size_t>(c)] = std::exp(logits[static_cast<std::size_t>(c)] - best);
        z += logits[static_cast<std::size_t>(c)];
    }
    for (int j = 0; j < dim_; ++j) out[static_cast<std::size_t>(j)] = 0.0;
    for (int c = 0; c < k; ++c) {
        const double resp = logits[static_cast<std::size_t>(c)] / z;
        for (int j = 0; j < dim_; ++j) {
            out[static_cast<std::size_t>(j)] +=
                resp * (means_[static_cast<std::size_t>(c * dim_ + j)] - x[static_cast<std::size_t>(j)]) / variance_;
        }
    }
}

MonomialGammaTarget::MonomialGammaTarget(double a, double b, double epsilon)
    : a_(a), b_(b), epsilon_(epsilon) {
    if (!(b_ > 0.0 && b_ < 1.0)) throw std::invalid_argument("monomial gamma: requires 0 < b < 1");
    if (!(epsilon_ >= 0.0)) throw std::invalid_argument("monomial gamma: epsilon must be >= 0");
}

double MonomialGammaTarget::log_density_unnorm(std::span<const double> x) const {
    double s = 0.0;
    for (double xi : x) s += std::pow(std::fabs(xi), b_);
    return -a_ * s;
}

void MonomialGammaTarget::score(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = std::max(std::fabs(x[i]), epsilon_);
        out[i] = m == 0.0 ? 0.0 : -a_ * b_ * std::copysign(std::pow(m, b_ - 1.0), x[i]);
    }
}

ConditionedDiffusionTarget::ConditionedDiffusionTarget(int steps, int obs_stride, double dt,
                                                       double sigma,
                                                       std::vector<double> observations)
    : steps_(steps), obs_stride_(obs_stride), dt_(dt), sigma_(sigma), obs_(std::move(observations)) {
    if (steps_ <= 0 || obs_stride_ <= 0) throw std::invalid_argument("cd: steps and stride must be positive");
    if (steps_ % obs_stride_ != 0) throw std::invalid_argument("cd: steps must be divisible by stride");
    if (!(dt_ > 0.0)) throw std::invalid_argument("cd: dt must be > 0");
    if (!(sigma_ > 0.0)) throw std::invalid_argument("cd: sigma must be > 0");
    if (obs_.size() != static_cast<std::size_t>(steps_ / obs_stride_)) {
        throw std::invalid_argument("cd: observation vector must have length steps/stride");
    }
}

double ConditionedDiffusionTarget::drift(double u) {
    return 10.0 * u * (1.0 - u * u) / (1.0 + u * u);
}

double ConditionedDiffusionTarget::drift_deriv(double u) {
    const double u2 = u * u;
    const double d = 1.0 + u2;
    return 10.0 * (1.0 - 4.0 * u2 - u2 * u2) / (d * d);
}

void ConditionedDiffusionTarget::forward(std::span<const double> x, std::span<double> obs_out) const {
    double u = 0.0;
    std::size_t m = 0;
    for (int j = 0; j < steps_; ++j) {
        u += drift_scale * drift(u) * dt_ + x[static_cast<std::size_t>(j)];
        if ((j + 1) % obs_stride_ == 0) obs_out[m++] = u;
    }
}

std::vector<double> ConditionedDiffusionTarget::generate_observations(int steps, int obs_stride,
                                                                      double dt, double sigma,
                                                                      RngState rng) {
    std::vector<double> x_true(static_cast<std::size_t>(steps));
    const double sd = std::sqrt(dt);
    for (auto& v : x_true) v = sd * rng.next_gaussian();
    ConditionedDiffusionTarget proto(steps, obs_stride, dt, sigma,
                                     std::vector<double>(static_cast<std::size_t>(steps / obs_stride), 0.0));
    std::vector<double> y(static_cast<std::size_t>(steps / obs_stride));
    proto.forward(x_true, y);
    for (auto& v : y) v += sigma * rng.next_gaussian();
    return y;
}

double ConditionedDiffusionTarget::log_density_unnorm(std::span<const double> x) const {
    double prior = 0.0;
    for (double xi : x) prior += xi * xi;
    prior = -prior / (2.0 * dt_);

    std::vector<double> f(obs_.size());
    forward(x, f);
    double like = 0.0;
    for (std::size_t m = 0; m < obs_.size(); ++m) {
        const double r = obs_[m] - f[m];
        like += r * r;
    }
    return prior - like / (2.0 * sigma_ * sigma_);
}

void ConditionedDiffusionTarget::score(std::span<const double> x, std::span<double> out) const {
    // Forward sweep, keeping the full state path for the adjoint.
    std::vector<double> u(static_cast<std::size_t>(steps_) + 1, 0.0);
    for (int j = 0; j < steps_; ++j) {
        u[static_cast<std::size_t>(j + 1)] =
            u[static_cast<std::size_t>(j)] + drift_scale * drift(u[static_cast<std::size_t>(j)]) * dt_ +
            x[static_cast<std::size_t>(j)];
    }
    const double inv_s2 = 1.0 / (sigma_ * sigma_);

    // Adjoint sweep: a_j = dL/du_j with L the log-likelihood. u_{j+1}
    // depends on u_j with factor 1 + b'(u_j) dt and on x_{j+1} with factor 1.
    double carry = 0.0;
    for (int j = steps_; j >= 1; --j) {
        double a = carry;
        if (j % obs_stride_ == 0) {
            const std::size_t m = static_cast<std::size_t>(j / obs_stride_ - 1);
            a += (obs_[m] - u[static_cast<std::size_t>(j)]) * inv_s2;
        }
        out[static_cast<std::size_t>(j - 1)] = a - x[static_cast<std::size_t>(j - 1)] / dt_;
        carry = a * (1.0 + drift_scale * drift_deriv(u[static_cast<std::size_t>(j - 1)]) * dt_);
    }
}

} // namespace gwg
