#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gwgflow/young.hpp"

namespace gwg {

// Biased MMD^2 estimator with RBF kernel k(a,b) = exp(-|a-b|^2 / bandwidth).
// Nonnegative up to roundoff (squared RKHS norm). Throws for bandwidth <= 0
// or empty clouds.
double mmd_sq_rbf(std::span<const double> x, int nx, std::span<const double> y, int ny,
                  int d, double bandwidth);

// Median of pairwise squared Euclidean distances (the RBF bandwidth
// heuristic). Returns 0 for fewer than two points.
double median_sq_distance(std::span<const double> x, int n, int d);

// Jensen-Shannon divergence (base e) between the normalized histograms of
// two clouds on a shared grid spanning both bounding boxes plus a margin.
// Supports d in {1, 2}. 0 log 0 := 0. Throws on empty clouds.
double js_divergence_hist(std::span<const double> x, int nx, std::span<const double> y, int ny,
                          int d, int bins_per_axis = 50);

// Histogram estimates against an analytic density on a fixed grid; the
// density is integrated per bin by the midpoint rule and normalized over the
// grid. Particles outside the grid are clamped into the edge bins.
// Estimators, not exact values; used for trend comparisons.
struct HistGrid {
    std::vector<double> lo, hi; // per axis
    int bins_per_axis = 50;
};
double kl_hist_vs_density(std::span<const double> x, int n, int d,
                          const std::function<double(std::span<const double>)>& log_density,
                          const HistGrid& grid);
double js_hist_vs_density(std::span<const double> x, int n, int d,
                          const std::function<double(std::span<const double>)>& log_density,
                          const HistGrid& grid);

// 1-D density with analytic score, for the quadrature oracle.
struct Density1D {
    std::function<double(double)> log_pdf; // normalized
    std::function<double(double)> score;
};

// Normalized 1-D Gaussian mixture with unit component variances.
Density1D gaussian_mixture_density_1d(std::vector<double> weights, std::vector<double> means);

struct QuadratureGrid {
    double lo = -11.0;
    double hi = 11.0;
    int n_points = 20001; // trapezoid rule
};

struct QuadratureResult {
    double score_div; // integral of |score_pi - score_mu|^q d mu
    double kl;        // KL(mu || pi)
};

// Trapezoid quadrature of the q-th score divergence and the KL divergence.
// Runs a doubling (Richardson) check: if the n-point and (2n-1)-point
// results differ by more than 1e-6 relative, the grid is too coarse and the
// call throws.
QuadratureResult quadrature_1d(const Density1D& pi, const Density1D& mu, double q,
                               const QuadratureGrid& grid);

// Brute-force discrete transport cost between equal-mass clouds with
// n <= 8 atoms: min over all permutations of (1/n) sum_i c_h(x_i, y_perm(i)),
// c_h(x, y) = g((x - y)/h) * h. g must be the Lp variant.
double discrete_wc_bruteforce(std::span<const double> x, std::span<const double> y, int n, int d,
                              const YoungFunction& g, double h);

// Inverts r -> g0(r/h) h with g0(t) = t^p / p on a transport cost value,
// giving the induced metric (p * cost)^{1/p} * h^{1 - 1/p}.
double wc_metric_from_cost(double cost, double p, double h);

struct FdReport {
    double max_rel_err = 0.0;
    int worst_index = -1;
    bool pass = false;
};

// Central-difference check of an analytic gradient. Per-coordinate relative
// error |fd - grad| / max(|fd|, |grad|, denom_floor); pass iff the max is
// within tol.
FdReport finite_diff_check(const std::function<double(std::span<const double>)>& fn,
                           std::span<const double> point, std::span<const double> analytic_grad,
                           double step, double tol, double denom_floor = 1e-6);

} // namespace gwg
