#include "gwgflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gwg {

namespace {

double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

} // namespace

double mmd_sq_rbf(std::span<const double> x, int nx, std::span<const double> y, int ny,
                  int d, double bandwidth) {
    if (nx <= 0 || ny <= 0) throw std::invalid_argument("mmd: clouds must be nonempty");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("mmd: bandwidth must be > 0");
    double kxx = 0.0, kyy = 0.0, kxy = 0.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nx; ++j)
            kxx += std::exp(-sq_dist(&x[static_cast<std::size_t>(i) * d], &x[static_cast<std::size_t>(j) * d], d) / bandwidth);
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < ny; ++j)
            kyy += std::exp(-sq_dist(&y[static_cast<std::size_t>(i) * d], &y[static_cast<std::size_t>(j) * d], d) / bandwidth);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            kxy += std::exp(-sq_dist(&x[static_cast<std::size_t>(i) * d], &y[static_cast<std::size_t>(j) * d], d) / bandwidth);
    return kxx / (static_cast<double>(nx) * nx) + kyy / (static_cast<double>(ny) * ny) -
           2.0 * kxy / (static_cast<double>(nx) * ny);
}

double median_sq_distance(std::span<const double> x, int n, int d) {
    if (n < 2) return 0.0;
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dists.push_back(sq_dist(&x[static_cast<std::size_t>(i) * d], &x[static_cast<std::size_t>(j) * d], d));
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    return dists[mid];
}

namespace {

struct GridSpec {
    std::vector<double> lo, hi;
    int bins;
};

std::vector<double> histogram(std::span<const double> x, int n, int d, const GridSpec& g) {
    const int total = d == 1 ? g.bins : g.bins * g.bins;
    std::vector<double> h(static_cast<std::size_t>(total), 0.0);
    for (int i = 0; i < n; ++i) {
        int idx = 0;
        for (int j = 0; j < d; ++j) {
            const double w = (g.hi[static_cast<std::size_t>(j)] - g.lo[static_cast<std::size_t>(j)]) / g.bins;
            int b = static_cast<int>(std::floor((x[static_cast<std::size_t>(i) * d + j] - g.lo[static_cast<std::size_t>(j)]) / w));
            b = std::clamp(b, 0, g.bins - 1);
            idx = idx * g.bins + b;
        }
        h[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (auto& v : h) v /= n;
    return h;
}

double js_from_hists(const std::vector<double>& p, const std::vector<double>& q) {
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
    }
    return js;
}

std::vector<double> density_hist(int d, const GridSpec& g,
                                 const std::function<double(std::span<const double>)>& log_density) {
    const int total = d == 1 ? g.bins : g.bins * g.bins;
    std::vector<double> h(static_cast<std::size_t>(total), 0.0);
    std::vector<double> c(static_cast<std::size_t>(d));
    double maxlog = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(static_cast<std::size_t>(total));
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        for (int j = d - 1; j >= 0; --j) {
            const int b = rem % g.bins;
            rem /= g.bins;
            const double w = (g.hi[static_cast<std::size_t>(j)] - g.lo[static_cast<std::size_t>(j)]) / g.bins;
            c[static_cast<std::size_t>(j)] = g.lo[static_cast<std::size_t>(j)] + (b + 0.5) * w;
        }
        logs[static_cast<std::size_t>(idx)] = log_density(c);
        maxlog = std::max(maxlog, logs[static_cast<std::size_t>(idx)]);
    }
    double z = 0.0;
    for (int idx = 0; idx < total; ++idx) {
        h[static_cast<std::size_t>(idx)] = std::exp(logs[static_cast<std::size_t>(idx)] - maxlog);
        z += h[static_cast<std::size_t>(idx)];
    }
    for (auto& v : h) v /= z;
    return h;
}

} // namespace

double js_divergence_hist(std::span<const double> x, int nx, std::span<const double> y, int ny,
                          int d, int bins_per_axis) {
    if (nx <= 0 || ny <= 0) throw std::invalid_argument("js: clouds must be nonempty");
    if (d != 1 && d != 2) throw std::invalid_argument("js: histogram JS supports d in {1, 2}");
    GridSpec g;
    g.bins = bins_per_axis;
    g.lo.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity());
    g.hi.assign(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity());
    auto extend = [&](std::span<const double> pts, int n) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) {
                g.lo[static_cast<std::size_t>(j)] = std::min(g.lo[static_cast<std::size_t>(j)], pts[static_cast<std::size_t>(i) * d + j]);
                g.hi[static_cast<std::size_t>(j)] = std::max(g.hi[static_cast<std::size_t>(j)], pts[static_cast<std::size_t>(i) * d + j]);
            }
    };
    extend(x, nx);
    extend(y, ny);
    for (int j = 0; j < d; ++j) {
        const double margin = 0.05 * std::max(g.hi[static_cast<std::size_t>(j)] - g.lo[static_cast<std::size_t>(j)], 1e-8);
        g.lo[static_cast<std::size_t>(j)] -= margin;
        g.hi[static_cast<std::size_t>(j)] += margin;
    }
    return js_from_hists(histogram(x, nx, d, g), histogram(y, ny, d, g));
}

double kl_hist_vs_density(std::span<const double> x, int n, int d,
                          const std::function<double(std::span<const double>)>& log_density,
                          const HistGrid& grid) {
    if (n <= 0) throw std::invalid_argument("kl_hist: empty cloud");
    if (d != 1 && d != 2) throw std::invalid_argument("kl_hist: supports d in {1, 2}");
    GridSpec g{grid.lo, grid.hi, grid.bins_per_axis};
    const auto p = histogram(x, n, d, g);
    const auto q = density_hist(d, g, log_density);
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

double js_hist_vs_density(std::span<const double> x, int n, int d,
                          const std::function<double(std::span<const double>)>& log_density,
                          const HistGrid& grid) {
    if (n <= 0) throw std::invalid_argument("js_hist: empty cloud");
    if (d != 1 && d != 2) throw std::invalid_argument("js_hist: supports d in {1, 2}");
    GridSpec g{grid.lo, grid.hi, grid.bins_per_axis};
    return js_from_hists(histogram(x, n, d, g), density_hist(d, g, log_density));
}

Density1D gaussian_mixture_density_1d(std::vector<double> weights, std::vector<double> means) {
    if (weights.size() != means.size() || weights.empty()) {
        throw std::invalid_argument("gaussian_mixture_density_1d: weights/means mismatch");
    }
    constexpr double kLogNorm = -0.9189385332046727; // -log(sqrt(2 pi))
    auto pdf_parts = [weights, means](double x) {
        double p = 0.0, dp = 0.0;
        for (std::size_t c = 0; c < weights.size(); ++c) {
            const double z = x - means[c];
            const double comp = weights[c] * std::exp(-0.5 * z * z);
            p += comp;
            dp += comp * (-z);
        }
        return std::pair<double, double>{p, dp};
    };
    Density1D out;
    out.log_pdf = [pdf_parts, kLogNorm](double x) { return std::log(pdf_parts(x).first) + kLogNorm; };
    out.score = [pdf_parts](double x) {
        const auto [p, dp] = pdf_parts(x);
        return dp / p;
    };
    return out;
}

namespace {

QuadratureResult quad_pass(const Density1D& pi, const Density1D& mu, double q, double lo,
                           double hi, int n) {
    const double dx = (hi - lo) / (n - 1);
    double sd = 0.0, kl = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + i * dx;
        const double lmu = mu.log_pdf(x);
        const double w = std::exp(lmu);
        const double ds = std::fabs(pi.score(x) - mu.score(x));
        const double trap = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        sd += trap * std::pow(ds, q) * w;
        kl += trap * w * (lmu - pi.log_pdf(x));
    }
    return {sd * dx, kl * dx};
}

} // namespace

QuadratureResult quadrature_1d(const Density1D& pi, const Density1D& mu, double q,
                               const QuadratureGrid& grid) {
    if (!(grid.hi > grid.lo)) throw std::invalid_argument("quadrature_1d: hi must exceed lo");
    if (grid.n_points < 64) throw std::invalid_argument("quadrature_1d: needs at least 64 points");
    if (!(q >= 1.0)) throw std::invalid_argument("quadrature_1d: requires q >= 1");
    const auto coarse = quad_pass(pi, mu, q, grid.lo, grid.hi, grid.n_points);
    const auto fine = quad_pass(pi, mu, q, grid.lo, grid.hi, 2 * grid.n_points - 1);
    auto rel = [](double a, double b) {
        return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
    };
    if ((std::fabs(fine.score_div) > 1e-12 && rel(coarse.score_div, fine.score_div) > 1e-6) ||
        (std::fabs(fine.kl) > 1e-12 && rel(coarse.kl, fine.kl) > 1e-6)) {
        throw std::runtime_error("quadrature_1d: grid too coarse (doubling check failed)");
    }
    return fine;
}

double discrete_wc_bruteforce(std::span<const double> x, std::span<const double> y, int n, int d,
                              const YoungFunction& g, double h) {
    if (n < 1) throw std::invalid_argument("discrete_wc: needs at least one atom");
    if (n > 8) throw std::invalid_argument("discrete_wc: factorial guard, n must be <= 8");
    if (g.kind() != YoungFunction::Kind::Lp) throw std::invalid_argument("discrete_wc: g must be Lp");
    if (!(h > 0.0)) throw std::invalid_argument("discrete_wc: step h must be > 0");

    // precompute pair costs c_h(x_i, y_j)
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    std::vector<double> diff(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < d; ++k) {
                diff[static_cast<std::size_t>(k)] =
                    (x[static_cast<std::size_t>(i) * d + k] - y[static_cast<std::size_t>(j) * d + k]) / h;
            }
            cost[static_cast<std::size_t>(i) * n + j] = g.value(diff) * h;
        }
    }

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + perm[static_cast<std::size_t>(i)]];
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / n;
}

double wc_metric_from_cost(double cost, double p, double h) {
    if (cost <= 0.0) return 0.0;
    return std::pow(p * cost, 1.0 / p) * std::pow(h, 1.0 - 1.0 / p);
}

FdReport finite_diff_check(const std::function<double(std::span<const double>)>& fn,
                           std::span<const double> point, std::span<const double> analytic_grad,
                           double step, double tol, double denom_floor) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be > 0");
    std::vector<double> x(point.begin(), point.end());
    FdReport rep;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double fp = fn(x);
        x[i] = keep - step;
        const double fm = fn(x);
        x[i] = keep;
        const double fd = (fp - fm) / (2.0 * step);
        const double err = std::fabs(fd - analytic_grad[i]) /
                           std::max({std::fabs(fd), std::fabs(analytic_grad[i]), denom_floor});
        if (err > rep.max_rel_err) {
            rep.max_rel_err = err;
            rep.worst_index = static_cast<int>(i);
        }
    }
    rep.pass = rep.max_rel_err <= tol;
    return rep;
}

} // namespace gwg
