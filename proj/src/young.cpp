#include "gwgflow/young.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gwg {

namespace {

constexpr double kLogClamp = 700.0; // exp(700) is near the double ceiling

void warn_clamp_once() {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
        std::fprintf(stderr, "gwgflow: warning: Lp conjugate gradient magnitude clamped at exp(700)\n");
    }
}

void require_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("young: non-finite input entry");
    }
}

} // namespace

double holder_conjugate(double p) {
    if (!(p > 1.0)) throw std::invalid_argument("holder_conjugate: requires p > 1");
    return p / (p - 1.0);
}

YoungFunction YoungFunction::lp(double p) {
    YoungFunction g;
    g.kind_ = Kind::Lp;
    g.set_p(p);
    return g;
}

YoungFunction YoungFunction::quadratic(std::vector<double> h_diag) {
    YoungFunction g;
    g.kind_ = Kind::Quadratic;
    g.set_h_diag(std::move(h_diag));
    return g;
}

YoungFunction YoungFunction::exp(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("young: Exp sigma must be > 0");
    YoungFunction g;
    g.kind_ = Kind::Exp;
    g.sigma_ = sigma;
    return g;
}

void YoungFunction::set_p(double p) {
    if (kind_ != Kind::Lp) throw std::logic_error("young: set_p only valid for Lp");
    p_ = p;
    q_ = holder_conjugate(p);
}

void YoungFunction::set_h_diag(std::vector<double> h_diag) {
    if (kind_ != Kind::Quadratic) throw std::logic_error("young: set_h_diag only valid for Quadratic");
    if (h_diag.empty()) throw std::invalid_argument("young: Quadratic H must be nonempty");
    for (double h : h_diag) {
        if (!(h > 0.0)) throw std::invalid_argument("young: Quadratic H entries must be > 0");
    }
    h_diag_ = std::move(h_diag);
}

double YoungFunction::value(std::span<const double> v) const {
    require_finite(v);
    switch (kind_) {
        case Kind::Lp: {
            double s = 0.0;
            if (p_ == 2.0) {
                for (double x : v) s += x * x;
                return 0.5 * s;
            }
            for (double x : v) s += std::pow(std::fabs(x), p_);
            return s / p_;
        }
        case Kind::Quadratic: {
            if (v.size() != h_diag_.size()) throw std::invalid_argument("young: Quadratic dimension mismatch");
            double s = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) s += h_diag_[i] * v[i] * v[i];
            return 0.5 * s;
        }
        case Kind::Exp: {
            double s = 0.0;
            for (double x : v) s += x * x;
            return std::expm1(s / (2.0 * sigma_ * sigma_));
        }
    }
    return 0.0;
}

void YoungFunction::grad(std::span<const double> v, std::span<double> out) const {
    switch (kind_) {
        case Kind::Lp:
            if (p_ == 2.0) {
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
            } else {
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const double a = std::fabs(v[i]);
                    out[i] = a == 0.0 ? 0.0 : std::copysign(std::pow(a, p_ - 1.0), v[i]);
                }
            }
            return;
        case Kind::Quadratic:
            if (v.size() != h_diag_.size()) throw std::invalid_argument("young: Quadratic dimension mismatch");
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = h_diag_[i] * v[i];
            return;
        case Kind::Exp: {
            double s = 0.0;
            for (double x : v) s += x * x;
            double expo = s / (2.0 * sigma_ * sigma_);
            if (expo > kLogClamp) {
                warn_clamp_once();
                expo = kLogClamp;
            }
            const double scale = std::exp(expo) / (sigma_ * sigma_);
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i];
            return;
        }
    }
}

void YoungFunction::conjugate_grad(std::span<const double> y, std::span<double> out) const {
    switch (kind_) {
        case Kind::Lp: {
            if (q_ == 2.0) {
                for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i];
                return;
            }
            const double e = q_ - 1.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double a = std::fabs(y[i]);
                if (a == 0.0) {
                    out[i] = 0.0;
                    continue;
                }
                double lm = e * std::log(a);
                if (lm > kLogClamp) {
                    warn_clamp_once();
                    lm = kLogClamp;
                }
                out[i] = std::copysign(std::exp(lm), y[i]);
            }
            return;
        }
        case Kind::Quadratic:
            if (y.size() != h_diag_.size()) throw std::invalid_argument("young: Quadratic dimension mismatch");
            for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] / h_diag_[i];
            return;
        case Kind::Exp: {
            double s = 0.0;
            for (double x : y) s += x * x;
            const double norm = std::sqrt(s);
            if (norm == 0.0) {
                for (std::size_t i = 0; i < y.size(); ++i) out[i] = 0.0;
                return;
            }
            // phi(r) = r/sigma^2 * exp(r^2/(2 sigma^2)) is strictly increasing;
            // phi(hi) >= norm for hi = sigma*sqrt(2 log(1 + sigma*norm)) + sigma.
            const double s2 = sigma_ * sigma_;
            auto phi = [&](double r) { return r / s2 * std::exp(r * r / (2.0 * s2)); };
            double lo = 0.0;
            double hi = sigma_ * std::sqrt(2.0 * std::log1p(sigma_ * norm)) + sigma_;
            double r = 0.5 * (lo + hi);
            for (int it = 0; it < 200; ++it) {
                r = 0.5 * (lo + hi);
                const double res = phi(r) - norm;
                if (std::fabs(res) <= 1e-12) break;
                if (res > 0.0) hi = r;
                else lo = r;
                if (hi - lo <= 1e-16 * (1.0 + hi)) break;
            }
            const double scale = r / norm;
            for (std::size_t i = 0; i < y.size(); ++i) out[i] = scale * y[i];
            return;
        }
    }
}

double YoungFunction::conjugate_value(std::span<const double> y) const {
    switch (kind_) {
        case Kind::Lp: {
            double s = 0.0;
            if (q_ == 2.0) {
                for (double x : y) s += x * x;
                return 0.5 * s;
            }
            for (double x : y) s += std::pow(std::fabs(x), q_);
            return s / q_;
        }
        case Kind::Quadratic: {
            if (y.size() != h_diag_.size()) throw std::invalid_argument("young: Quadratic dimension mismatch");
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * y[i] / h_diag_[i];
            return 0.5 * s;
        }
        case Kind::Exp: {
            std::vector<double> v(y.size());
            conjugate_grad(y, v);
            double dot = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * v[i];
            return dot - value(v);
        }
    }
    return 0.0;
}

} // namespace gwg
