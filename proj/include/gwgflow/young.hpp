#pragma once

#include <span>
#include <vector>

namespace gwg {

// Hölder conjugate q = p/(p-1). Throws for p <= 1.
double holder_conjugate(double p);

// Movement regularizer g: one of
//   Lp         g(v) = (1/p) sum_i |v_i|^p,            p > 1
//   Quadratic  g(v) = (1/2) v^T H v,                  H positive diagonal
//   Exp        g(v) = exp(|v|_2^2 / (2 sigma^2)) - 1, sigma > 0
// All variants satisfy g(0) = 0 and g(v) = g(-v).
class YoungFunction {
  public:
    enum class Kind { Lp, Quadratic, Exp };

    static YoungFunction lp(double p);
    static YoungFunction quadratic(std::vector<double> h_diag);
    static YoungFunction exp(double sigma);

    Kind kind() const { return kind_; }
    double p() const { return p_; }
    double q() const { return q_; }
    double sigma() const { return sigma_; }
    const std::vector<double>& h_diag() const { return h_diag_; }

    // Re-target the Lp exponent (Ada-GWG) or the quadratic diagonal (PFG)
    // without rebuilding the object.
    void set_p(double p);
    void set_h_diag(std::vector<double> h_diag);

    // g(v). Throws on non-finite input or (Quadratic) dimension mismatch.
    double value(std::span<const double> v) const;

    // grad g(v), written into out.
    void grad(std::span<const double> v, std::span<double> out) const;

    // grad g*(y), the conjugate gradient, written into out.
    //   Lp:        sign(y_i) |y_i|^{q-1}, log-domain with a saturating clamp
    //              at exp(700) (warned once, never NaN)
    //   Quadratic: H^{-1} y
    //   Exp:       radial inversion of r/sigma^2 * exp(r^2/(2 sigma^2)) = |y|
    //              by bracketed bisection
    // Returns exactly 0 at y = 0 for every variant.
    void conjugate_grad(std::span<const double> y, std::span<double> out) const;

    // g*(y). Closed form for Lp/Quadratic; for Exp evaluated through the
    // Fenchel identity g*(y) = <y, grad g*(y)> - g(grad g*(y)).
    double conjugate_value(std::span<const double> y) const;

  private:
    YoungFunction() = default;

    Kind kind_ = Kind::Lp;
    double p_ = 2.0;
    double q_ = 2.0;
    double sigma_ = 1.0;
    std::vector<double> h_diag_;
};

} // namespace gwg
