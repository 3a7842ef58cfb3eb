#pragma once

#include <vector>

namespace msig {

// Dense univariate polynomial; coeffs[k] multiplies t^k.
// One type hosts both the drift exponent Q (zero constant term) and general
// polynomials such as its derivative P or a shifted reparametrization.
struct Polynomial {
    std::vector<double> coeffs;

    Polynomial() = default;
    explicit Polynomial(std::vector<double> c);

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

// Builds Q from beta = (beta_1 .. beta_p); the constant term is forced to zero.
Polynomial drift_polynomial(const std::vector<double>& beta);

// Horner evaluation of sum c_l t^l.
double poly_eval(const Polynomial& p, double t);

// Term-by-term derivative; a degree-0 input is rejected.
Polynomial poly_derivative(const Polynomial& p);

// Returns beta_1 .. beta_p of a zero-constant-term polynomial.
std::vector<double> drift_coefficients(const Polynomial& q);

}  // namespace msig
