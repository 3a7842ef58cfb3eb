#include "msig/polynomial.hpp"

#include <stdexcept>
#include <utility>

namespace msig {

Polynomial::Polynomial(std::vector<double> c) : coeffs(std::move(c)) {
    if (coeffs.empty()) throw std::invalid_argument("polynomial needs at least one coefficient");
}

Polynomial drift_polynomial(const std::vector<double>& beta) {
    if (beta.empty()) throw std::invalid_argument("drift polynomial needs degree >= 1");
    std::vector<double> c(beta.size() + 1, 0.0);
    for (std::size_t j = 0; j < beta.size(); ++j) c[j + 1] = beta[j];
    return Polynomial(std::move(c));
}

double poly_eval(const Polynomial& p, double t) {
    double acc = 0.0;
    for (std::size_t k = p.coeffs.size(); k-- > 0;) acc = acc * t + p.coeffs[k];
    return acc;
}

Polynomial poly_derivative(const Polynomial& p) {
    if (p.degree() < 1) throw std::invalid_argument("constant polynomial");
    std::vector<double> c(p.coeffs.size() - 1);
    for (std::size_t k = 1; k < p.coeffs.size(); ++k) c[k - 1] = static_cast<double>(k) * p.coeffs[k];
    return Polynomial(std::move(c));
}

std::vector<double> drift_coefficients(const Polynomial& q) {
    if (q.degree() < 1 || q.coeffs[0] != 0.0)
        throw std::invalid_argument("not a drift polynomial: needs zero constant term and degree >= 1");
    return std::vector<double>(q.coeffs.begin() + 1, q.coeffs.end());
}

}  // namespace msig
